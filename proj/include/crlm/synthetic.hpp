#pragma once

// Synthetic CRLM cohort generator. Baseline marginals follow the published
// Table I characteristics; an optional planted signal ties early recurrence to
// a latent hepatic-metabolic factor.
//
// Emitted variables (all baseline unless noted):
//   continuous  age, bmi, nash_score, liver_hu, cea (~8% missing),
//               ca19_9 (~35% missing), albumin, total_bilirubin, alt,
//               platelet_count, n_liver_lesions, largest_lesion_cm,
//               disease_free_interval_months, bmi_age_interaction (derived)
//   categorical sex, primary_site, synchronous_metastases,
//               extrahepatic_disease, tumor_size_le5cm, diabetes,
//               hypertension, comorbidity, kras_mutation (~12% missing),
//               node_positive_primary, bilobar_disease, neoadjuvant_chemo,
//               asa_class
//   radiomic    original_firstorder_Mean_mean,
//               original_shape_Maximum3DDiameter_mean,
//               original_glcm_JointEntropy_mean,
//               original_glrlm_RunPercentage_mean,
//               original_glszm_ZonePercentage_mean
//   postoperative  postop_complication, adjuvant_chemo, postop_cea_3m
//   outcome     vital_status_DFS, progression_or_recurrence_liveronly,
//               vital_status_liver_DFS, dfs_interval_months
//
// Recurrence time is min(T_signal, T_background): T_signal is exponential
// with log-rate -3.2 + 1.8*L - 0.3*comorbidity + 0.35*extrahepatic
// + 0.2*(size > 5 cm), where L ~ N(0,1) is the latent metabolic factor
// (without the planted signal the 1.8*L term is replaced by its mean
// contribution); T_background is Weibull(shape 3, scale 10 months) for half
// of the patients and absent otherwise. nash_score, bmi and liver_hu are noisy
// proxies of L. Follow-up is Uniform(24, 60) months and every patient
// survives beyond 3 months.

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crlm/cohort.hpp"
#include "crlm/core/rng.hpp"

namespace crlm {

enum class PlantedSignal { none, metabolic };

inline PlantedSignal parse_signal(const std::string& s) {
    if (s == "none") return PlantedSignal::none;
    if (s == "metabolic") return PlantedSignal::metabolic;
    throw Error(ErrorCode::InvalidArgument, "planted signal must be 'none' or 'metabolic', got '" + s + "'");
}

inline std::string to_string(PlantedSignal s) { return s == PlantedSignal::none ? "none" : "metabolic"; }

namespace detail {

inline double round2(double x) { return std::round(x * 100.0) / 100.0; }

inline std::string flag(bool b) { return b ? "1" : "0"; }

inline std::vector<VariableSchema> synthetic_schema() {
    using K = VariableKind;
    using T = TemporalTag;
    using P = Provenance;
    auto v = [](std::string name, K k, T t, P p = P::clinical) { return VariableSchema{std::move(name), k, t, p, 0.0}; };
    return {
        v("age", K::continuous, T::baseline),
        v("sex", K::categorical, T::baseline),
        v("bmi", K::continuous, T::baseline),
        v("nash_score", K::continuous, T::baseline),
        v("liver_hu", K::continuous, T::baseline),
        v("primary_site", K::categorical, T::baseline),
        v("synchronous_metastases", K::categorical, T::baseline),
        v("extrahepatic_disease", K::categorical, T::baseline),
        v("tumor_size_le5cm", K::categorical, T::baseline),
        v("largest_lesion_cm", K::continuous, T::baseline),
        v("n_liver_lesions", K::continuous, T::baseline),
        v("bilobar_disease", K::categorical, T::baseline),
        v("disease_free_interval_months", K::continuous, T::baseline),
        v("node_positive_primary", K::categorical, T::baseline),
        v("kras_mutation", K::categorical, T::baseline),
        v("diabetes", K::categorical, T::baseline),
        v("hypertension", K::categorical, T::baseline),
        v("comorbidity", K::categorical, T::baseline),
        v("asa_class", K::categorical, T::baseline),
        v("neoadjuvant_chemo", K::categorical, T::baseline),
        v("cea", K::continuous, T::baseline),
        v("ca19_9", K::continuous, T::baseline),
        v("albumin", K::continuous, T::baseline),
        v("total_bilirubin", K::continuous, T::baseline),
        v("alt", K::continuous, T::baseline),
        v("platelet_count", K::continuous, T::baseline),
        v("bmi_age_interaction", K::continuous, T::baseline, P::derived),
        v("original_firstorder_Mean_mean", K::continuous, T::baseline, P::radiomic),
        v("original_shape_Maximum3DDiameter_mean", K::continuous, T::baseline, P::radiomic),
        v("original_glcm_JointEntropy_mean", K::continuous, T::baseline, P::radiomic),
        v("original_glrlm_RunPercentage_mean", K::continuous, T::baseline, P::radiomic),
        v("original_glszm_ZonePercentage_mean", K::continuous, T::baseline, P::radiomic),
        v("postop_complication", K::categorical, T::postoperative),
        v("adjuvant_chemo", K::categorical, T::postoperative),
        v("postop_cea_3m", K::continuous, T::postoperative),
        v("vital_status_DFS", K::categorical, T::outcome),
        v("progression_or_recurrence_liveronly", K::categorical, T::outcome),
        v("vital_status_liver_DFS", K::categorical, T::outcome),
        v("dfs_interval_months", K::continuous, T::outcome),
    };
}

inline std::string patient_id(std::size_t i, std::size_t n) {
    std::string digits = std::to_string(i + 1);
    const std::size_t width = std::max<std::size_t>(4, std::to_string(n).size());
    return "P" + std::string(width - std::min(width, digits.size()), '0') + digits;
}

}  // namespace detail

struct SyntheticParams {
    double signal_intercept = -3.2;
    double signal_slope = 1.8;
    double comorbidity_effect = -0.3;
    double extrahepatic_effect = 0.35;
    double large_tumor_effect = 0.2;
    double background_fraction = 0.5;
    double background_shape = 3.0;
    double background_scale = 10.0;
    double proxy_noise = 1.6;
};

inline Cohort generate_synthetic_cohort(std::size_t n, std::uint64_t seed, PlantedSignal signal,
                                        const SyntheticParams& p = {}) {
    require(n >= 10, ErrorCode::InvalidArgument, "synthetic cohort needs n >= 10, got " + std::to_string(n));
    Rng rng(seed);
    std::vector<PatientRecord> records;
    records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PatientRecord rec;
        rec.id = detail::patient_id(i, n);
        auto& v = rec.variables;

        const double latent = rng.normal();
        const double age = std::clamp(rng.normal(62.1, 11.5), 18.0, 95.0);
        const bool male = rng.bernoulli(0.599);
        const bool colon = rng.bernoulli(0.701);
        const bool synchronous = rng.bernoulli(0.589);
        const bool extrahepatic = rng.bernoulli(0.228);
        const bool small = rng.bernoulli(0.396);
        const double size_cm = small ? rng.uniform(1.0, 5.0) : 5.0 + rng.exponential(1.0 / 2.5);
        const double nash = std::max(0.0, 2.5 + 1.2 * latent + rng.normal(0.0, 1.0 * p.proxy_noise));
        const double bmi = 25.5 + 2.5 * latent + rng.normal(0.0, 2.5 * p.proxy_noise);
        const double liver_hu = 55.0 - 7.0 * latent + rng.normal(0.0, 6.0 * p.proxy_noise);
        const bool diabetes = rng.bernoulli(0.18);
        const bool hypertension = rng.bernoulli(0.35);
        const bool comorbid = diabetes || hypertension;
        const double lesions = 1.0 + std::floor(rng.exponential(1.0 / 1.5));
        const bool bilobar = lesions > 1.0 && rng.bernoulli(0.5);
        const double dfi = synchronous ? 0.0 : rng.exponential(1.0 / 18.0);
        const bool node_positive = rng.bernoulli(0.6);
        const bool kras_missing = rng.bernoulli(0.12);
        const bool kras = rng.bernoulli(0.45);
        const double asa_u = rng.uniform();
        const std::string asa = asa_u < 0.2 ? "I" : (asa_u < 0.8 ? "II" : "III");
        const bool neoadjuvant = rng.bernoulli(0.55);
        const double cea = std::exp(rng.normal(1.5 + 0.2 * (extrahepatic ? 1.0 : 0.0), 1.0));
        const bool cea_missing = rng.bernoulli(0.08);
        const double ca199 = std::exp(rng.normal(3.0, 1.2));
        const bool ca199_missing = rng.bernoulli(0.35);
        const double albumin = rng.normal(40.0, 4.0);
        const double bilirubin = std::exp(rng.normal(2.4, 0.4));
        const double alt = std::exp(rng.normal(3.2, 0.5));
        const double platelets = std::max(20.0, rng.normal(230.0, 60.0));

        const double tumor_hu = 70.0 + 0.5 * (liver_hu - 55.0) + rng.normal(0.0, 8.0);
        const double diameter_mm = size_cm * 10.0 * rng.uniform(0.9, 1.2);
        const double glcm_entropy = rng.normal(4.0 + 0.15 * latent, 0.6);
        const double glrlm_rp = rng.normal(0.8, 0.05);
        const double glszm_zp = rng.normal(0.4, 0.08);

        // Event times.
        const double slope_term = signal == PlantedSignal::metabolic
                                      ? p.signal_slope * latent
                                      : 0.5 * p.signal_slope * p.signal_slope;  // log E[exp(slope * L)]
        const double log_rate = p.signal_intercept + slope_term + p.comorbidity_effect * (comorbid ? 1.0 : 0.0) +
                                p.extrahepatic_effect * (extrahepatic ? 1.0 : 0.0) +
                                p.large_tumor_effect * (small ? 0.0 : 1.0);
        const double t_signal = rng.exponential(std::exp(log_rate));
        const bool has_background = rng.bernoulli(p.background_fraction);
        const double t_background_draw = rng.weibull(p.background_shape, p.background_scale);
        const double t_rec = has_background ? std::min(t_signal, t_background_draw) : t_signal;
        const double follow_up = rng.uniform(24.0, 60.0);
        const bool recurred = t_rec <= follow_up;
        const double death_gap = rng.exponential(1.0 / 24.0);
        const double death_no_rec = rng.exponential(1.0 / 150.0);
        const double t_death = recurred ? std::max(t_rec, 3.0) + death_gap : 3.0 + death_no_rec;
        const bool liver_only = rng.bernoulli(0.6);
        const bool complication = rng.bernoulli(0.25);
        const bool adjuvant = rng.bernoulli(0.6);
        const double postop_cea = 0.5 * cea + (t_rec <= 6.0 ? 5.0 : 0.0) + std::exp(rng.normal(0.0, 0.5));

        rec.recurrence_event = recurred ? 1 : 0;
        if (recurred) rec.months_to_progression = std::max(0.01, detail::round2(t_rec));
        rec.os_months = detail::round2(std::min(t_death, follow_up));
        rec.os_event = t_death <= follow_up ? 1 : 0;
        const double dfs_time = std::min({t_rec, t_death, follow_up});
        rec.dfs_event = (recurred || t_death <= follow_up) ? 1 : 0;
        rec.dfs_months = recurred ? *rec.months_to_progression : detail::round2(dfs_time);

        v["age"] = detail::round2(age);
        v["sex"] = std::string(male ? "M" : "F");
        v["bmi"] = detail::round2(bmi);
        v["nash_score"] = detail::round2(nash);
        v["liver_hu"] = detail::round2(liver_hu);
        v["primary_site"] = std::string(colon ? "colon" : "rectum");
        v["synchronous_metastases"] = detail::flag(synchronous);
        v["extrahepatic_disease"] = detail::flag(extrahepatic);
        v["tumor_size_le5cm"] = detail::flag(small);
        v["largest_lesion_cm"] = detail::round2(size_cm);
        v["n_liver_lesions"] = lesions;
        v["bilobar_disease"] = detail::flag(bilobar);
        v["disease_free_interval_months"] = detail::round2(dfi);
        v["node_positive_primary"] = detail::flag(node_positive);
        v["kras_mutation"] = kras_missing ? Value{} : Value{detail::flag(kras)};
        v["diabetes"] = detail::flag(diabetes);
        v["hypertension"] = detail::flag(hypertension);
        v["comorbidity"] = detail::flag(comorbid);
        v["asa_class"] = asa;
        v["neoadjuvant_chemo"] = detail::flag(neoadjuvant);
        v["cea"] = cea_missing ? Value{} : Value{detail::round2(cea)};
        v["ca19_9"] = ca199_missing ? Value{} : Value{detail::round2(ca199)};
        v["albumin"] = detail::round2(albumin);
        v["total_bilirubin"] = detail::round2(bilirubin);
        v["alt"] = detail::round2(alt);
        v["platelet_count"] = detail::round2(platelets);
        v["bmi_age_interaction"] = detail::round2(bmi * age / 100.0);
        v["original_firstorder_Mean_mean"] = detail::round2(tumor_hu);
        v["original_shape_Maximum3DDiameter_mean"] = detail::round2(diameter_mm);
        v["original_glcm_JointEntropy_mean"] = detail::round2(glcm_entropy);
        v["original_glrlm_RunPercentage_mean"] = std::round(glrlm_rp * 1e4) / 1e4;
        v["original_glszm_ZonePercentage_mean"] = std::round(glszm_zp * 1e4) / 1e4;
        v["postop_complication"] = detail::flag(complication);
        v["adjuvant_chemo"] = detail::flag(adjuvant);
        v["postop_cea_3m"] = detail::round2(postop_cea);
        v["vital_status_DFS"] = detail::flag(rec.dfs_event == 1);
        v["progression_or_recurrence_liveronly"] = detail::flag(recurred && liver_only);
        v["vital_status_liver_DFS"] = detail::flag((recurred && liver_only) || rec.os_event == 1);
        v["dfs_interval_months"] = rec.dfs_months;

        records.push_back(std::move(rec));
    }
    return Cohort(std::move(records), detail::synthetic_schema());
}

}  // namespace crlm
