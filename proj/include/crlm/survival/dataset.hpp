#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "crlm/core/error.hpp"
#include "crlm/core/matrix.hpp"

namespace crlm {

// Right-censored (time, event) data; event 1 = observed, 0 = censored.
struct SurvivalDataset {
    std::vector<double> time;
    std::vector<int> event;
    Matrix covariates;                        // optional, rows() == size() when present
    std::vector<std::string> covariate_names;
    std::vector<std::string> group;           // optional

    std::size_t size() const noexcept { return time.size(); }

    void validate() const {
        require(event.size() == time.size(), ErrorCode::DimensionMismatch, "time and event differ in length");
        for (std::size_t i = 0; i < time.size(); ++i) {
            require(std::isfinite(time[i]) && time[i] >= 0, ErrorCode::InvalidArgument,
                    "survival time must be finite and >= 0 (subject " + std::to_string(i) + ")");
            require(event[i] == 0 || event[i] == 1, ErrorCode::InvalidArgument, "event indicator must be 0 or 1");
        }
        if (!covariates.empty()) {
            require(covariates.rows() == time.size(), ErrorCode::DimensionMismatch, "covariate rows differ from subjects");
            require(covariate_names.empty() || covariate_names.size() == covariates.cols(), ErrorCode::DimensionMismatch,
                    "covariate names differ from covariate columns");
        }
        require(group.empty() || group.size() == time.size(), ErrorCode::DimensionMismatch,
                "group labels differ from subjects");
    }
};

}  // namespace crlm
