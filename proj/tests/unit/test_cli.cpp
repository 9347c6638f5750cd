#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cli/app.hpp"
#include "crlm/cohort.hpp"
#include "crlm/core/text.hpp"

using namespace crlm;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / (std::string("crlm_cli_") + info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    std::string path(const std::string& rel) const { return (root_ / rel).string(); }

    int run(std::vector<std::string> args) {
        // keep the test log readable
        std::streambuf* saved = std::cout.rdbuf();
        std::ostringstream sink;
        std::cout.rdbuf(sink.rdbuf());
        const int code = cli::run(args);
        std::cout.rdbuf(saved);
        return code;
    }

    int generate(const std::string& dir, int n, int seed) {
        return run({"generate", "--n", std::to_string(n), "--seed", std::to_string(seed), "--out", path(dir)});
    }

    fs::path root_;
};

std::vector<std::vector<std::string>> data_rows(const std::string& file) {
    std::string body;
    std::istringstream in(read_file(file));
    for (std::string line; std::getline(in, line);)
        if (line.empty() || line[0] != '#') body += line + "\n";
    return parse_csv_text(body);
}

}  // namespace

TEST(ConfigHash, KeyOrderAndValues) {
    const json a = json::parse(R"({"seed": 1, "n": 197, "signal": "metabolic"})");
    const json b = json::parse(R"({"signal": "metabolic", "n": 197, "seed": 1})");
    const json c = json::parse(R"({"signal": "metabolic", "n": 198, "seed": 1})");
    const auto h = cli::config_hash(a);
    EXPECT_EQ(h.size(), 16u);
    EXPECT_EQ(h, cli::config_hash(b));
    EXPECT_NE(h, cli::config_hash(c));
}

TEST_F(CliTest, GenerateIsDeterministic) {
    ASSERT_EQ(generate("a", 197, 7), cli::ok);
    ASSERT_EQ(generate("b", 197, 7), cli::ok);
    for (const char* f : {"cohort.csv", "schema.json", "manifest.json"})
        EXPECT_EQ(read_file(path(std::string("a/") + f)), read_file(path(std::string("b/") + f))) << f;
    const json m = json::parse(read_file(path("a/manifest.json")));
    const std::string hash = m.at("config_hash");
    EXPECT_EQ(hash, cli::config_hash(m.at("config")));
    EXPECT_EQ(read_file(path("a/cohort.csv")).rfind("# config_hash=" + hash + "\n", 0), 0u);
    const auto cohort = load_cohort_csv(path("a/cohort.csv"), path("a/schema.json"));
    EXPECT_EQ(cohort.size(), 197u);
    ASSERT_EQ(generate("c", 197, 8), cli::ok);
    EXPECT_NE(read_file(path("a/cohort.csv")), read_file(path("c/cohort.csv")));
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
    write_file(path("cfg.json"), R"({"n": 40, "seed": 3})");
    ASSERT_EQ(run({"generate", "--config", path("cfg.json"), "--n", "50", "--out", path("g")}), cli::ok);
    const json m = json::parse(read_file(path("g/manifest.json")));
    EXPECT_EQ(m.at("config").at("n").get<int>(), 50);
    EXPECT_EQ(m.at("config").at("seed").get<int>(), 3);
}

TEST_F(CliTest, InputErrorsExitTwo) {
    EXPECT_EQ(generate("small", 5, 1), cli::input_error);
    EXPECT_EQ(run({"no-such-command"}), cli::input_error);
    EXPECT_EQ(run({"generate", "--n", "abc", "--out", path("x")}), cli::input_error);
    ASSERT_EQ(generate("c", 60, 1), cli::ok);
    // train-eval needs --seed
    EXPECT_EQ(run({"train-eval", "--cohort", path("c/cohort.csv"), "--schema", path("c/schema.json"), "--out", path("t")}),
              cli::input_error);
    EXPECT_EQ(run({"train-eval", "--seed", "1", "--cohort", path("missing.csv"), "--schema", path("c/schema.json"),
                   "--out", path("t")}),
              cli::input_error);
    write_file(path("bad_cfg.json"), "{not json");
    EXPECT_EQ(run({"generate", "--config", path("bad_cfg.json"), "--out", path("y")}), cli::input_error);
}

TEST_F(CliTest, TrainEvalVerifyRoundTrip) {
    ASSERT_EQ(generate("c", 300, 4), cli::ok);
    const std::vector<std::string> args{"train-eval",  "--seed",   "4", "--cohort", path("c/cohort.csv"),
                                        "--schema",    path("c/schema.json"), "--horizons", "3",
                                        "--model",     "lasso",   "--bootstrap-iterations", "100",
                                        "--cv-folds",  "0",       "--no-diagnostic-audit"};
    auto a = args;
    a.insert(a.end(), {"--out", path("t1")});
    auto b = args;
    b.insert(b.end(), {"--out", path("t2")});
    ASSERT_EQ(run(a), cli::ok);
    ASSERT_EQ(run(b), cli::ok);
    const json m = json::parse(read_file(path("t1/manifest.json")));
    EXPECT_FALSE(m.at("config").at("diagnostic_audit").get<bool>());
    for (const auto& [name, h] : m.at("artifacts").items()) {
        EXPECT_EQ(read_file(path("t1/" + name)), read_file(path("t2/" + name))) << name;
        if (name.ends_with(".json")) {
            const json j = json::parse(read_file(path("t1/" + name)));
            EXPECT_EQ(j.at("config_hash"), m.at("config_hash")) << name;
        }
    }
    EXPECT_TRUE(m.at("artifacts").contains("scores.csv"));
    EXPECT_EQ(run({"verify", "--manifest", path("t1")}), cli::ok);

    // a stale artifact hash is a mismatch
    json tampered = m;
    tampered["artifacts"]["scores.csv"] = "0000000000000000";
    write_file(path("t2/manifest.json"), tampered.dump(2));
    EXPECT_EQ(run({"verify", "--manifest", path("t2/manifest.json")}), cli::verify_mismatch);

    // so is a changed input
    ASSERT_EQ(generate("c", 300, 5), cli::ok);
    EXPECT_EQ(run({"verify", "--manifest", path("t1")}), cli::verify_mismatch);
}

TEST_F(CliTest, SurvivalSeparationExitsThree) {
    ASSERT_EQ(generate("c", 150, 6), cli::ok);
    const auto cohort = load_cohort_csv(path("c/cohort.csv"), path("c/schema.json"));
    // shorter survival gets the higher score, so risk groups separate perfectly
    std::string scores = "horizon,id,label,score\n";
    for (const auto& r : cohort.records()) scores += "3," + r.id + ",0," + format_double(-r.os_months) + "\n";
    write_file(path("scores.csv"), scores);
    EXPECT_EQ(run({"survival", "--cohort", path("c/cohort.csv"), "--schema", path("c/schema.json"), "--scores",
                   path("scores.csv"), "--out", path("s")}),
              cli::non_convergence);
    EXPECT_EQ(run({"survival", "--cohort", path("c/cohort.csv"), "--schema", path("c/schema.json"), "--group-by",
                   "metabolic", "--out", path("m")}),
              cli::ok);
    EXPECT_TRUE(fs::exists(path("m/km.svg")));
    EXPECT_TRUE(fs::exists(path("m/km.csv")));
}

TEST_F(CliTest, DcaOnPerfectScores) {
    std::string scores = "horizon,id,label,score\n";
    int pos = 0;
    for (int i = 0; i < 40; ++i) {
        const int y = i % 3 == 0;
        pos += y;
        scores += "3,P" + std::to_string(i) + "," + std::to_string(y) + "," + std::to_string(y) + "\n";
    }
    write_file(path("scores.csv"), scores);
    ASSERT_EQ(run({"dca", "--scores", path("scores.csv"), "--out", path("d")}), cli::ok);
    const auto rows = data_rows(path("d/dca.csv"));
    ASSERT_EQ(rows.at(0).at(1), "nb_model");
    ASSERT_EQ(rows.size(), 20u);
    for (std::size_t r = 1; r < rows.size(); ++r) EXPECT_NEAR(std::stod(rows[r][1]), pos / 40.0, 1e-12);
}
