#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "gih/data.hpp"
#include "gih/matrix.hpp"

namespace gih::harness {

struct ExperimentConfig {
    std::string id;
    nlohmann::json params;  // overrides merged over the experiment defaults
    std::filesystem::path out_dir;
    uint64_t seed = 1;
    int threads = 0;
};

std::vector<std::string> experiment_ids();
bool is_known_experiment(const std::string& id);
std::string experiment_target(const std::string& id);
nlohmann::json default_params(const std::string& id);

// Runs one experiment: writes manifest.json, CSV tables, and SVG plots into
// config.out_dir. Rerunning the same config reproduces the CSVs bitwise.
std::filesystem::path run_experiment(const ExperimentConfig& config);

// Plot description for render_report.
struct PlotSpec {
    enum class Kind { Lines, Heatmap };
    Kind kind = Kind::Lines;
    std::string title, x_label, y_label;
    std::string x_column;
    std::vector<std::pair<std::string, std::string>> series;  // csv column -> legend label
};

// Renders a CSV that conforms to the spec's columns into a self-contained
// SVG. An empty or non-conforming CSV raises before any file is written.
std::filesystem::path render_report(const std::filesystem::path& csv, const PlotSpec& spec,
                                    const std::filesystem::path& out_svg);

// --- structured results, reused by the acceptance suite ---

struct TheoremClaim {
    std::string id;
    double analytic = 0.0;
    double mc = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};
struct TheoremReport {
    std::vector<TheoremClaim> claims;
    bool all_pass() const;
};
TheoremReport run_verify_theorems(const nlohmann::json& params, uint64_t seed,
                                  const std::vector<std::string>& only = {});

struct Conjecture1Result {
    std::vector<int> epochs;
    std::vector<double> corr_s, corr_gsg;
};
Conjecture1Result run_conjecture1(const nlohmann::json& params, uint64_t seed);

struct VelocityResult {
    std::vector<int> epochs;  // epochs where a velocity is defined
    std::vector<double> acc_gcov, vel_gcov, acc_flip, vel_flip;
    double final_acc_gcov = 0.0, final_acc_flip = 0.0;
    double mean_vel_gcov = 0.0, mean_vel_flip = 0.0;
};
VelocityResult run_velocity(const nlohmann::json& params, uint64_t seed);

struct SpectrumLabelsRow {
    std::string arch;
    int index = 0;
    double eigenvalue = 0.0;
    uint64_t seed = 0;
    double train_acc = 0.0, test_acc = 0.0;
};
std::vector<SpectrumLabelsRow> run_spectrum_labels(const nlohmann::json& params, uint64_t seed);

struct SbhRow {
    int index = 0;
    double eigenvalue = 0.0;
    uint64_t seed = 0;
    double linear_acc = 0.0, nonlinear_acc = 0.0, train_acc = 0.0;
};
std::vector<SbhRow> run_sbh(const nlohmann::json& params, uint64_t seed);

struct PruneFeaturesRow {
    uint64_t seed = 0;
    std::size_t k = 0, k_random = 0;
    double acc_gih = 0.0, acc_random = 0.0, acc_full = 0.0;
};
std::vector<PruneFeaturesRow> run_prune_features(const nlohmann::json& params, uint64_t seed);

struct PruneSamplesRow {
    uint64_t seed = 0;
    double fraction = 0.0;
    double acc_score = 0.0, acc_random = 0.0, acc_full = 0.0;
};
std::vector<PruneSamplesRow> run_prune_samples(const nlohmann::json& params, uint64_t seed);

// Seed-averaged linear-component reliance, rank-correlated with the swept
// eigenvector index.
double sbh_reliance_spearman(const std::vector<SbhRow>& rows);

// Gaussian inputs with i.i.d. random labels; utility shared by claims/tests.
data::Dataset gen_labeled_gaussian_random(const SymMatrix& cov, std::size_t m, uint64_t seed);

}  // namespace gih::harness
