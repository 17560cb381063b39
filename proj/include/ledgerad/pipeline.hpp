#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ledgerad {

struct PipelineConfig {
    std::filesystem::path ledger;
    std::optional<std::filesystem::path> user_map;
    std::optional<std::filesystem::path> truth;
    std::filesystem::path out_dir = "out";

    std::size_t sample_limit = 100'000;  // rows per graph
    bool user_graph = true;
    bool tx_graph = true;
    bool gaussian = true;
    bool ocsvm = true;

    // k-means baseline: a fixed shared k, per-graph k, or selection over
    // [k_min, k_max]. With shared_k the user graph's choice (or the only
    // graph's) is used for both graphs.
    std::optional<std::size_t> k;
    std::optional<std::size_t> k_user;
    std::optional<std::size_t> k_tx;
    bool shared_k = true;
    std::size_t k_min = 1;
    std::size_t k_max = 10;

    double quantile = 0.01;
    std::optional<double> epsilon;  // overrides quantile when set

    double nu = 0.005;
    std::vector<double> nu_candidates;  // non-empty: sweep and refit at the best ν
    std::optional<double> gamma;  // default 1/n per graph
    double smo_tol = 1e-3;
    std::size_t cache_mb = 512;
    std::size_t full_kernel_limit = 20'000;

    std::size_t top_n = 100;  // Visualization Evaluation and ground-truth hits
    std::size_t dual_n = 100;
    std::size_t dual_m = 100;
    std::uint64_t seed = 0;
    bool svg = true;
};

class PipelineError : public std::runtime_error {
public:
    PipelineError(std::string stage, const std::string& message)
        : std::runtime_error("[" + stage + "] " + message), stage_(std::move(stage)) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct PipelineReport {
    std::vector<std::filesystem::path> outputs;
    std::vector<std::string> warnings;
};

/// parse → graphs → features → normalize → k-means → detectors → evaluation.
/// On failure every file written so far is removed and a PipelineError
/// naming the stage is thrown.
PipelineReport run_pipeline(const PipelineConfig& config);

}  // namespace ledgerad
