#pragma once

#include "ecmbq/basq.hpp"
#include "ecmbq/criteria.hpp"
#include "ecmbq/ess.hpp"
#include "ecmbq/identifiability.hpp"
#include "ecmbq/oracle.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace ecmbq {

inline constexpr const char* kVersion = "0.1.0";

struct Preset {
    std::string name;
    EcmParams params;
    double log_sigma2 = 0.0;
    Eigen::Index m = 100;
    double span_decades = 7.0;
};

// "easy" (two well separated pairs, low noise) or "hard" (three pairs, two overlapping, high noise).
Preset preset(const std::string& name);

struct GenerateConfig {
    std::string preset = "easy";
    std::optional<EcmParams> params;  // overrides the preset circuit
    std::optional<double> log_sigma2;
    std::optional<Eigen::Index> m;
    std::optional<double> span_decades;
    std::uint64_t seed = 0;

    json to_json() const;
    static GenerateConfig from_json(const json& j);
};

Dataset make_dataset(const GenerateConfig& cfg);

struct SelectConfig {
    std::vector<int> orders{1, 2, 3, 4};
    BasqConfig basq;
    int map_evals = 2000;
    Eigen::Index posterior_draws = 20000;  // weighted proposal draws before resampling
    Eigen::Index posterior_samples = 1000;
    double prior_sd = 2.0;
    LikelihoodMode mode = LikelihoodMode::Residual;
    std::uint64_t seed = 0;

    json to_json() const;
    static SelectConfig from_json(const json& j);
};

// BASQ plus every competing criterion for one model order. Failures are recorded, not thrown.
ModelCriteria evaluate_model(const Dataset& data, int n_pairs, const SelectConfig& cfg, BasqResult* run = nullptr);
CriteriaReport select_models(const Dataset& data, const SelectConfig& cfg);

struct SweepRanges {
    Eigen::Index m_min = 25;
    Eigen::Index m_max = 400;
    double r_total_min = -2.0, r_total_max = 2.0;
    double r_prime_min = -2.0, r_prime_max = 2.0;
    double tau_min = -2.0, tau_max = 2.0;
    double log_sigma2_min = -10.0, log_sigma2_max = -1.0;
    double r2 = 0.1;     // fixed fraction of the second pair
    double tau2 = 0.0;   // fixed standardised time constant of the second pair
    double span_decades = 7.0;

    json to_json() const;
};

struct SensitivityConfig {
    int n_datasets = 1024;
    SweepRanges ranges;
    BasqConfig basq;
    long js_samples = 100000;
    int map_evals = 500;
    std::uint64_t seed = 0;

    json to_json() const;
    static SensitivityConfig from_json(const json& j);
};

// n x 5 Latin hypercube in [0, 1).
Matrix latin_hypercube(int n, int dims, Rng& rng);

struct SensitivityResult {
    std::vector<SensitivityRecord> records;
    std::vector<std::string> failures;
    CorrelationResult correlation;
    BicRegression regression;

    std::string records_csv() const;
    std::string correlation_table() const;
    json to_json() const;
};

SensitivityResult run_sensitivity(const SensitivityConfig& cfg);

struct BenchmarkConfig {
    int n_pairs = 2;
    long budget = 2500;  // likelihood evaluations per engine
    BasqConfig basq;
    OracleConfig oracle;
    std::uint64_t seed = 0;

    json to_json() const;
    static BenchmarkConfig from_json(const json& j);
};

struct BenchmarkResult {
    double oracle_lem = kNegInf;
    double oracle_se = 0.0;
    RunHistory basq;
    std::vector<CurveRow> ess;
    double basq_final = kNegInf;
    double ess_final = kNegInf;
    long basq_evals = 0;
    long ess_evals = 0;
    double basq_time_s = 0.0;
    double ess_time_s = 0.0;

    double basq_error() const { return std::abs(basq_final - oracle_lem); }
    double ess_error() const { return std::abs(ess_final - oracle_lem); }
    // engine,iter,n_evals,wall_time_s,value,oracle
    std::string overlay_csv() const;
    json to_json() const;
};

BenchmarkResult run_benchmark(const Dataset& data, const BenchmarkConfig& cfg);

struct AblationRow {
    WarpConfig warp;
    EvidenceEstimate estimate;
};

struct AblationConfig {
    int n_pairs = 2;
    BasqConfig basq;
    std::uint64_t seed = 0;

    json to_json() const;
    static AblationConfig from_json(const json& j);
};

std::vector<AblationRow> run_ablation(const Dataset& data, const AblationConfig& cfg);
std::string ablation_table(const std::vector<AblationRow>& rows);
json ablation_json(const std::vector<AblationRow>& rows);

// Identifiability metrics from a synthetic dataset's generator record; MissingMetadata otherwise.
IdentifiabilityReport identify_dataset(const Dataset& data, long n_is, std::uint64_t seed);

// Resolved configuration, seed and version written next to every command's outputs.
json make_manifest(const std::string& command, const json& config, std::uint64_t seed,
                   const std::vector<std::string>& outputs);
void write_manifest(const std::filesystem::path& dir, const json& manifest);

}  // namespace ecmbq
