#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cfgmm/em.hpp"
#include "cfgmm/model.hpp"
#include "cfgmm/rng.hpp"

// Simulation/benchmark harness: draws mixture samples, fits them with the
// selected estimators across replicates and sample sizes, and aggregates
// bias, variance, timing and convergence into machine-readable reports.
// Within a replicate all methods fit the identical dataset with the same
// derived fit seed, so comparisons are paired. Replicates are independent
// work units; each derives its seed from (master seed, sample-size index,
// replicate index) so results do not depend on scheduling.

namespace cfgmm {

enum class Method {
    Cfgmm,
    ConstrainedCfgmm,
    BaselineGmm,
};

std::string to_string(Method m);
Method method_from_string(const std::string& name);

struct SimulationSpec {
    std::string design = "custom";
    MixtureModel true_model;
    std::vector<std::size_t> sample_sizes = {100, 1000, 10000};
    int replicates = 100;
    ModeBounds bounds;  // must match K when ConstrainedCfgmm is selected
    std::vector<Method> methods = {Method::Cfgmm, Method::ConstrainedCfgmm, Method::BaselineGmm};
    std::uint64_t seed = 0;
    double winsor_level = 0.95;
    int workers = 0;  // 0 = machine parallelism

    void validate() const;
};

// The two simulation designs studied in the reference experiments, with
// their mode-constraint presets.
SimulationSpec preset_2comp();
SimulationSpec preset_3comp();

// One row per (method, sample size, replicate, component, parameter).
struct LongRecord {
    Method method;
    std::string design;
    std::size_t n;
    int replicate;
    int component;          // 1-based
    std::string parameter;  // shape | scale | weight
    double true_value;
    double estimate;
    bool converged;
    int iterations;
    double wall_time_ms;
};

struct AggregateRecord {
    Method method;
    std::string design;
    std::size_t n;
    int component;
    std::string parameter;
    double true_value;
    double bias;             // mean error over converged replicates
    double winsorized_bias;  // mean of winsorized errors
    double median_bias;
    double variance;  // sample variance of converged estimates
    int n_converged;
    double convergence_proportion;
    double wall_ms_min;
    double wall_ms_median;
    double wall_ms_max;
};

struct SimulationReport {
    std::string design;
    std::uint64_t seed = 0;
    int replicates = 0;
    double winsor_level = 0.95;
    int workers = 1;
    std::vector<std::size_t> sample_sizes;
    std::vector<Method> methods;
    MixtureModel true_model;
    ModeBounds bounds;
    FitConfig config;
    std::string software_version;
    std::vector<LongRecord> long_records;
    std::vector<AggregateRecord> aggregates;
};

// Labels from categorical(weights), then a draw from the labeled component.
// A single-component model consumes the stream exactly like gamma_sample.
// `labels` (0-based component indices), when non-null, receives one entry
// per draw.
std::vector<double> generate_mixture_sample(const MixtureModel& model, std::size_t n, Rng& rng,
                                            std::vector<int>* labels = nullptr);

// Symmetric winsorization: clamp below the (1-level)/2 and above the
// 1-(1-level)/2 quantiles (linear-interpolation quantiles). level = 1 is
// the identity.
std::vector<double> winsorize(std::span<const double> values, double level);

// Linear-interpolation quantile of an unsorted sample, p in [0, 1].
double quantile(std::span<const double> values, double p);

// Fitted-to-true component assignment minimizing the total absolute
// difference of component means; exhaustive over permutations (K <= 8).
// Returns p with fitted[p[k]] matched to truth component k.
std::vector<std::size_t> match_components(const MixtureModel& fitted, const MixtureModel& truth);

// Runs the full grid. config.seed and config.exec are ignored: unit fits
// run with serial kernels under derived seeds (replicate-level parallelism
// owns the worker pool).
SimulationReport run_experiment(const SimulationSpec& spec, const FitConfig& config);

// Serialization. CSV doubles use shortest round-trip formatting; JSON
// carries a schema_version field and re-emits byte-identically after a
// parse. Non-finite bounds are encoded as "-inf"/"inf" strings.
std::string to_csv_long(const SimulationReport& report);
std::string to_csv_aggregate(const SimulationReport& report);
std::string to_json_string(const SimulationReport& report);
SimulationReport report_from_json(const std::string& text);
std::vector<LongRecord> long_records_from_csv(const std::string& text);

// Writes <stem>.long.csv, <stem>.agg.csv and <stem>.json.
void write_report_files(const SimulationReport& report, const std::string& stem);

}  // namespace cfgmm
