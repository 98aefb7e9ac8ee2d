#include "cfgmm/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <json.hpp>

#include "cfgmm/baseline.hpp"
#include "cfgmm/constrained.hpp"
#include "cfgmm/version.hpp"

namespace cfgmm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* kParameterNames[3] = {"shape", "scale", "weight"};

int effective_workers(int requested) {
#ifdef _OPENMP
    if (requested <= 0) return omp_get_max_threads();
    return requested;
#else
    (void)requested;
    return 1;
#endif
}

// shortest round-trip decimal form
std::string format_double(double v) {
    char buf[40];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

std::string format_bound(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return format_double(v);
}

double parse_bound(const std::string& s) {
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::stod(s);
}

double sample_median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size();
    return m % 2 == 1 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double sample_mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

double sample_variance(const std::vector<double>& v) {
    if (v.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const double mean = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / (static_cast<double>(v.size()) - 1.0);
}

}  // namespace

std::string to_string(Method m) {
    switch (m) {
        case Method::Cfgmm: return "cfgmm";
        case Method::ConstrainedCfgmm: return "constrained-cfgmm";
        case Method::BaselineGmm: return "baseline-gmm";
    }
    return "unknown";
}

Method method_from_string(const std::string& name) {
    if (name == "cfgmm") return Method::Cfgmm;
    if (name == "constrained-cfgmm" || name == "constrained") return Method::ConstrainedCfgmm;
    if (name == "baseline-gmm" || name == "baseline") return Method::BaselineGmm;
    throw std::invalid_argument("unknown method: " + name);
}

void SimulationSpec::validate() const {
    true_model.validate();
    if (replicates < 1) throw std::invalid_argument("SimulationSpec: replicates must be >= 1");
    if (sample_sizes.empty()) throw std::invalid_argument("SimulationSpec: no sample sizes");
    for (std::size_t n : sample_sizes) {
        if (n < 2 * true_model.order()) {
            throw std::invalid_argument("SimulationSpec: sample sizes must be >= 2K");
        }
    }
    if (methods.empty()) return;  // header-only report is allowed
    const bool constrained =
        std::find(methods.begin(), methods.end(), Method::ConstrainedCfgmm) != methods.end();
    if (constrained) {
        if (bounds.size() != true_model.order()) {
            throw std::invalid_argument(
                "SimulationSpec: constrained-cfgmm requires one mode interval per component");
        }
        bounds.validate();
    }
    if (!(winsor_level > 0.0 && winsor_level <= 1.0)) {
        throw std::invalid_argument("SimulationSpec: winsor_level must be in (0, 1]");
    }
}

SimulationSpec preset_2comp() {
    SimulationSpec spec;
    spec.design = "2comp";
    spec.true_model.components = {{0.5, 0.5, 0.3}, {8.0, 1.0 / 3.0, 0.7}};
    spec.bounds = ModeBounds({{-kInf, 0.0}, {0.0, 5.0}});
    return spec;
}

SimulationSpec preset_3comp() {
    SimulationSpec spec;
    spec.design = "3comp";
    spec.true_model.components = {{0.5, 2.0, 0.3}, {6.0, 1.0 / 3.0, 0.5}, {8.0, 1.0, 0.2}};
    spec.bounds = ModeBounds({{-kInf, 0.0}, {0.0, 5.0}, {5.0, 15.0}});
    return spec;
}

std::vector<double> generate_mixture_sample(const MixtureModel& model, std::size_t n, Rng& rng,
                                            std::vector<int>* labels) {
    model.validate();
    if (n < 1) throw std::invalid_argument("generate_mixture_sample: n must be >= 1");
    std::vector<double> out(n);
    if (labels != nullptr) labels->assign(n, 0);
    const std::size_t k = model.order();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t label = 0;
        if (k > 1) {
            const double u = rng.uniform();
            double cum = 0.0;
            label = k - 1;
            for (std::size_t j = 0; j < k; ++j) {
                cum += model.components[j].weight;
                if (u <= cum) {
                    label = j;
                    break;
                }
            }
        }
        const auto& c = model.components[label];
        out[i] = gamma_draw(GammaParams(c.shape, c.scale), rng);
        if (labels != nullptr) (*labels)[i] = static_cast<int>(label);
    }
    return out;
}

double quantile(std::span<const double> values, double p) {
    if (values.empty()) throw std::invalid_argument("quantile: empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("quantile: p must be in [0, 1]");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    const double h = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    const double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

std::vector<double> winsorize(std::span<const double> values, double level) {
    if (values.empty()) throw std::invalid_argument("winsorize: empty sample");
    if (!(level > 0.0 && level <= 1.0)) {
        throw std::invalid_argument("winsorize: level must be in (0, 1]");
    }
    std::vector<double> out(values.begin(), values.end());
    if (level == 1.0) return out;
    const double tail = (1.0 - level) / 2.0;
    const double lo = quantile(values, tail);
    const double hi = quantile(values, 1.0 - tail);
    for (auto& v : out) v = std::clamp(v, lo, hi);
    return out;
}

std::vector<std::size_t> match_components(const MixtureModel& fitted, const MixtureModel& truth) {
    const std::size_t k = truth.order();
    if (fitted.order() != k) {
        throw std::invalid_argument("match_components: component counts differ");
    }
    if (k > 8) throw std::invalid_argument("match_components: exhaustive matching capped at K=8");
    std::vector<std::size_t> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best = perm;
    double best_cost = kInf;
    do {
        double cost = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            cost += std::abs(fitted.components[perm[j]].mean() - truth.components[j].mean());
        }
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

namespace {

FitResult fit_with_method(Method m, std::span<const double> data, const SimulationSpec& spec,
                          const FitConfig& config) {
    switch (m) {
        case Method::Cfgmm: return multi_restart_fit(data, spec.true_model.order(), config);
        case Method::ConstrainedCfgmm:
            return constrained_multi_restart_fit(data, spec.true_model.order(), spec.bounds,
                                                 config);
        case Method::BaselineGmm:
            return baseline_multi_restart_fit(data, spec.true_model.order(), config);
    }
    throw std::logic_error("fit_with_method: unreachable");
}

std::vector<LongRecord> run_unit(const SimulationSpec& spec, const FitConfig& base_config,
                                 std::size_t size_index, int replicate) {
    const std::size_t n = spec.sample_sizes[size_index];
    const std::uint64_t unit_seed = mix_seed(mix_seed(spec.seed, size_index),
                                             static_cast<std::uint64_t>(replicate));
    Rng data_rng(unit_seed);
    const std::vector<double> data = generate_mixture_sample(spec.true_model, n, data_rng);

    FitConfig config = base_config;
    config.seed = mix_seed(unit_seed, 0x5eedU);
    config.exec = Exec::Serial;  // replicate-level parallelism owns the pool

    const std::size_t k = spec.true_model.order();
    std::vector<LongRecord> records;
    records.reserve(spec.methods.size() * k * 3);
    for (Method m : spec.methods) {
        const FitResult fit = fit_with_method(m, data, spec, config);
        const std::vector<std::size_t> perm = match_components(fit.model, spec.true_model);
        for (std::size_t j = 0; j < k; ++j) {
            const GammaComponent& truth = spec.true_model.components[j];
            const GammaComponent& est = fit.model.components[perm[j]];
            const double true_vals[3] = {truth.shape, truth.scale, truth.weight};
            const double est_vals[3] = {est.shape, est.scale, est.weight};
            for (int p = 0; p < 3; ++p) {
                records.push_back({m, spec.design, n, replicate, static_cast<int>(j) + 1,
                                   kParameterNames[p], true_vals[p], est_vals[p], fit.converged,
                                   fit.iterations, fit.wall_time_ms});
            }
        }
    }
    return records;
}

void aggregate(SimulationReport& report) {
    report.aggregates.clear();
    for (Method m : report.methods) {
        for (std::size_t n : report.sample_sizes) {
            // per-(method, n) convergence and timing over one record per replicate
            std::vector<double> times;
            int n_converged = 0;
            int n_total = 0;
            for (const auto& r : report.long_records) {
                if (r.method != m || r.n != n) continue;
                if (r.component == 1 && r.parameter == kParameterNames[0]) {
                    times.push_back(r.wall_time_ms);
                    n_total += 1;
                    if (r.converged) n_converged += 1;
                }
            }
            const double prop =
                n_total > 0 ? static_cast<double>(n_converged) / static_cast<double>(n_total)
                            : std::numeric_limits<double>::quiet_NaN();
            const double t_min = times.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : *std::min_element(times.begin(), times.end());
            const double t_max = times.empty() ? std::numeric_limits<double>::quiet_NaN()
                                               : *std::max_element(times.begin(), times.end());
            const double t_med = sample_median(times);

            for (std::size_t j = 0; j < report.true_model.order(); ++j) {
                for (int p = 0; p < 3; ++p) {
                    std::vector<double> errors;
                    std::vector<double> estimates;
                    double true_value = std::numeric_limits<double>::quiet_NaN();
                    for (const auto& r : report.long_records) {
                        if (r.method != m || r.n != n ||
                            r.component != static_cast<int>(j) + 1 ||
                            r.parameter != kParameterNames[p]) {
                            continue;
                        }
                        true_value = r.true_value;
                        if (r.converged) {
                            errors.push_back(r.estimate - r.true_value);
                            estimates.push_back(r.estimate);
                        }
                    }
                    AggregateRecord agg;
                    agg.method = m;
                    agg.design = report.design;
                    agg.n = n;
                    agg.component = static_cast<int>(j) + 1;
                    agg.parameter = kParameterNames[p];
                    agg.true_value = true_value;
                    agg.bias = sample_mean(errors);
                    agg.winsorized_bias =
                        errors.empty() ? std::numeric_limits<double>::quiet_NaN()
                                       : sample_mean(winsorize(errors, report.winsor_level));
                    agg.median_bias = sample_median(errors);
                    agg.variance = sample_variance(estimates);
                    agg.n_converged = n_converged;
                    agg.convergence_proportion = prop;
                    agg.wall_ms_min = t_min;
                    agg.wall_ms_median = t_med;
                    agg.wall_ms_max = t_max;
                    report.aggregates.push_back(agg);
                }
            }
        }
    }
}

}  // namespace

SimulationReport run_experiment(const SimulationSpec& spec, const FitConfig& config) {
    spec.validate();
    config.validate();

    SimulationReport report;
    report.design = spec.design;
    report.seed = spec.seed;
    report.replicates = spec.replicates;
    report.winsor_level = spec.winsor_level;
    report.workers = effective_workers(spec.workers);
    report.sample_sizes = spec.sample_sizes;
    report.methods = spec.methods;
    report.true_model = spec.true_model;
    report.bounds = spec.bounds;
    report.config = config;
    report.software_version = kVersion;

    const std::size_t units = spec.sample_sizes.size() * static_cast<std::size_t>(spec.replicates);
    std::vector<std::vector<LongRecord>> unit_records(units);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(report.workers)
#endif
    for (long u = 0; u < static_cast<long>(units); ++u) {
        const std::size_t size_index = static_cast<std::size_t>(u) / spec.replicates;
        const int replicate = static_cast<int>(static_cast<std::size_t>(u) % spec.replicates);
        unit_records[static_cast<std::size_t>(u)] = run_unit(spec, config, size_index, replicate);
    }

    for (auto& recs : unit_records) {
        report.long_records.insert(report.long_records.end(), recs.begin(), recs.end());
    }
    aggregate(report);
    return report;
}

std::string to_csv_long(const SimulationReport& report) {
    std::ostringstream out;
    out << "method,design,n,replicate,component,parameter,true_value,estimate,converged,"
           "iterations,wall_time_ms\n";
    for (const auto& r : report.long_records) {
        out << to_string(r.method) << ',' << r.design << ',' << r.n << ',' << r.replicate << ','
            << r.component << ',' << r.parameter << ',' << format_double(r.true_value) << ','
            << format_double(r.estimate) << ',' << (r.converged ? 1 : 0) << ',' << r.iterations
            << ',' << format_double(r.wall_time_ms) << '\n';
    }
    return out.str();
}

std::string to_csv_aggregate(const SimulationReport& report) {
    std::ostringstream out;
    out << "method,design,n,component,parameter,true_value,bias,winsorized_bias,median_bias,"
           "variance,n_converged,convergence_proportion,wall_ms_min,wall_ms_median,wall_ms_max\n";
    for (const auto& a : report.aggregates) {
        out << to_string(a.method) << ',' << a.design << ',' << a.n << ',' << a.component << ','
            << a.parameter << ',' << format_double(a.true_value) << ',' << format_double(a.bias)
            << ',' << format_double(a.winsorized_bias) << ',' << format_double(a.median_bias)
            << ',' << format_double(a.variance) << ',' << a.n_converged << ','
            << format_double(a.convergence_proportion) << ',' << format_double(a.wall_ms_min)
            << ',' << format_double(a.wall_ms_median) << ',' << format_double(a.wall_ms_max)
            << '\n';
    }
    return out.str();
}

namespace {

nlohmann::ordered_json model_to_json(const MixtureModel& model) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& c : model.components) {
        arr.push_back({{"shape", c.shape}, {"scale", c.scale}, {"weight", c.weight}});
    }
    return arr;
}

MixtureModel model_from_json(const nlohmann::ordered_json& arr) {
    MixtureModel model;
    for (const auto& c : arr) {
        model.components.push_back({c.at("shape").get<double>(), c.at("scale").get<double>(),
                                    c.at("weight").get<double>()});
    }
    return model;
}

double json_double(const nlohmann::ordered_json& v) {
    return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
}

}  // namespace

std::string to_json_string(const SimulationReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["software_version"] = report.software_version;
    j["design"] = report.design;
    j["seed"] = report.seed;
    j["replicates"] = report.replicates;
    j["winsor_level"] = report.winsor_level;
    j["workers"] = report.workers;
    j["sample_sizes"] = report.sample_sizes;
    nlohmann::ordered_json methods = nlohmann::ordered_json::array();
    for (Method m : report.methods) methods.push_back(to_string(m));
    j["methods"] = methods;
    j["fit_config"] = {{"max_iterations", report.config.max_iterations},
                       {"tolerance", report.config.tolerance},
                       {"restarts", report.config.restarts},
                       {"max_divergence_retries", report.config.max_divergence_retries}};
    j["true_model"] = model_to_json(report.true_model);
    nlohmann::ordered_json bounds = nlohmann::ordered_json::array();
    for (const auto& b : report.bounds.intervals) {
        bounds.push_back({{"lower", format_bound(b.lower)}, {"upper", format_bound(b.upper)}});
    }
    j["bounds"] = bounds;

    nlohmann::ordered_json longs = nlohmann::ordered_json::array();
    for (const auto& r : report.long_records) {
        longs.push_back({{"method", to_string(r.method)},
                         {"design", r.design},
                         {"n", r.n},
                         {"replicate", r.replicate},
                         {"component", r.component},
                         {"parameter", r.parameter},
                         {"true_value", r.true_value},
                         {"estimate", r.estimate},
                         {"converged", r.converged},
                         {"iterations", r.iterations},
                         {"wall_time_ms", r.wall_time_ms}});
    }
    j["long"] = longs;

    nlohmann::ordered_json aggs = nlohmann::ordered_json::array();
    for (const auto& a : report.aggregates) {
        aggs.push_back({{"method", to_string(a.method)},
                        {"design", a.design},
                        {"n", a.n},
                        {"component", a.component},
                        {"parameter", a.parameter},
                        {"true_value", a.true_value},
                        {"bias", a.bias},
                        {"winsorized_bias", a.winsorized_bias},
                        {"median_bias", a.median_bias},
                        {"variance", a.variance},
                        {"n_converged", a.n_converged},
                        {"convergence_proportion", a.convergence_proportion},
                        {"wall_ms_min", a.wall_ms_min},
                        {"wall_ms_median", a.wall_ms_median},
                        {"wall_ms_max", a.wall_ms_max}});
    }
    j["aggregate"] = aggs;
    return j.dump(2) + "\n";
}

SimulationReport report_from_json(const std::string& text) {
    const auto j = nlohmann::ordered_json::parse(text);
    if (j.at("schema_version").get<std::string>() != kReportSchemaVersion) {
        throw std::invalid_argument("report_from_json: unsupported schema_version");
    }
    SimulationReport report;
    report.software_version = j.at("software_version").get<std::string>();
    report.design = j.at("design").get<std::string>();
    report.seed = j.at("seed").get<std::uint64_t>();
    report.replicates = j.at("replicates").get<int>();
    report.winsor_level = j.at("winsor_level").get<double>();
    report.workers = j.at("workers").get<int>();
    report.sample_sizes = j.at("sample_sizes").get<std::vector<std::size_t>>();
    for (const auto& m : j.at("methods")) {
        report.methods.push_back(method_from_string(m.get<std::string>()));
    }
    const auto& fc = j.at("fit_config");
    report.config.max_iterations = fc.at("max_iterations").get<int>();
    report.config.tolerance = fc.at("tolerance").get<double>();
    report.config.restarts = fc.at("restarts").get<int>();
    report.config.max_divergence_retries = fc.at("max_divergence_retries").get<int>();
    report.true_model = model_from_json(j.at("true_model"));
    for (const auto& b : j.at("bounds")) {
        report.bounds.intervals.push_back({parse_bound(b.at("lower").get<std::string>()),
                                           parse_bound(b.at("upper").get<std::string>())});
    }
    for (const auto& r : j.at("long")) {
        report.long_records.push_back({method_from_string(r.at("method").get<std::string>()),
                                       r.at("design").get<std::string>(),
                                       r.at("n").get<std::size_t>(), r.at("replicate").get<int>(),
                                       r.at("component").get<int>(),
                                       r.at("parameter").get<std::string>(),
                                       r.at("true_value").get<double>(),
                                       r.at("estimate").get<double>(),
                                       r.at("converged").get<bool>(),
                                       r.at("iterations").get<int>(),
                                       r.at("wall_time_ms").get<double>()});
    }
    for (const auto& a : j.at("aggregate")) {
        AggregateRecord agg;
        agg.method = method_from_string(a.at("method").get<std::string>());
        agg.design = a.at("design").get<std::string>();
        agg.n = a.at("n").get<std::size_t>();
        agg.component = a.at("component").get<int>();
        agg.parameter = a.at("parameter").get<std::string>();
        agg.true_value = json_double(a.at("true_value"));
        agg.bias = json_double(a.at("bias"));
        agg.winsorized_bias = json_double(a.at("winsorized_bias"));
        agg.median_bias = json_double(a.at("median_bias"));
        agg.variance = json_double(a.at("variance"));
        agg.n_converged = a.at("n_converged").get<int>();
        agg.convergence_proportion = json_double(a.at("convergence_proportion"));
        agg.wall_ms_min = json_double(a.at("wall_ms_min"));
        agg.wall_ms_median = json_double(a.at("wall_ms_median"));
        agg.wall_ms_max = json_double(a.at("wall_ms_max"));
        report.aggregates.push_back(agg);
    }
    return report;
}

std::vector<LongRecord> long_records_from_csv(const std::string& text) {
    std::vector<LongRecord> records;
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("long CSV: missing header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 11) throw std::invalid_argument("long CSV: expected 11 columns");
        records.push_back({method_from_string(cells[0]), cells[1], std::stoul(cells[2]),
                           std::stoi(cells[3]), std::stoi(cells[4]), cells[5], std::stod(cells[6]),
                           std::stod(cells[7]), cells[8] == "1", std::stoi(cells[9]),
                           std::stod(cells[10])});
    }
    return records;
}

void write_report_files(const SimulationReport& report, const std::string& stem) {
    const auto write = [](const std::string& path, const std::string& content) {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + path);
        out << content;
        if (!out) throw std::runtime_error("write failed: " + path);
    };
    write(stem + ".long.csv", to_csv_long(report));
    write(stem + ".agg.csv", to_csv_aggregate(report));
    write(stem + ".json", to_json_string(report));
}

}  // namespace cfgmm
