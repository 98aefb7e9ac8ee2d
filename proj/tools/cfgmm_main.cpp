// cfgmm command-line front end: `fit` runs one of the three estimators on a
// CSV column (optionally mif-transformed, optionally mode-constrained);
// `simulate` runs the replicated benchmark grid and writes report files.
// Machine-readable results go to stdout / --output files, logs to stderr.
// Exit codes: 0 success, 1 fit did not converge (result still printed),
// 2 usage or input errors.

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "cfgmm/baseline.hpp"
#include "cfgmm/constrained.hpp"
#include "cfgmm/data_io.hpp"
#include "cfgmm/em.hpp"
#include "cfgmm/simulation.hpp"
#include "cfgmm/special_functions.hpp"
#include "cfgmm/version.hpp"

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double parse_bound_token(const std::string& token) {
    if (token == "-inf") return -kInf;
    if (token == "inf" || token == "+inf") return kInf;
    std::size_t pos = 0;
    const double v = std::stod(token, &pos);
    if (pos != token.size()) throw std::invalid_argument("malformed bound '" + token + "'");
    return v;
}

cfgmm::ModeBounds parse_bounds(const std::string& text, std::size_t k) {
    std::vector<cfgmm::ModeInterval> intervals;
    std::stringstream ss(text);
    std::string pair;
    while (std::getline(ss, pair, ';')) {
        const auto comma = pair.find(',');
        if (comma == std::string::npos) {
            throw std::invalid_argument("bounds must be 'lower,upper' pairs separated by ';'");
        }
        intervals.push_back({parse_bound_token(pair.substr(0, comma)),
                             parse_bound_token(pair.substr(comma + 1))});
    }
    if (intervals.size() != k) {
        throw std::invalid_argument("bounds count (" + std::to_string(intervals.size()) +
                                    ") must equal --components (" + std::to_string(k) + ")");
    }
    return cfgmm::ModeBounds(std::move(intervals));
}

std::uint64_t default_seed(std::string& source) {
    if (const char* env = std::getenv("CFGMM_SEED")) {
        try {
            std::size_t pos = 0;
            const std::uint64_t seed = std::stoull(env, &pos);
            if (pos != std::strlen(env)) throw std::invalid_argument(env);
            source = "env:CFGMM_SEED";
            return seed;
        } catch (const std::exception&) {
            throw std::invalid_argument("CFGMM_SEED must be an unsigned integer, got '" +
                                        std::string(env) + "'");
        }
    }
    source = "default";
    return 0;
}

nlohmann::ordered_json component_json(const cfgmm::GammaComponent& c) {
    const double mode = cfgmm::gamma_mode(cfgmm::GammaParams(c.shape, c.scale));
    nlohmann::ordered_json j{{"shape", c.shape}, {"scale", c.scale}, {"weight", c.weight}};
    if (std::isfinite(mode)) {
        j["mode"] = mode;
    } else {
        j["mode"] = nullptr;  // shape < 1: no mode
    }
    return j;
}

std::string format_mode(double mode) {
    if (!std::isfinite(mode)) return "-inf";
    std::ostringstream out;
    out.precision(17);
    out << mode;
    return out.str();
}

void write_posteriors_csv(const std::string& path, const cfgmm::Responsibilities& resp) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open posteriors file: " + path);
    out.precision(17);
    for (std::size_t kcol = 0; kcol < resp.cols; ++kcol) {
        out << (kcol > 0 ? "," : "") << "z_" << kcol + 1;
    }
    out << "\n";
    for (std::size_t i = 0; i < resp.rows; ++i) {
        for (std::size_t kcol = 0; kcol < resp.cols; ++kcol) {
            out << (kcol > 0 ? "," : "") << resp(i, kcol);
        }
        out << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

struct FitArgs {
    std::string file;
    std::string column;
    std::size_t components = 0;
    std::string bounds_text;
    std::string method = "cfgmm";
    std::string transform = "none";
    int restarts = 5;
    double tolerance = 1e-8;
    int max_iterations = 1000;
    std::optional<std::uint64_t> seed;
    std::string output_format = "json";
    std::string posteriors_path;
    int workers = 0;
};

int run_fit(const FitArgs& args) {
    if (args.method != "cfgmm" && args.method != "constrained" && args.method != "baseline") {
        std::cerr << "error: unknown method '" << args.method << "'\n";
        return 2;
    }
    if (args.method == "constrained" && args.bounds_text.empty()) {
        std::cerr << "error: --method constrained requires --bounds\n";
        return 2;
    }
    if (args.method != "constrained" && !args.bounds_text.empty()) {
        std::cerr << "error: --bounds is only valid with --method constrained\n";
        return 2;
    }
    if (args.transform != "none" && args.transform != "mif") {
        std::cerr << "error: unknown transform '" << args.transform << "'\n";
        return 2;
    }
    if (args.output_format != "json" && args.output_format != "csv") {
        std::cerr << "error: --output must be json or csv\n";
        return 2;
    }

#ifdef _OPENMP
    if (args.workers > 0) omp_set_num_threads(args.workers);
#endif

    std::string seed_source = "flag";
    std::uint64_t seed = 0;
    try {
        seed = args.seed ? *args.seed : default_seed(seed_source);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    cfgmm::IngestOptions ingest;
    ingest.mif_transform = args.transform == "mif";
    cfgmm::Dataset ds;
    cfgmm::ModeBounds bounds;
    try {
        ds = cfgmm::ingest_csv(args.file, args.column, ingest);
        if (!args.bounds_text.empty()) bounds = parse_bounds(args.bounds_text, args.components);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    if (ds.skipped_rows > 0) {
        std::cerr << "note: skipped " << ds.skipped_rows << " unparseable rows\n";
    }

    cfgmm::FitConfig config;
    config.restarts = args.restarts;
    config.tolerance = args.tolerance;
    config.max_iterations = args.max_iterations;
    config.seed = seed;
    config.exec = cfgmm::Exec::Parallel;

    cfgmm::FitResult fit;
    try {
        if (args.method == "constrained") {
            fit = cfgmm::constrained_multi_restart_fit(ds.values, args.components, bounds, config);
        } else if (args.method == "baseline") {
            fit = cfgmm::baseline_multi_restart_fit(ds.values, args.components, config);
        } else {
            fit = cfgmm::multi_restart_fit(ds.values, args.components, config);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }

    if (!args.posteriors_path.empty()) {
        const cfgmm::Responsibilities resp =
            cfgmm::responsibilities(ds.values, fit.model, cfgmm::Exec::Parallel);
        try {
            write_posteriors_csv(args.posteriors_path, resp);
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return 2;
        }
    }

    if (args.output_format == "json") {
        nlohmann::ordered_json j;
        j["schema_version"] = cfgmm::kReportSchemaVersion;
        j["software_version"] = cfgmm::kVersion;
        j["command"] = "fit";
        j["input"] = {{"file", ds.source},
                      {"column", ds.name},
                      {"n", ds.values.size()},
                      {"transform", args.transform},
                      {"skipped_rows", ds.skipped_rows}};
        j["method"] = args.method;
        j["config"] = {{"components", args.components},
                       {"restarts", config.restarts},
                       {"tolerance", config.tolerance},
                       {"max_iterations", config.max_iterations},
                       {"seed", config.seed},
                       {"seed_source", seed_source}};
        if (!fit.bounds.intervals.empty()) {
            nlohmann::ordered_json jb = nlohmann::ordered_json::array();
            for (const auto& b : fit.bounds.intervals) {
                jb.push_back({{"lower", std::isfinite(b.lower) ? nlohmann::ordered_json(b.lower)
                                                               : nlohmann::ordered_json(nullptr)},
                              {"upper", std::isfinite(b.upper) ? nlohmann::ordered_json(b.upper)
                                                               : nlohmann::ordered_json(nullptr)}});
            }
            j["bounds"] = jb;
        }
        nlohmann::ordered_json comps = nlohmann::ordered_json::array();
        for (const auto& c : fit.model.components) comps.push_back(component_json(c));
        j["result"] = {{"converged", fit.converged},
                       {"status", cfgmm::to_string(fit.status)},
                       {"iterations", fit.iterations},
                       {"final_loglik", fit.final_loglik},
                       {"restarts_used", fit.restarts_used},
                       {"divergence_restarts", fit.divergence_restarts},
                       {"wall_time_ms", fit.wall_time_ms},
                       {"components", comps}};
        std::cout << j.dump(2) << "\n";
    } else {
        std::ostringstream out;
        out.precision(17);
        out << "component,shape,scale,weight,mode\n";
        for (std::size_t kc = 0; kc < fit.model.order(); ++kc) {
            const auto& c = fit.model.components[kc];
            out << kc + 1 << ',' << c.shape << ',' << c.scale << ',' << c.weight << ','
                << format_mode(cfgmm::gamma_mode(cfgmm::GammaParams(c.shape, c.scale))) << "\n";
        }
        std::cout << out.str();
        std::cerr << "status: " << cfgmm::to_string(fit.status) << ", final log-likelihood "
                  << fit.final_loglik << ", " << fit.iterations << " iterations, "
                  << fit.wall_time_ms << " ms\n";
    }
    return fit.converged ? 0 : 1;
}

struct SimulateArgs {
    std::string preset;
    int replicates = 100;
    std::vector<std::size_t> sizes;
    std::vector<std::string> methods;
    std::optional<std::uint64_t> seed;
    std::string output_stem;
    double winsor_level = 0.95;
    int restarts = 5;
    double tolerance = 1e-8;
    int max_iterations = 1000;
    int workers = 0;
};

int run_simulate(const SimulateArgs& args) {
    cfgmm::SimulationSpec spec;
    if (args.preset == "2comp") {
        spec = cfgmm::preset_2comp();
    } else if (args.preset == "3comp") {
        spec = cfgmm::preset_3comp();
    } else {
        std::cerr << "error: unknown preset '" << args.preset << "' (expected 2comp or 3comp)\n";
        return 2;
    }
    spec.replicates = args.replicates;
    if (!args.sizes.empty()) spec.sample_sizes = args.sizes;
    if (!args.methods.empty()) {
        spec.methods.clear();
        for (const auto& name : args.methods) {
            try {
                spec.methods.push_back(cfgmm::method_from_string(name));
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return 2;
            }
        }
    }
    std::string seed_source = "flag";
    try {
        spec.seed = args.seed ? *args.seed : default_seed(seed_source);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    spec.winsor_level = args.winsor_level;
    spec.workers = args.workers;

    cfgmm::FitConfig config;
    config.restarts = args.restarts;
    config.tolerance = args.tolerance;
    config.max_iterations = args.max_iterations;

    try {
        const cfgmm::SimulationReport report = cfgmm::run_experiment(spec, config);
        cfgmm::write_report_files(report, args.output_stem);
        std::cerr << "wrote " << args.output_stem << ".long.csv, .agg.csv, .json ("
                  << report.long_records.size() << " rows, " << report.workers << " workers)\n";
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-form gamma mixture models: fitting and simulation benchmarks"};
    app.require_subcommand(1);

    FitArgs fit_args;
    CLI::App* fit = app.add_subcommand("fit", "fit a gamma mixture to a CSV column");
    fit->add_option("file", fit_args.file, "input CSV file")->required();
    fit->add_option("--column", fit_args.column, "column name or 0-based index")->required();
    fit->add_option("--components", fit_args.components, "number of mixture components K")
        ->required()
        ->check(CLI::PositiveNumber);
    fit->add_option("--bounds", fit_args.bounds_text,
                    "per-component mode intervals 'l1,u1;l2,u2;...' (-inf/inf allowed)");
    fit->add_option("--method", fit_args.method, "cfgmm | constrained | baseline");
    fit->add_option("--transform", fit_args.transform, "none | mif  (log10(x/mean(x)+1))");
    fit->add_option("--restarts", fit_args.restarts, "random restarts")->check(CLI::PositiveNumber);
    fit->add_option("--tol", fit_args.tolerance, "convergence tolerance on |dloglik|/n");
    fit->add_option("--max-iter", fit_args.max_iterations, "maximum EM iterations");
    fit->add_option("--seed", fit_args.seed, "RNG seed (default: CFGMM_SEED env or 0)");
    fit->add_option("--output", fit_args.output_format, "json | csv (default json)");
    fit->add_option("--posteriors", fit_args.posteriors_path,
                    "write per-observation responsibilities z_ik to this CSV");
    fit->add_option("--workers", fit_args.workers, "kernel threads (default: machine)");

    SimulateArgs sim_args;
    CLI::App* sim = app.add_subcommand("simulate", "run the replicated simulation benchmark");
    sim->add_option("--preset", sim_args.preset, "2comp | 3comp")->required();
    sim->add_option("--replicates", sim_args.replicates, "replicates per sample size")
        ->check(CLI::PositiveNumber);
    sim->add_option("--sizes", sim_args.sizes, "sample sizes (default 100,1000,10000)")
        ->delimiter(',');
    sim->add_option("--methods", sim_args.methods,
                    "subset of cfgmm,constrained,baseline (default all)")
        ->delimiter(',');
    sim->add_option("--seed", sim_args.seed, "master seed (default: CFGMM_SEED env or 0)");
    sim->add_option("--output", sim_args.output_stem, "output stem for .long.csv/.agg.csv/.json")
        ->required();
    sim->add_option("--winsor", sim_args.winsor_level, "winsorization level (default 0.95)");
    sim->add_option("--restarts", sim_args.restarts, "random restarts per fit");
    sim->add_option("--tol", sim_args.tolerance, "convergence tolerance");
    sim->add_option("--max-iter", sim_args.max_iterations, "maximum EM iterations");
    sim->add_option("--workers", sim_args.workers, "worker pool size (default: machine)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (fit->parsed()) return run_fit(fit_args);
    return run_simulate(sim_args);
}
