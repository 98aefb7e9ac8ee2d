// Benchmark comparing the serial reference kernels against the OpenMP
// backends (E-step, weighted sums, full EM fit). Both backends use the same
// fixed-block reduction, so outputs are bitwise identical; the run aborts if
// they ever disagree.

#include <chrono>
#include <cstring>
#include <iostream>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cfgmm/em.hpp"
#include "cfgmm/kernels.hpp"
#include "cfgmm/rng.hpp"
#include "cfgmm/simulation.hpp"

using namespace cfgmm;

namespace {

double now_ms() {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

template <typename F>
double best_of(int reps, F&& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const double t0 = now_ms();
        body();
        best = std::min(best, now_ms() - t0);
    }
    return best;
}

void report_row(const std::string& name, std::size_t n, double serial_ms, double parallel_ms) {
    std::cout << name << ",n=" << n << ",serial_ms=" << serial_ms
              << ",parallel_ms=" << parallel_ms << ",speedup=" << serial_ms / parallel_ms << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    bool quick = false;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    }

#ifdef _OPENMP
    std::cout << "# OpenMP threads: " << omp_get_max_threads() << "\n";
#else
    std::cout << "# built without OpenMP; parallel backend runs serially\n";
#endif

    const SimulationSpec design = preset_2comp();
    std::vector<std::size_t> sizes = quick ? std::vector<std::size_t>{10000}
                                           : std::vector<std::size_t>{10000, 100000, 1000000};
    const int reps = quick ? 3 : 5;

    for (std::size_t n : sizes) {
        Rng rng(42);
        const std::vector<double> data = generate_mixture_sample(design.true_model, n, rng);
        std::vector<double> logx(n);
        for (std::size_t i = 0; i < n; ++i) logx[i] = std::log(data[i]);

        Responsibilities resp_serial;
        Responsibilities resp_parallel;
        EStepStats st_serial{};
        EStepStats st_parallel{};
        const double estep_serial = best_of(reps, [&] {
            st_serial = estep(data, logx, design.true_model, resp_serial, Exec::Serial);
        });
        const double estep_parallel = best_of(reps, [&] {
            st_parallel = estep(data, logx, design.true_model, resp_parallel, Exec::Parallel);
        });
        if (st_serial.loglik != st_parallel.loglik || resp_serial.z != resp_parallel.z) {
            std::cerr << "FATAL: serial and parallel E-step disagree\n";
            return 1;
        }
        report_row("estep", n, estep_serial, estep_parallel);

        std::vector<ComponentSums> sums_serial;
        std::vector<ComponentSums> sums_parallel;
        const double sums_t_serial = best_of(reps, [&] {
            sums_serial = weighted_sums(data, logx, resp_serial, Exec::Serial);
        });
        const double sums_t_parallel = best_of(reps, [&] {
            sums_parallel = weighted_sums(data, logx, resp_serial, Exec::Parallel);
        });
        for (std::size_t k = 0; k < sums_serial.size(); ++k) {
            if (sums_serial[k].z != sums_parallel[k].z || sums_serial[k].zx != sums_parallel[k].zx ||
                sums_serial[k].zxlogx != sums_parallel[k].zxlogx ||
                sums_serial[k].zlogx != sums_parallel[k].zlogx) {
                std::cerr << "FATAL: serial and parallel weighted sums disagree\n";
                return 1;
            }
        }
        report_row("weighted_sums", n, sums_t_serial, sums_t_parallel);
    }

    // full fit, serial vs parallel kernels
    {
        const std::size_t n = quick ? 10000 : 100000;
        Rng rng(43);
        const std::vector<double> data = generate_mixture_sample(design.true_model, n, rng);
        FitConfig config;
        config.restarts = 1;
        config.seed = 7;

        config.exec = Exec::Serial;
        FitResult fit_serial;
        const double t_serial = best_of(1, [&] { fit_serial = em_fit(data, 2, config); });
        config.exec = Exec::Parallel;
        FitResult fit_parallel;
        const double t_parallel = best_of(1, [&] { fit_parallel = em_fit(data, 2, config); });
        if (fit_serial.final_loglik != fit_parallel.final_loglik) {
            std::cerr << "FATAL: serial and parallel fits disagree\n";
            return 1;
        }
        report_row("em_fit", n, t_serial, t_parallel);
    }

    return 0;
}
