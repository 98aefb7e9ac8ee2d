#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cfgmm/model.hpp"

// Data-parallel inner loops of the EM algorithms: the E-step (posterior
// responsibilities + observed log-likelihood) and the weighted-sum
// reduction feeding every M-step. Each kernel has a serial and an
// OpenMP-parallel backend. Both decompose the data into fixed-size blocks
// and combine per-block partial sums in block order, so their results are
// bitwise identical for any thread count; the serial backend is the
// reference the parallel one is tested and benchmarked against.

namespace cfgmm {

enum class Exec {
    Serial,
    Parallel,
};

// Weighted sums for one component: sum z, sum z*x, sum z*x*log x, sum z*log x.
struct ComponentSums {
    double z = 0.0;
    double zx = 0.0;
    double zxlogx = 0.0;
    double zlogx = 0.0;
};

struct EStepStats {
    double loglik = 0.0;
    long underflow_rows = 0;
};

// Posterior responsibilities for every observation plus the observed-data
// log-likelihood of `model`, computed in log space with per-row max
// subtraction. Rows where every component log-density is -inf are set
// uniform and counted; the log-likelihood becomes -inf (the zero-density
// sentinel). `resp` must be preallocated to n x K.
EStepStats estep(std::span<const double> x, std::span<const double> logx,
                 const MixtureModel& model, Responsibilities& resp, Exec exec);

// Observed-data log-likelihood only; shares the E-step arithmetic so the
// value is bitwise identical to estep().loglik.
double mixture_loglik(std::span<const double> x, std::span<const double> logx,
                      const MixtureModel& model, Exec exec);

// Per-component weighted sums over the data.
std::vector<ComponentSums> weighted_sums(std::span<const double> x, std::span<const double> logx,
                                         const Responsibilities& resp, Exec exec);

// Number of fixed-size reduction blocks covering n points (exposed for the
// kernel benchmark).
std::size_t reduction_block_count(std::size_t n);

}  // namespace cfgmm
