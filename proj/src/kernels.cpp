#include "cfgmm/kernels.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cfgmm/special_functions.hpp"

namespace cfgmm {

namespace {

constexpr std::size_t kBlock = 1024;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-component coefficients so the log density is a 2-term affine form:
// ln lambda_k + ln f_k(x) = c_logx*logx + c_x*x + c0.
struct DensityCoefs {
    std::vector<double> c_logx;
    std::vector<double> c_x;
    std::vector<double> c0;
};

DensityCoefs make_coefs(const MixtureModel& model) {
    const std::size_t k = model.order();
    DensityCoefs c;
    c.c_logx.resize(k);
    c.c_x.resize(k);
    c.c0.resize(k);
    for (std::size_t j = 0; j < k; ++j) {
        const auto& comp = model.components[j];
        c.c_logx[j] = comp.shape - 1.0;
        c.c_x[j] = -1.0 / comp.scale;
        const double log_weight = comp.weight > 0.0 ? std::log(comp.weight) : kNegInf;
        c.c0[j] = log_weight - comp.shape * std::log(comp.scale) - log_gamma_fn(comp.shape);
    }
    return c;
}

// E-step over rows [lo, hi). Writes responsibility rows when z != nullptr.
EStepStats estep_block(const double* x, const double* logx, std::size_t lo, std::size_t hi,
                       const DensityCoefs& c, double* z) {
    const std::size_t k = c.c0.size();
    std::vector<double> logf(k);
    EStepStats s;
    for (std::size_t i = lo; i < hi; ++i) {
        double row_max = kNegInf;
        for (std::size_t j = 0; j < k; ++j) {
            logf[j] = c.c_logx[j] * logx[i] + c.c_x[j] * x[i] + c.c0[j];
            if (logf[j] > row_max) row_max = logf[j];
        }
        if (row_max == kNegInf) {
            // zero density under every component
            s.underflow_rows += 1;
            s.loglik = kNegInf;
            if (z != nullptr) {
                const double u = 1.0 / static_cast<double>(k);
                for (std::size_t j = 0; j < k; ++j) z[i * k + j] = u;
            }
            continue;
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            logf[j] = std::exp(logf[j] - row_max);
            denom += logf[j];
        }
        s.loglik += row_max + std::log(denom);
        if (z != nullptr) {
            const double inv = 1.0 / denom;
            for (std::size_t j = 0; j < k; ++j) z[i * k + j] = logf[j] * inv;
        }
    }
    return s;
}

EStepStats run_estep(std::span<const double> x, std::span<const double> logx,
                     const MixtureModel& model, double* z, Exec exec) {
    if (x.size() != logx.size()) {
        throw std::invalid_argument("estep: x and logx lengths differ");
    }
    const DensityCoefs coefs = make_coefs(model);
    const std::size_t nblocks = reduction_block_count(x.size());
    std::vector<EStepStats> partials(nblocks);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long b = 0; b < static_cast<long>(nblocks); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
            const std::size_t hi = std::min(lo + kBlock, x.size());
            partials[static_cast<std::size_t>(b)] = estep_block(x.data(), logx.data(), lo, hi, coefs, z);
        }
    } else {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t lo = b * kBlock;
            const std::size_t hi = std::min(lo + kBlock, x.size());
            partials[b] = estep_block(x.data(), logx.data(), lo, hi, coefs, z);
        }
    }
    EStepStats total;
    for (const auto& p : partials) {
        total.loglik += p.loglik;
        total.underflow_rows += p.underflow_rows;
    }
    return total;
}

void sums_block(const double* x, const double* logx, const double* z, std::size_t lo,
                std::size_t hi, std::size_t k, ComponentSums* out) {
    for (std::size_t i = lo; i < hi; ++i) {
        const double xi = x[i];
        const double xlogx = xi * logx[i];
        const double* zrow = z + i * k;
        for (std::size_t j = 0; j < k; ++j) {
            const double w = zrow[j];
            out[j].z += w;
            out[j].zx += w * xi;
            out[j].zxlogx += w * xlogx;
            out[j].zlogx += w * logx[i];
        }
    }
}

}  // namespace

std::size_t reduction_block_count(std::size_t n) { return (n + kBlock - 1) / kBlock; }

EStepStats estep(std::span<const double> x, std::span<const double> logx,
                 const MixtureModel& model, Responsibilities& resp, Exec exec) {
    resp.rows = x.size();
    resp.cols = model.order();
    resp.z.resize(resp.rows * resp.cols);
    const EStepStats s = run_estep(x, logx, model, resp.z.data(), exec);
    resp.underflow_rows = s.underflow_rows;
    return s;
}

double mixture_loglik(std::span<const double> x, std::span<const double> logx,
                      const MixtureModel& model, Exec exec) {
    return run_estep(x, logx, model, nullptr, exec).loglik;
}

std::vector<ComponentSums> weighted_sums(std::span<const double> x, std::span<const double> logx,
                                         const Responsibilities& resp, Exec exec) {
    if (resp.rows != x.size()) {
        throw std::invalid_argument("weighted_sums: responsibility rows do not match data");
    }
    const std::size_t k = resp.cols;
    const std::size_t nblocks = reduction_block_count(x.size());
    std::vector<ComponentSums> partials(nblocks * k);
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (long b = 0; b < static_cast<long>(nblocks); ++b) {
            const std::size_t lo = static_cast<std::size_t>(b) * kBlock;
            const std::size_t hi = std::min(lo + kBlock, x.size());
            sums_block(x.data(), logx.data(), resp.z.data(), lo, hi, k,
                       partials.data() + static_cast<std::size_t>(b) * k);
        }
    } else {
        for (std::size_t b = 0; b < nblocks; ++b) {
            const std::size_t lo = b * kBlock;
            const std::size_t hi = std::min(lo + kBlock, x.size());
            sums_block(x.data(), logx.data(), resp.z.data(), lo, hi, k, partials.data() + b * k);
        }
    }
    std::vector<ComponentSums> total(k);
    for (std::size_t b = 0; b < nblocks; ++b) {
        for (std::size_t j = 0; j < k; ++j) {
            const ComponentSums& p = partials[b * k + j];
            total[j].z += p.z;
            total[j].zx += p.zx;
            total[j].zxlogx += p.zxlogx;
            total[j].zlogx += p.zlogx;
        }
    }
    return total;
}

}  // namespace cfgmm
