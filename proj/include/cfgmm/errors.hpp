#pragma once

#include <stdexcept>
#include <string>

namespace cfgmm {

// Input data cannot support an estimate (too few points, zero variance).
struct degenerate_data_error : std::runtime_error {
    explicit degenerate_data_error(const std::string& what) : std::runtime_error(what) {}
};

// A closed-form component update produced a non-positive denominator;
// the EM driver treats this as divergence and restarts.
struct degenerate_component_error : std::runtime_error {
    explicit degenerate_component_error(const std::string& what) : std::runtime_error(what) {}
};

// A safeguarded root solve could not bracket or reach a root.
struct solve_failure : std::runtime_error {
    explicit solve_failure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace cfgmm
