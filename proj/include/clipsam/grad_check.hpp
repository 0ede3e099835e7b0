#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "clipsam/autodiff.hpp"

namespace clipsam {

struct GradCheckOptions {
    double step = 1e-4;
    /// Lower bound of the relative-error denominator. Entries whose true
    /// derivative is exactly zero are then held to an absolute error of
    /// tolerance × floor instead of an undefined ratio.
    double floor = 1e-6;
    /// Entries probed per parameter tensor; 0 probes every entry.
    std::size_t max_entries_per_param = 0;
    /// Applied to the reverse-mode gradients before comparison (fault injection in tests).
    std::function<void(ParamStore&)> tamper;
};

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t entries_checked = 0;
};

/// Scalar objective built on a fresh graph from the current parameter values.
using Objective = std::function<Var(Graph&)>;

/// Compares reverse-mode gradients of `f` against the five-point central
/// difference (error O(step⁴)) over the parameters in `params`. Relative error per entry is
/// |a − n| / max(|a|, |n|, floor). `seed` picks the probed entries when
/// max_entries_per_param limits them. Parameter values are restored.
GradCheckResult grad_check(const Objective& f, ParamStore& params, std::uint64_t seed,
                           const GradCheckOptions& options = {});

}  // namespace clipsam
