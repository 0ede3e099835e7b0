#include "clipsam/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace clipsam {

namespace {

double evaluate(const Objective& f) {
    Graph g(false);
    const Var out = f(g);
    if (out.value().numel() != 1) throw ShapeError("grad_check objective must be scalar");
    const double v = out.value()[0];
    if (!std::isfinite(v)) throw NonFiniteError("grad_check: non-finite loss");
    return v;
}

}  // namespace

GradCheckResult grad_check(const Objective& f, ParamStore& params, std::uint64_t seed,
                           const GradCheckOptions& options) {
    params.enable_grad();
    params.zero_grad();
    {
        Graph g(true);
        const Var out = f(g);
        if (out.value().numel() != 1) throw ShapeError("grad_check objective must be scalar");
        if (!std::isfinite(out.value()[0])) throw NonFiniteError("grad_check: non-finite loss");
        g.backward(out);
    }
    if (options.tamper) options.tamper(params);

    Rng rng(seed);
    GradCheckResult result;
    const double h = options.step;
    for (Param* p : params.all()) {
        std::vector<std::size_t> idx(p->value.numel());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        if (options.max_entries_per_param && idx.size() > options.max_entries_per_param) {
            for (std::size_t i = 0; i < options.max_entries_per_param; ++i) {
                std::swap(idx[i], idx[i + rng.below(idx.size() - i)]);
            }
            idx.resize(options.max_entries_per_param);
        }
        for (std::size_t i : idx) {
            const double saved = p->value[i];
            auto at = [&](double offset) {
                p->value[i] = saved + offset;
                return evaluate(f);
            };
            const double f2 = at(2 * h), f1 = at(h), m1 = at(-h), m2 = at(-2 * h);
            p->value[i] = saved;

            const double numeric = (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), options.floor});
            const double rel = std::abs(analytic - numeric) / denom;
            ++result.entries_checked;
            if (result.entries_checked == 1 || rel > result.max_rel_error) {
                result.max_rel_error = rel;
                result.worst_param = p->name;
                result.worst_index = i;
                result.worst_analytic = analytic;
                result.worst_numeric = numeric;
            }
        }
    }
    return result;
}

}  // namespace clipsam
