#pragma once

// Central finite-difference gradient checker. The function under test must be
// deterministic (dropout disabled). Entries whose two perturbed evaluations
// take different relu / max-pool branches straddle a non-differentiable point
// and are excluded from the report; this covers relu inputs within eps of 0.

#include "ald/ops.hpp"

namespace ald {

struct GradCheckParam {
    std::string name;
    double max_rel_err = 0.0;
    size_t checked = 0;
    size_t excluded = 0;
};

struct GradCheckReport {
    double eps = 0.0;
    double tolerance = 0.0;
    double max_rel_err = 0.0;
    bool pass = false;
    size_t excluded_entries = 0;
    std::vector<GradCheckParam> params;
};

namespace detail {

struct BranchWatch {
    std::uint64_t signature = 0x9e3779b97f4a7c15ull;
    std::uint64_t* prev;
    BranchWatch() : prev(branch_signature()) { branch_signature() = &signature; }
    ~BranchWatch() { branch_signature() = prev; }
};

} // namespace detail

inline double grad_rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

// forward_loss re-evaluates the scalar objective from the current parameter
// values; params are the leaves perturbed entry by entry.
inline GradCheckReport finite_diff_check(const std::function<Tensor()>& forward_loss,
                                         std::vector<std::pair<std::string, Tensor>> params,
                                         double eps = 1e-5, double tolerance = 1e-4) {
    GradCheckReport report;
    report.eps = eps;
    report.tolerance = tolerance;

    for (auto& [name, p] : params) p.node->grad.assign(p.numel(), 0.0);
    Tensor loss = forward_loss();
    if (!loss.is_scalar())
        throw std::runtime_error("finite_diff_check: function returned non-scalar " + shape_str(loss.shape()));
    loss.backward();

    for (auto& [name, p] : params) {
        GradCheckParam entry;
        entry.name = name;
        std::vector<double> analytic = p.node->grad;
        if (analytic.size() != p.numel()) analytic.assign(p.numel(), 0.0);

        for (size_t k = 0; k < p.numel(); ++k) {
            const double saved = p.data()[k];
            double f_plus, f_minus;
            std::uint64_t sig_plus, sig_minus;
            {
                NoGradGuard ng;
                {
                    detail::BranchWatch watch;
                    p.data()[k] = saved + eps;
                    f_plus = forward_loss().item();
                    sig_plus = watch.signature;
                }
                {
                    detail::BranchWatch watch;
                    p.data()[k] = saved - eps;
                    f_minus = forward_loss().item();
                    sig_minus = watch.signature;
                }
                p.data()[k] = saved;
            }
            if (sig_plus != sig_minus) {
                ++entry.excluded;
                ++report.excluded_entries;
                continue;
            }
            const double numeric = (f_plus - f_minus) / (2.0 * eps);
            entry.max_rel_err = std::max(entry.max_rel_err, grad_rel_err(analytic[k], numeric));
            ++entry.checked;
        }
        report.max_rel_err = std::max(report.max_rel_err, entry.max_rel_err);
        report.params.push_back(std::move(entry));
    }
    report.pass = report.max_rel_err < tolerance;
    return report;
}

} // namespace ald
