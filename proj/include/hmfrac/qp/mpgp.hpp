#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>

#include "hmfrac/linalg/spectral.hpp"
#include "hmfrac/qp/box_qp.hpp"

namespace hmfrac::qp {

enum class StepKind { initial, cg, expansion, proportioning };

inline std::string_view to_string(StepKind k) {
    switch (k) {
        case StepKind::initial: return "initial";
        case StepKind::cg: return "cg";
        case StepKind::expansion: return "expansion";
        case StepKind::proportioning: return "proportioning";
    }
    return "?";
}

/// One record per iterate (including λ⁰), handed to MpgpSettings::observer.
struct MpgpIterate {
    int iteration;
    StepKind kind;
    double projected_gradient_norm;
    double objective;
    std::span<const double> lambda;
};

struct MpgpSettings {
    /// Proportioning parameter Γ > 0.
    double gamma = 1.0;
    /// Fixed expansion steplength ᾱ. Unset: 1.9 / (1.1 · power-iteration estimate of ‖F‖).
    std::optional<double> step_length;
    /// Relative stopping tolerance: stop when ‖gᴾ‖ < ε‖d‖ (absolute ε if d = 0).
    double tolerance = 1e-8;
    /// Cap on Hessian multiplications; unset means 10·n.
    std::optional<long> max_hessian_mults;
    int norm_estimate_iters = 30;
    std::uint64_t norm_estimate_seed = 0;
    std::function<void(const MpgpIterate&)> observer;
};

enum class MpgpStatus { converged, iteration_cap };

struct MpgpResult {
    Vector lambda;
    MpgpStatus status = MpgpStatus::converged;
    int iterations = 0;
    int cg_steps = 0;
    int expansion_steps = 0;
    int proportioning_steps = 0;
    /// Multiplications by F made by the iteration itself (initial gradient included,
    /// norm estimation excluded).
    long hessian_mults = 0;
    long norm_estimate_mults = 0;
    double projected_gradient_norm = 0.0;
    double step_length = 0.0;
    double objective = 0.0;

    bool converged() const noexcept { return status == MpgpStatus::converged; }
};

/// ᾱ from a seeded power-iteration estimate ν of ‖F‖: 1.9 / (1.1 ν).
inline double default_step_length(const LinearOperator& f, int iters, std::uint64_t seed) {
    const double nu = linalg::estimate_spectral_norm(f, iters, seed);
    return nu > 0.0 ? 1.9 / (1.1 * nu) : 1.0;
}

/// Modified proportioning with gradient projections for a box-constrained QP
/// with symmetric positive semidefinite Hessian. λ⁰ is projected onto the box
/// before iterating.
inline MpgpResult mpgp_solve(const BoxQP& qp, std::span<const double> lambda0, const MpgpSettings& settings = {}) {
    qp.check();
    const auto n = qp.dimension();
    if (lambda0.size() != n) throw DimensionError("mpgp_solve: initial guess dimension mismatch");
    if (!(settings.gamma > 0.0)) throw SolverError("mpgp_solve: proportioning parameter must be positive");

    const auto& lo = qp.lower;
    const auto& hi = qp.upper;
    const auto& f = qp.hessian;

    MpgpResult res;
    res.lambda = project_box(lambda0, lo, hi);
    if (n == 0) return res;

    if (settings.step_length) {
        res.step_length = *settings.step_length;
    } else {
        res.step_length = default_step_length(f, settings.norm_estimate_iters, settings.norm_estimate_seed);
        res.norm_estimate_mults = settings.norm_estimate_iters;
    }
    const double alpha_bar = res.step_length;
    if (!(alpha_bar > 0.0)) throw SolverError("mpgp_solve: steplength must be positive");

    const long cap = settings.max_hessian_mults.value_or(10 * static_cast<long>(n));
    const double dnorm = linalg::norm2(qp.linear);
    const double threshold = dnorm > 0.0 ? settings.tolerance * dnorm : settings.tolerance;

    auto& lambda = res.lambda;
    Vector g(n), fp(n);
    auto gradient = [&] {
        f.apply(lambda, g);
        for (std::size_t j = 0; j < n; ++j) g[j] -= qp.linear[j];
        ++res.hessian_mults;
    };
    // ½λᵀFλ − dᵀλ = ½λᵀ(g − d) for g = Fλ − d
    auto objective = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += lambda[j] * (g[j] - qp.linear[j]);
        return 0.5 * s;
    };
    auto clamp = [&] {
        for (std::size_t j = 0; j < n; ++j) lambda[j] = std::min(hi[j], std::max(lo[j], lambda[j]));
    };
    // λ ← λ − αd, placing components whose exit ratio is ≤ α exactly on their bound.
    auto step = [&](double alpha, std::span<const double> d) {
        for (std::size_t j = 0; j < n; ++j) {
            if (d[j] > 0.0 && lo[j] > -kInf && (lambda[j] - lo[j]) / d[j] <= alpha)
                lambda[j] = lo[j];
            else if (d[j] < 0.0 && hi[j] < kInf && (lambda[j] - hi[j]) / d[j] <= alpha)
                lambda[j] = hi[j];
            else
                lambda[j] -= alpha * d[j];
        }
        clamp();
    };

    gradient();
    auto split = gradient_split(g, lambda, lo, hi);
    Vector p = split.free;
    auto gp_norm = [&] {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double v = split.free[j] + split.chopped[j];
            s += v * v;
        }
        return std::sqrt(s);
    };
    res.projected_gradient_norm = gp_norm();
    if (settings.observer) settings.observer({0, StepKind::initial, res.projected_gradient_norm, objective(), lambda});

    const double gamma2 = settings.gamma * settings.gamma;
    while (!(res.projected_gradient_norm < threshold)) {
        if (res.hessian_mults >= cap) {
            res.status = MpgpStatus::iteration_cap;
            break;
        }
        const double gc2 = linalg::dot(split.chopped, split.chopped);
        const double gf2 = linalg::dot(split.free, split.free);
        StepKind kind;
        if (gc2 <= gamma2 * gf2) {
            f.apply(p, fp);
            ++res.hessian_mults;
            const double pfp = linalg::dot(p, fp);
            const double alpha_f = max_feasible_step(lambda, p, lo, hi);
            const double alpha_cg = pfp > 0.0 ? linalg::dot(g, p) / pfp : kInf;
            if (alpha_cg <= alpha_f) {
                kind = StepKind::cg;
                ++res.cg_steps;
                step(alpha_cg, p);
                linalg::axpy(-alpha_cg, fp, g);
                split = gradient_split(g, lambda, lo, hi);
                const double beta = linalg::dot(fp, split.free) / pfp;
                for (std::size_t j = 0; j < n; ++j) p[j] = split.free[j] - beta * p[j];
            } else {
                if (!std::isfinite(alpha_f)) throw SolverError("mpgp_solve: objective unbounded below");
                kind = StepKind::expansion;
                ++res.expansion_steps;
                step(alpha_f, p);
                // The gradient update uses F·p; the bare "g − α_f p" would be
                // dimensionally inconsistent.
                linalg::axpy(-alpha_f, fp, g);
                split = gradient_split(g, lambda, lo, hi);
                linalg::axpy(-alpha_bar, split.free, lambda);
                clamp();
                gradient();
                split = gradient_split(g, lambda, lo, hi);
                p = split.free;
            }
        } else {
            kind = StepKind::proportioning;
            ++res.proportioning_steps;
            const auto& gc = split.chopped;
            f.apply(gc, fp);
            ++res.hessian_mults;
            const double denom = linalg::dot(gc, fp);
            double alpha = denom > 0.0 ? linalg::dot(g, gc) / denom : kInf;
            // With two-sided finite bounds the step must not cross the opposite bound.
            alpha = std::min(alpha, max_feasible_step(lambda, gc, lo, hi));
            if (!std::isfinite(alpha)) throw SolverError("mpgp_solve: objective unbounded below");
            step(alpha, gc);
            linalg::axpy(-alpha, fp, g);
            split = gradient_split(g, lambda, lo, hi);
            p = split.free;
        }
        ++res.iterations;
        res.projected_gradient_norm = gp_norm();
        if (!std::isfinite(res.projected_gradient_norm))
            throw SolverError("mpgp_solve: non-finite gradient (check operator and steplength)");
        if (settings.observer)
            settings.observer({res.iterations, kind, res.projected_gradient_norm, objective(), lambda});
    }
    res.objective = objective();
    return res;
}

/// CSV sink for MPGP iterates: solve,iteration,step,gp_norm,objective.
class MpgpTraceWriter {
public:
    explicit MpgpTraceWriter(std::ostream& os) : os_(&os) { *os_ << "solve,iteration,step,gp_norm,objective\n"; }

    /// Observer bound to the next solve index.
    std::function<void(const MpgpIterate&)> next_solve() {
        const int id = solve_++;
        return [this, id](const MpgpIterate& it) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%d,%d,%s,%.17g,%.17g\n", id, it.iteration, to_string(it.kind).data(),
                          it.projected_gradient_norm, it.objective);
            *os_ << buf;
        };
    }

    /// Observer for a sequence of solves: every initial record opens a new
    /// solve index.
    std::function<void(const MpgpIterate&)> all_solves() {
        return [this](const MpgpIterate& it) {
            if (it.kind == StepKind::initial) current_ = next_solve();
            if (current_) current_(it);
        };
    }

private:
    std::ostream* os_;
    int solve_ = 0;
    std::function<void(const MpgpIterate&)> current_;
};

}  // namespace hmfrac::qp
