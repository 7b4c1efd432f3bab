#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "hmfrac/error.hpp"
#include "hmfrac/qp/mpgp.hpp"

namespace hmfrac::coupling {

/// Piecewise-constant time steps: Δt_k on (end_{k−1}, end_k], starting at 0.
struct TimeScheme {
    std::vector<std::pair<double, double>> intervals;  // (interval end, Δt)

    void check() const {
        if (intervals.empty()) throw Error("time scheme has no intervals");
        double prev = 0.0;
        for (const auto& [end, dt] : intervals) {
            if (!(end > prev)) throw Error("time scheme interval ends must be strictly increasing and positive");
            if (!(dt > 0.0)) throw Error("time scheme step must be positive");
            prev = end;
        }
    }

    double final_time() const { return intervals.empty() ? 0.0 : intervals.back().first; }

    /// Time levels t_1 < t_2 < ... ≤ T. The last step of an interval is
    /// shortened to land on its end.
    std::vector<double> times() const {
        check();
        std::vector<double> t;
        double now = 0.0;
        for (const auto& [end, dt] : intervals) {
            const auto n = static_cast<long>(std::ceil((end - now) / dt - 1e-9));
            const double start = now;
            for (long k = 1; k <= n; ++k) t.push_back(k == n ? end : start + static_cast<double>(k) * dt);
            now = end;
        }
        return t;
    }
};

enum class FlowSolver {
    /// Sparse LU of the whole block system.
    direct,
    /// CG on the pressure Schur complement C + C_β + Δt D E⁻¹ Dᵀ.
    schur_cg,
};

struct SplittingSettings {
    int max_outer = 30;
    /// Outer iterations stop once the relative splitting lag (see
    /// coupling::splitting_lag) is at most this.
    double tolerance = 1e-8;
    FlowSolver flow_solver = FlowSolver::direct;
    double flow_cg_tolerance = 1e-12;
    int flow_cg_max_iter = 10000;
    qp::MpgpSettings mpgp = [] {
        qp::MpgpSettings s;
        s.tolerance = 1e-10;
        return s;
    }();
    bool warm_start = true;

    void check() const {
        if (max_outer < 1) throw Error("max outer iterations must be at least 1");
        if (!(tolerance > 0.0)) throw Error("outer tolerance must be positive");
    }
};

}  // namespace hmfrac::coupling
