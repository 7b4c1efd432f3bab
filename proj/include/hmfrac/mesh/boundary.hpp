#pragma once

#include <algorithm>
#include <map>
#include <string>

#include "hmfrac/mesh/mesh.hpp"

namespace hmfrac::mesh {

/// Time dependence of a boundary value.
///  constant: the value itself.
///  ramp:     value · clamp((t − t0)/(t1 − t0), 0, 1); a step switched on for
///            t > t0 when t1 ≤ t0, so the initial state stays unloaded.
///  staged:   the value while the facet midpoint satisfies x ≥ origin + speed·t
///            (not yet excavated), the excavated value afterwards.
struct Schedule {
    enum class Kind { constant, ramp, staged };
    Kind kind = Kind::constant;
    double t0 = 0.0;
    double t1 = 0.0;
    double origin = 0.0;
    double speed = 0.0;

    double ramp_factor(double t) const {
        if (kind != Kind::ramp) return 1.0;
        if (t1 <= t0) return t > t0 ? 1.0 : 0.0;
        return std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
    }

    bool excavated(Point where, double t) const { return kind == Kind::staged && where.x < origin + speed * t; }
};

enum class FlowBcKind { dirichlet, neumann };

/// Pressure head (Dirichlet) or outward normal flux density (Neumann).
struct FlowBc {
    FlowBcKind kind = FlowBcKind::neumann;
    double value = 0.0;
    double excavated_value = 0.0;
    Schedule schedule;

    double evaluate(Point where, double t) const {
        if (schedule.excavated(where, t)) return excavated_value;
        return value * schedule.ramp_factor(t);
    }
};

/// dirichlet fixes both displacement components; roller fixes the component
/// normal to an axis-aligned facet; neumann prescribes a traction.
enum class MechBcKind { dirichlet, roller, neumann };

/// A vector or, for tractions, σ₀·n from the initial stress.
struct MechValue {
    bool initial_stress = false;
    Point vector;
};

struct MechBc {
    MechBcKind kind = MechBcKind::neumann;
    MechValue value;
    MechValue excavated_value;
    Schedule schedule;

    /// Active value and its scale factor at time t.
    std::pair<MechValue, double> evaluate(Point where, double t) const {
        if (schedule.excavated(where, t)) return {excavated_value, 1.0};
        return {value, schedule.ramp_factor(t)};
    }
};

struct BoundaryTag {
    std::string name;
    FlowBc flow;
    MechBc mech;
};

using BoundaryTags = std::map<std::string, BoundaryTag>;

}  // namespace hmfrac::mesh
