#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>

#include "hmfrac/error.hpp"
#include "hmfrac/mesh/mesh.hpp"

namespace hmfrac::assembly {

using mesh::Point;

/// Symmetric 2×2 tensor.
struct Stress {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    Point apply(Point n) const { return {xx * n.x + xy * n.y, xy * n.x + yy * n.y}; }
};

/// Elastic and hydraulic properties of one matrix region.
struct Material {
    double young = 1.0;
    double poisson = 0.0;
    double biot = 0.0;
    double storativity = 0.0;
    double conductivity = 1.0;
    /// Replaces the default stabilization β when set.
    std::optional<double> beta;
};

struct FractureMaterial {
    double young = 1.0;
    double poisson = 0.0;
    double biot = 0.0;
    double storativity = 0.0;
    double roughness = 1.0;   // η
    double delta_min = 1e-6;
    Stress initial_stress;    // σ₀ inside fractures
    std::optional<double> beta;
};

/// Physical density, gravity and viscosity used by the cubic law.
struct Fluid {
    double density = 1000.0;
    double gravity = 9.81;
    double viscosity = 1e-3;
};

struct HmParameters {
    std::map<int, Material> materials{{0, Material{}}};
    FractureMaterial fracture;
    Fluid fluid;
    /// Scale of pressure head in the mechanical equations (ϱg).
    double head_scale = 1.0;
    Stress initial_stress;  // σ₀ in the matrix
    Point body_force;       // f_m
    Point fracture_force;   // f_f
    double matrix_source = 0.0;
    double fracture_source = 0.0;
    /// Optional conductivity override k(centroid, time, region) for the matrix.
    std::function<double(Point, double, int)> conductivity_field;
    /// Multiplies every conductivity: seconds per model time unit when
    /// conductivities are given in m/s (86400 for days).
    double time_scale = 1.0;

    const Material& material(int region) const {
        const auto it = materials.find(region);
        if (it == materials.end()) throw Error("no material defined for region " + std::to_string(region));
        return it->second;
    }

    double matrix_conductivity(int region, Point centroid, double t) const {
        return time_scale * (conductivity_field ? conductivity_field(centroid, t, region) : material(region).conductivity);
    }

    /// ηϱg/(12μ), so that k_f = factor · a².
    double cubic_law_factor() const {
        return fracture.roughness * fluid.density * fluid.gravity / (12.0 * fluid.viscosity);
    }

    double fracture_conductivity(double aperture) const { return time_scale * cubic_law_factor() * aperture * aperture; }

    void check() const {
        auto fail = [](const std::string& s) { throw Error("invalid parameters: " + s); };
        auto elastic = [&](double e, double nu, double alpha, double s, const std::string& who) {
            if (!(e > 0.0)) fail(who + " Young modulus must be positive");
            if (!(nu > -1.0 && nu < 0.5)) fail(who + " Poisson ratio must lie in (-1, 0.5)");
            if (!(alpha >= 0.0 && alpha <= 1.0)) fail(who + " Biot coefficient must lie in [0, 1]");
            if (!(s >= 0.0)) fail(who + " storativity must be non-negative");
        };
        for (const auto& [id, m] : materials) {
            const auto who = "material " + std::to_string(id);
            elastic(m.young, m.poisson, m.biot, m.storativity, who);
            if (!(m.conductivity > 0.0)) fail(who + " conductivity must be positive");
        }
        const auto& f = fracture;
        elastic(f.young, f.poisson, f.biot, f.storativity, "fracture");
        if (!(f.roughness > 0.0 && f.roughness <= 1.0)) fail("fracture roughness must lie in (0, 1]");
        if (!(f.delta_min > 0.0)) fail("minimal cross-section must be positive");
        if (!(fluid.viscosity > 0.0)) fail("viscosity must be positive");
        if (!(fluid.density > 0.0) || !(fluid.gravity > 0.0)) fail("density and gravity must be positive");
        if (!(head_scale > 0.0)) fail("head scale must be positive");
        if (!(time_scale > 0.0)) fail("time scale must be positive");
    }
};

/// Lamé pair (λ, 2μ) of the plane-strain Hooke tensor
/// C = E/(1+ν) I₄ + Eν/((1+ν)(1−2ν)) I⊗I.
struct Lame {
    double lambda;
    double two_mu;
};

inline Lame lame(double young, double poisson) {
    if (poisson == 0.5) throw Error("Poisson ratio 0.5 makes the Lame coefficient infinite");
    return {young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson)), young / (1.0 + poisson)};
}

/// Fixed-stress stabilization β = α²(1+ν)(1−2ν)/E, scaled by ϱg.
inline double stabilization(double biot, double young, double poisson, double head_scale = 1.0) {
    return head_scale * biot * biot * (1.0 + poisson) * (1.0 - 2.0 * poisson) / young;
}

inline double matrix_beta(const HmParameters& p, int region) {
    const auto& m = p.material(region);
    return m.beta.value_or(stabilization(m.biot, m.young, m.poisson, p.head_scale));
}

inline double fracture_beta(const HmParameters& p) {
    const auto& f = p.fracture;
    return f.beta.value_or(stabilization(f.biot, f.young, f.poisson, p.head_scale));
}

}  // namespace hmfrac::assembly
