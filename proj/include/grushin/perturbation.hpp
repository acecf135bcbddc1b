#pragma once

#include "grushin/geometry.hpp"

#include <functional>
#include <string>
#include <vector>

namespace grushin {

enum class FieldKind {
    Zero,
    DilationGenerator, // (x, (1+s) y)
    AxisStretch,       // amplitude * (x, 0) or amplitude * (0, y)
    SplitPolynomial,   // (sum_k ax[k] x^k, sum_k by[k] y^k), ax[0] = 0
    BoundaryBump,      // amplitude * b((x-cx)/rx) b((y-cy)/ry) * direction, b(t) = (1-t^2)^3
    Shear,             // (a y, b x)
    Translation,       // constant vector
    Radial,            // amplitude * (z - center)
};

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

struct FieldParams {
    int s = 1;                 // DilationGenerator
    int axis = 0;              // AxisStretch: 0 stretches x, 1 stretches y
    double amplitude = 1.0;    // AxisStretch, BoundaryBump, Radial
    std::vector<double> ax{};  // SplitPolynomial
    std::vector<double> by{};
    Vec2 center = Vec2::Zero(); // BoundaryBump, Radial
    Vec2 radii = Vec2::Ones();  // BoundaryBump
    Vec2 direction = Vec2(1.0, 0.0); // BoundaryBump
    double shearA = 0.0;        // Shear
    double shearB = 0.0;
    Vec2 offset = Vec2::Zero(); // Translation
};

/// Closed-form perturbation field psi with exact Jacobian.
class PerturbationField {
public:
    PerturbationField() = default;
    PerturbationField(FieldKind kind, FieldParams params, bool supportAvoidsO);

    FieldKind kind() const { return kind_; }
    const FieldParams& params() const { return params_; }

    /// True when psi vanishes identically on the part of the domain inside O.
    bool support_avoids_o() const { return avoids_; }

    Vec2 value(const Vec2& z) const;
    /// Row i holds the gradient of component i.
    Mat2 jacobian(const Vec2& z) const;
    double divergence(const Vec2& z) const { return jacobian(z).trace(); }

private:
    FieldKind kind_ = FieldKind::Zero;
    FieldParams params_{};
    bool avoids_ = true;
};

/// Validates parameters against the domain and sets the support flag.
/// Throws PerturbationError when a boundary bump meets O or a split
/// polynomial moves the degenerate set (nonzero constant term in psi_x).
PerturbationField make_field(FieldKind kind, const FieldParams& params, const Domain& domain);

/// Config form: kind = ..., plus kind-specific keys (axis, amplitude, ax, by,
/// center, radii, direction, a, b, offset). Throws ConfigError on bad keys.
PerturbationField make_field(const KeyValues& spec, const Domain& domain);

/// One-parameter family of maps: linear (id + eps psi, identity at 0) or the
/// anisotropic dilation (t x, t^{1+s} y), identity at t = 1.
class MapFamily {
public:
    static MapFamily linear(PerturbationField field);
    static MapFamily dilation(int s);

    Vec2 apply(double param, const Vec2& z) const;
    double identity_parameter() const { return dilation_ ? 1.0 : 0.0; }
    const PerturbationField& generator() const { return generator_; }
    bool is_dilation() const { return dilation_; }

private:
    PerturbationField generator_;
    bool dilation_ = false;
    int s_ = 0;
};

struct AdmissibilityOptions {
    double minLipschitzRatio = 1e-6;
    double splitTolerance = 1e-10;
    unsigned seed = 7;
};

struct AdmissibilityReport {
    bool passed = true;
    double minRatio = 0.0; // sampled lower bound of |phi(z1)-phi(z2)| / |z1-z2|
    std::string violation; // first failing check, empty on pass
};

/// Sample-based check that phi = family(param) is admissible on the domain:
/// bi-Lipschitz lower bound over point pairs in the closure, and inside O the
/// split structure (phi_x independent of y, phi_y independent of x, phi_x(0) = 0).
AdmissibilityReport check_admissible(const MapFamily& family, double param, const Domain& domain,
                                     int samples, const AdmissibilityOptions& opts = {});

/// Same for phi = id + eps * psi.
AdmissibilityReport check_admissible(const PerturbationField& field, double eps,
                                     const Domain& domain, int samples,
                                     const AdmissibilityOptions& opts = {});

using PointMap = std::function<Vec2(const Vec2&)>;

/// Transports every node through the map; connectivity and boundary tags are
/// kept. Throws PerturbationError on coincident images or inverted triangles.
Mesh map_mesh(const Mesh& mesh, const PointMap& map);
Mesh map_mesh(const Mesh& mesh, const MapFamily& family, double param);

} // namespace grushin
