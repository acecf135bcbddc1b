#pragma once

#include "grushin/shape_derivative.hpp"

#include <string>
#include <vector>

namespace grushin {

struct PohozaevResult {
    double lhs = 0.0; // lambda_j
    double rhs = 0.0; // 1/2 sum_e w (dv/dn)^2 |n_G|^2 ((x, (1+s) y) . n)
    double residual = 0.0; // |lhs - rhs| / lhs
};

/// Rellich-Pohozaev identity for eigenpair j (0-based); the eigenvector must
/// be mass-normalized.
PohozaevResult pohozaev_residual(const EigenSystem& esys, int j, const TraceTable& traces, const Domain& domain);
PohozaevResult pohozaev_residual(const EigenSystem& esys, int j, const DiscreteForms& forms, const Mesh& mesh,
                                 const Domain& domain);

struct ScalingResult {
    double t = 1.0;
    VectorX base;       // lambda_j on the mesh
    VectorX scaled;     // lambda_j on the dilated mesh
    VectorX deviations; // |t^2 scaled - base| / base
    double maxDeviation = 0.0;
};

ScalingResult scaling_check(const Domain& domain, const Mesh& mesh, double t, int m, double tol = 1e-10);

enum class Constraint { Volume, Perimeter };

std::string to_string(Constraint c);

struct ConstraintDifferential {
    double value = 0.0;
    bool cornerFlag = false; // perimeter on a domain with corners: corners carry no curvature mass
};

/// Boundary integral of psi.n (times the curvature H for the perimeter)
/// by Gauss-Legendre quadrature in the curve parameter over every edge.
ConstraintDifferential constraint_differential(const Mesh& mesh, const Domain& domain,
                                               const PerturbationField& field, Constraint which);

struct ProfileFit {
    double c = 0.0;
    double deviation = 0.0;
    bool applicable = true;
};

/// Fits g against a constant (volume) or c H (perimeter) in the weighted
/// least squares sense; deviation is the weighted RMS misfit over the
/// weighted mean (volume: mean of g, perimeter: mean of |g|).
ProfileFit fit_profile(const std::vector<double>& g, const std::vector<double>& weights,
                       const std::vector<double>& curvature, Constraint which);

struct CriticalityResult {
    std::vector<double> arclength;
    std::vector<double> g;
    std::vector<double> curvature;
    std::vector<char> used; // 0 for edges touching {x = 0}
    ProfileFit fit;
};

/// Criticality profile g = sum_{l in F} (dv_l/dn)^2 |n_G|^2 and its fit.
/// Edges with midpoint |x| < 1e-10 are excluded (only when s >= 1).
CriticalityResult criticality_residual(const EigenSystem& esys, const Cluster& F, const TraceTable& traces,
                                       Constraint which);
CriticalityResult criticality_residual(const EigenSystem& esys, const Cluster& F, const DiscreteForms& forms,
                                       const Mesh& mesh, const Domain& domain, Constraint which);

} // namespace grushin
