#pragma once

#include "grushin/eigensolver.hpp"
#include "grushin/perturbation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace grushin {

/// Normal derivatives of P1 functions on every boundary edge: the constant
/// gradient of the adjacent triangle dotted with the exact normal at the
/// edge midpoint.
struct TraceTable {
    MatrixX dvdn; // boundary edges x functions
    std::vector<BoundaryRecord> edges;
    VectorX conormal2; // |n_G|^2 = n_x^2 + x^{2s} n_y^2 at the edge midpoints
    int s = 0;
};

/// Columns of `nodal` are functions given at every mesh node.
TraceTable normal_derivative_trace(const MatrixX& nodal, const Mesh& mesh, const Domain& domain);

/// Eigenvector columns (DoF ordering of `forms`), zero on the boundary.
TraceTable normal_derivative_trace(const EigenSystem& esys, const DiscreteForms& forms, const Mesh& mesh,
                                   const Domain& domain);

struct SymmetricFunctionSpec {
    Cluster F;
    int tau = 1;
};

enum class FormKind { Volume, Boundary };

std::string to_string(FormKind kind);

/// Message describing why the boundary form is refused, or nullopt when the
/// boundary form may be used: s >= 1, the closure meets {x = 0}, and psi
/// does not vanish on O.
std::optional<std::string> regularity_gate(const Domain& domain, const PerturbationField& field);

/// Boundary-form branch matrix on the cluster, entry (i,j) =
/// -sum_e w_e (psi.n) dv_i/dn dv_j/dn |n_G|^2, times lambda_F when the
/// eigenvectors are form-normalized. Symmetrized. Throws RegularityGateError.
MatrixX hadamard_matrix(const EigenSystem& esys, const TraceTable& traces, const Cluster& F,
                        const PerturbationField& field, const Domain& domain);
MatrixX hadamard_matrix(const EigenSystem& esys, const DiscreteForms& forms, const Cluster& F,
                        const PerturbationField& field, const Mesh& mesh, const Domain& domain);

/// Volume-form branch matrix: the bilinear volume integrand of the shape
/// differential on the cluster vectors, same scaling convention as
/// hadamard_matrix (eigenvalues are the branch slopes in either case).
MatrixX volume_matrix(const EigenSystem& esys, const DiscreteForms& forms, const Cluster& F,
                      const PerturbationField& field, const Mesh& mesh, int quadraturePoints = 5);

/// Directional derivative of the symmetric function Lambda_{F,tau}.
/// `require` rejects eigenvectors in the wrong normalization.
double dLambda(const EigenSystem& esys, const DiscreteForms& forms, const SymmetricFunctionSpec& spec,
               const PerturbationField& field, const Mesh& mesh, const Domain& domain, FormKind mode,
               std::optional<Normalization> require = std::nullopt);

/// Elementary symmetric polynomial e_tau of `values`.
double elementary_symmetric(const VectorX& values, int tau);

struct FdOptions {
    std::vector<double> eps{4e-3, 2e-3, 1e-3};
    double solverTol = 1e-10;
    bool checkAdmissible = true;
    int admissibilitySamples = 200;
    int threads = 0; // 0: thread_limit()
};

struct FdSample {
    double eps = 0.0;
    double valuePlus = 0.0;
    double valueMinus = 0.0;
    double difference = 0.0; // central difference
    VectorX clusterPlus;
    VectorX clusterMinus;
};

struct FdReport {
    double value0 = 0.0;
    VectorX cluster0;
    std::vector<FdSample> samples; // in the order of FdOptions::eps
    double richardson = 0.0;       // from the two smallest eps
    double richardsonError = 0.0;  // |richardson - difference at smallest eps|
    double convergenceSlope = 0.0; // log-log slope of successive |D(e_i) - D(e_i+1)|, needs >= 3 eps
    bool crossing = false;         // neighbor eigenvalue approached the cluster
    std::string warning;
};

/// Finite differences of Lambda_{F,tau} over the family phi_{c +- eps}
/// (c the identity parameter), assembled on mapped meshes with the same
/// connectivity; the cluster is tracked by sorted index.
FdReport fd_derivative(const Domain& domain, const Mesh& mesh, const SymmetricFunctionSpec& spec,
                       const MapFamily& family, const FdOptions& opts = {});

struct BranchSlopes {
    VectorX formula; // eigenvalues of the boundary-form matrix, ascending
    VectorX fd;      // per-branch differences of sorted eigenvalues, ascending
    MatrixX matrix;
    bool oneSided = false;
    bool crossing = false;
};

/// Formula vs finite-difference branch slopes for cluster F (indices in the
/// spectrum of `mesh`). Simple eigenvalues use central differences, clusters
/// the second-order one-sided difference (-3 l(0) + 4 l(e) - l(2e)) / (2e).
BranchSlopes branch_slopes(const Domain& domain, const Mesh& mesh, const Cluster& F,
                           const PerturbationField& field, double eps = 1e-3, const FdOptions& opts = {});

struct DerivativeReport {
    double volumeForm = 0.0;
    std::optional<double> boundaryForm;
    std::string gateMessage;
    FdReport fd;
    MatrixX branchMatrix;
    VectorX branchSlopes;
    Normalization normalization = Normalization::MassOrthonormal;
};

DerivativeReport derivative_report(const Domain& domain, const Mesh& mesh, const EigenSystem& esys,
                                   const DiscreteForms& forms, const SymmetricFunctionSpec& spec,
                                   const PerturbationField& field, const FdOptions& opts = {});

} // namespace grushin
