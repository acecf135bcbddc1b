#pragma once

#include "grushin/assembly.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace grushin {

enum class Normalization { MassOrthonormal, FormOrthonormal };

std::string to_string(Normalization n);

/// Lowest eigenpairs of stiffness u = lambda mass u. Eigenvectors are the
/// columns of `eigenvectors` (DoF ordering of the forms they came from).
struct EigenSystem {
    VectorX eigenvalues;  // ascending
    MatrixX eigenvectors; // dofs x m
    Normalization normalization = Normalization::MassOrthonormal;
    VectorX residuals; // ||A u - lambda M u|| / (lambda ||M u||)
    double guardValue = 0.0; // Ritz value just past the requested block
    int iterations = 0;

    int size() const { return static_cast<int>(eigenvalues.size()); }
    /// Reciprocals 1/lambda_j.
    VectorX mu() const { return eigenvalues.cwiseInverse(); }
};

struct SolverOptions {
    int guardVectors = 5;
    int maxIterations = 3000;
    std::uint64_t seed = 20240917;
};

/// Shift-invert subspace iteration (shift 0, sparse LDLT of the stiffness)
/// with Rayleigh-Ritz on the pencil. Small problems go to a dense solver.
EigenSystem solve_lowest(const SparseMatrix& stiffness, const SparseMatrix& mass, int m,
                         double tol = 1e-10, const SolverOptions& opts = {});

inline EigenSystem solve_lowest(const DiscreteForms& forms, int m, double tol = 1e-10,
                                const SolverOptions& opts = {})
{
    return solve_lowest(forms.stiffness, forms.mass, m, tol, opts);
}

struct Cluster {
    std::vector<int> indices; // 0-based, contiguous
    double commonValue = 0.0; // mean of members

    int size() const { return static_cast<int>(indices.size()); }
    int first() const { return indices.front(); }
};

struct Clustering {
    std::vector<Cluster> clusters;
    bool ambiguous = false; // some gap lies in (relTol, 2 relTol]
    bool truncated = false; // last cluster may continue past the computed block
    std::string warning;

    /// Cluster containing eigenvalue index i.
    const Cluster& containing(int i) const;
};

Clustering cluster(const VectorX& eigenvalues, double relTol, double guardValue = 0.0);
Clustering cluster(const EigenSystem& esys, double relTol);

/// Rescales eigenvectors so the target inner product (mass or stiffness) is
/// the identity on the computed block. Eigenvalues are untouched.
EigenSystem renormalize(const EigenSystem& esys, const SparseMatrix& stiffness, const SparseMatrix& mass,
                        Normalization target);

inline EigenSystem renormalize(const EigenSystem& esys, const DiscreteForms& forms, Normalization target)
{
    return renormalize(esys, forms.stiffness, forms.mass, target);
}

/// Gram matrix of the eigenvectors in the declared inner product.
MatrixX gram(const EigenSystem& esys, const SparseMatrix& stiffness, const SparseMatrix& mass);

} // namespace grushin
