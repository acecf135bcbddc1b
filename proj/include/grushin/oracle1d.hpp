#pragma once

#include "grushin/types.hpp"

#include <utility>
#include <vector>

namespace grushin {

/// Controls the finite-difference ladder used by sturm_liouville_eigs.
/// Level k uses baseIntervals * 2^k uniform intervals.
struct SturmOptions {
    int baseIntervals = 128;
    int maxLevel = 7;
    int fixedLevels = 0; // > 0: use exactly this many levels, no adaptivity
    int depth = 3;       // Richardson columns (h^2, h^4, h^6)
};

struct SturmResult {
    std::vector<double> values; // ascending
    std::vector<double> errors; // extrapolation error estimates
    std::vector<int> gridSizes; // intervals per level used
    bool converged = false;
};

/// Lowest `count` eigenvalues of -X'' + c x^{2s} X = lambda X on (a, b),
/// X(a) = X(b) = 0. Converged when every error estimate is below
/// tol * max(1, lambda).
SturmResult sturm_liouville_eigs(double a, double b, double c, int s, int count, double tol = 1e-9,
                                 const SturmOptions& opts = {});

/// Single eigenvalue (1-based index n) with the same ladder.
SturmResult sturm_liouville_eig(double a, double b, double c, int s, int n, double tol = 1e-9,
                                const SturmOptions& opts = {});

/// Finite-difference eigenvector (1-based index n) on `intervals` uniform
/// intervals; returns interior grid points and values with unit max norm.
std::pair<std::vector<double>, std::vector<double>> sturm_liouville_mode(double a, double b, double c, int s,
                                                                         int n, int intervals);

struct OracleEntry {
    double lambda = 0.0;
    int n = 0; // 1D mode index
    int k = 0; // sin(k pi y / L)
    double error = 0.0;
};

struct OracleSpectrum {
    std::vector<OracleEntry> entries;
    std::vector<int> gridSizes;
    int branches = 0; // k-branches computed
};

/// Lowest eigenvalues of the Dirichlet Grushin Laplacian on (a,b) x (0,L) by
/// separation of variables.
OracleSpectrum rectangle_spectrum(double a, double b, double L, int s, int count, double tol = 1e-9);

struct Crossing {
    double L = 0.0;
    double value = 0.0;
    double residual = 0.0; // |lambda_1 - lambda_2| / lambda_1 at L
};

/// Height L in the bracket where the separable modes (n1,k1) and (n2,k2)
/// on (a,b) x (0,L) have equal eigenvalues.
Crossing tune_crossing(double a, double b, int s, std::pair<int, int> mode1, std::pair<int, int> mode2,
                       std::pair<double, double> bracket);

/// Eigenvalue of the separable mode (n,k) on (a,b) x (0,L).
double separable_eigenvalue(double a, double b, double L, int s, int n, int k, double tol = 1e-9,
                            const SturmOptions& opts = {});

} // namespace grushin
