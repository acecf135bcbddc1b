#include "grushin/eigensolver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace grushin {

std::string to_string(Normalization n)
{
    return n == Normalization::MassOrthonormal ? "massOrthonormal" : "formOrthonormal";
}

namespace {

void fix_signs(MatrixX& v)
{
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::Index k = 0;
        v.col(j).cwiseAbs().maxCoeff(&k);
        if (v(k, j) < 0)
            v.col(j) = -v.col(j);
    }
}

VectorX relative_residuals(const SparseMatrix& a, const SparseMatrix& m, const MatrixX& x,
                           const VectorX& theta, int count)
{
    VectorX r(count);
    for (int j = 0; j < count; ++j) {
        const VectorX mx = m * x.col(j);
        const VectorX ax = a * x.col(j);
        r[j] = (ax - theta[j] * mx).norm() / (std::abs(theta[j]) * mx.norm());
    }
    return r;
}

// Y <- Y R^{-1} with R^T R = Y^T M Y; done twice for stability.
bool m_orthonormalize(MatrixX& y, const SparseMatrix& m)
{
    for (int pass = 0; pass < 2; ++pass) {
        const MatrixX g = y.transpose() * (m * y);
        Eigen::LLT<MatrixX> llt(0.5 * (g + g.transpose()));
        if (llt.info() != Eigen::Success)
            return false;
        y = llt.matrixU().solve<Eigen::OnTheRight>(y);
    }
    return true;
}

EigenSystem dense_solve(const SparseMatrix& a, const SparseMatrix& m, int count)
{
    const MatrixX ad = MatrixX(a);
    const MatrixX md = MatrixX(m);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX> es(ad, md);
    if (es.info() != Eigen::Success)
        throw SolverError("dense generalized eigensolver failed");
    EigenSystem out;
    out.eigenvalues = es.eigenvalues().head(count);
    out.eigenvectors = es.eigenvectors().leftCols(count);
    out.guardValue = count < es.eigenvalues().size() ? es.eigenvalues()[count] : es.eigenvalues()[count - 1];
    out.residuals = relative_residuals(a, m, out.eigenvectors, out.eigenvalues, count);
    return out;
}

} // namespace

EigenSystem solve_lowest(const SparseMatrix& a, const SparseMatrix& m, int count, double tol,
                         const SolverOptions& opts)
{
    const int n = static_cast<int>(a.rows());
    if (count < 1 || count >= n)
        throw SolverError("solve_lowest: need 1 <= m < number of DoFs (m=" + std::to_string(count)
                          + ", dofs=" + std::to_string(n) + ")");
    if (!(tol > 0.0 && tol <= 1e-4))
        throw SolverError("solve_lowest: tol must lie in (0, 1e-4]");

    const int p = std::min(n, count + opts.guardVectors);
    EigenSystem out;
    if (n <= std::max(2 * p, 200)) {
        out = dense_solve(a, m, count);
    } else {
        // Factor A - sigma M; sigma = 0 normally, small negative shifts as fallback.
        Eigen::SimplicialLDLT<SparseMatrix> ldlt;
        const double scale = a.diagonal().cwiseAbs().maxCoeff() / m.diagonal().cwiseAbs().maxCoeff();
        bool ok = false;
        for (double sigma : {0.0, -1e-8 * scale, -1e-4 * scale}) {
            const SparseMatrix shifted = sigma == 0.0 ? a : SparseMatrix(a - sigma * m);
            ldlt.compute(shifted);
            if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0).all()) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw SolverError("factorization of the stiffness matrix failed (not positive definite?)");

        std::mt19937_64 rng(opts.seed);
        std::normal_distribution<double> gauss;
        MatrixX x(n, p);
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            for (Eigen::Index i = 0; i < x.rows(); ++i)
                x(i, j) = gauss(rng);

        VectorX theta;
        VectorX res;
        int it = 0;
        for (;;) {
            ++it;
            MatrixX y = ldlt.solve(m * x);
            if (!m_orthonormalize(y, m))
                throw SolverError("search block lost rank during subspace iteration");
            const MatrixX h = y.transpose() * (a * y);
            Eigen::SelfAdjointEigenSolver<MatrixX> es(0.5 * (h + h.transpose()));
            theta = es.eigenvalues();
            x = y * es.eigenvectors();
            res = relative_residuals(a, m, x, theta, count);
            if (res.maxCoeff() <= tol)
                break;
            if (it >= opts.maxIterations) {
                std::ostringstream msg;
                msg << "subspace iteration did not converge in " << it << " iterations (residual "
                    << res.maxCoeff() << ")";
                throw SolverError(msg.str());
            }
        }
        out.eigenvalues = theta.head(count);
        out.eigenvectors = x.leftCols(count);
        out.guardValue = theta[count];
        out.residuals = res;
        out.iterations = it;
    }
    if ((out.eigenvalues.array() <= 0).any())
        throw SolverError("nonpositive eigenvalue: pencil is not positive definite");
    fix_signs(out.eigenvectors);
    out.normalization = Normalization::MassOrthonormal;
    return out;
}

const Cluster& Clustering::containing(int i) const
{
    for (const auto& c : clusters)
        if (i >= c.indices.front() && i <= c.indices.back())
            return c;
    throw Error("eigenvalue index " + std::to_string(i) + " outside the clustering");
}

Clustering cluster(const VectorX& values, double relTol, double guardValue)
{
    if (!(relTol > 0.0))
        throw ConfigError("cluster relTol must be positive");
    Clustering out;
    const int m = static_cast<int>(values.size());
    int start = 0;
    while (start < m) {
        int end = start + 1;
        while (end < m && values[end] - values[start] <= relTol * values[start])
            ++end;
        Cluster c;
        double sum = 0.0;
        for (int i = start; i < end; ++i) {
            c.indices.push_back(i);
            sum += values[i];
        }
        c.commonValue = sum / (end - start);
        if (end < m) {
            const double gap = values[end] - values[end - 1];
            if (gap <= 2.0 * relTol * values[end - 1]) {
                out.ambiguous = true;
                out.warning += std::string(out.warning.empty() ? "" : "; ") + "ambiguous gap between indices "
                               + std::to_string(end) + " and " + std::to_string(end + 1);
            }
        }
        out.clusters.push_back(std::move(c));
        start = end;
    }
    if (guardValue > 0.0 && m > 0 && guardValue - values[m - 1] <= 2.0 * relTol * values[m - 1]) {
        out.truncated = true;
        out.warning += std::string(out.warning.empty() ? "" : "; ") + "last cluster may extend beyond the computed block";
    }
    return out;
}

Clustering cluster(const EigenSystem& esys, double relTol)
{
    return cluster(esys.eigenvalues, relTol, esys.guardValue);
}

MatrixX gram(const EigenSystem& esys, const SparseMatrix& a, const SparseMatrix& m)
{
    const SparseMatrix& b = esys.normalization == Normalization::MassOrthonormal ? m : a;
    return esys.eigenvectors.transpose() * (b * esys.eigenvectors);
}

EigenSystem renormalize(const EigenSystem& esys, const SparseMatrix& a, const SparseMatrix& m,
                        Normalization target)
{
    EigenSystem out = esys;
    out.normalization = target;
    const MatrixX g = gram(out, a, m);
    // Symmetric (Lowdin) orthonormalization: minimal change within the block.
    Eigen::SelfAdjointEigenSolver<MatrixX> es(0.5 * (g + g.transpose()));
    if ((es.eigenvalues().array() <= 0).any())
        throw SolverError("renormalize: Gram matrix is not positive definite");
    const MatrixX inv_sqrt =
        es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    out.eigenvectors = esys.eigenvectors * inv_sqrt;
    fix_signs(out.eigenvectors);
    return out;
}

} // namespace grushin
