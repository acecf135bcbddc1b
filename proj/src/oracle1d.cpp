#include "grushin/oracle1d.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <tuple>

namespace grushin {

namespace {

// Symmetric tridiagonal T = tridiag(-1/h^2, 2/h^2 + c x^{2s}, -1/h^2).
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> xs;
    double off = 0.0;

    Tridiagonal(double a, double b, double c, int s, int intervals)
    {
        const double h = (b - a) / intervals;
        off = -1.0 / (h * h);
        diag.resize(intervals - 1);
        xs.resize(intervals - 1);
        for (int i = 0; i < intervals - 1; ++i) {
            xs[i] = a + (i + 1) * h;
            diag[i] = 2.0 / (h * h) + c * std::pow(xs[i], 2 * s);
        }
    }

    // Number of eigenvalues strictly below x (Sturm sequence).
    int count_below(double x) const
    {
        int neg = 0;
        double q = 1.0;
        const double e2 = off * off;
        for (std::size_t i = 0; i < diag.size(); ++i) {
            q = diag[i] - x - (i == 0 ? 0.0 : e2 / q);
            if (q == 0.0)
                q = -1e-300;
            if (q < 0.0)
                ++neg;
        }
        return neg;
    }

    // n-th eigenvalue, 1-based, by bisection.
    double eigenvalue(int n) const
    {
        double lo = *std::min_element(diag.begin(), diag.end()) - 2.0 * std::abs(off);
        lo = std::max(lo, 0.0); // T is positive definite
        double hi = 1.0;
        while (count_below(hi) < n)
            hi *= 2.0;
        for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (count_below(mid) >= n)
                hi = mid;
            else
                lo = mid;
        }
        return 0.5 * (lo + hi);
    }
};

SturmResult ladder(double a, double b, double c, int s, int first, int count, double tol, const SturmOptions& opts)
{
    if (!(a < b))
        throw ConfigError("Sturm-Liouville interval needs a < b");
    if (c < 0)
        throw ConfigError("Sturm-Liouville coefficient c must be nonnegative");
    SturmResult out;
    // table[level][j] per eigenvalue
    std::vector<std::vector<std::vector<double>>> table(count);
    const int levels = opts.fixedLevels > 0 ? opts.fixedLevels : opts.maxLevel + 1;
    for (int level = 0; level < levels; ++level) {
        const int intervals = opts.baseIntervals << level;
        out.gridSizes.push_back(intervals);
        const Tridiagonal t(a, b, c, s, intervals);
        bool done = level > 0;
        out.values.assign(count, 0.0);
        out.errors.assign(count, 0.0);
        for (int i = 0; i < count; ++i) {
            std::vector<double> row{t.eigenvalue(first + i)};
            const int depth = std::min(level, opts.depth);
            for (int j = 1; j <= depth; ++j) {
                const double f = std::pow(4.0, j);
                row.push_back(row[j - 1] + (row[j - 1] - table[i].back()[j - 1]) / (f - 1.0));
            }
            table[i].push_back(row);
            out.values[i] = row.back();
            out.errors[i] = depth == 0 ? std::abs(row.back()) : std::abs(row[depth] - row[depth - 1]);
            if (depth < 2 || out.errors[i] >= tol * std::max(1.0, std::abs(out.values[i])))
                done = false;
        }
        out.converged = done;
        if (opts.fixedLevels == 0 && done)
            break;
    }
    if (opts.fixedLevels > 0) {
        out.converged = true;
        for (int i = 0; i < count; ++i)
            out.converged = out.converged && out.errors[i] < tol * std::max(1.0, std::abs(out.values[i]));
    }
    return out;
}

} // namespace

SturmResult sturm_liouville_eigs(double a, double b, double c, int s, int count, double tol, const SturmOptions& opts)
{
    if (count < 1)
        throw ConfigError("Sturm-Liouville count must be positive");
    return ladder(a, b, c, s, 1, count, tol, opts);
}

SturmResult sturm_liouville_eig(double a, double b, double c, int s, int n, double tol, const SturmOptions& opts)
{
    if (n < 1)
        throw ConfigError("Sturm-Liouville mode index is 1-based");
    return ladder(a, b, c, s, n, 1, tol, opts);
}

std::pair<std::vector<double>, std::vector<double>> sturm_liouville_mode(double a, double b, double c, int s,
                                                                         int n, int intervals)
{
    const Tridiagonal t(a, b, c, s, intervals);
    // shift slightly below the eigenvalue so the inverse iteration matrix is nonsingular
    const double lam = t.eigenvalue(n);
    const double lower = n > 1 ? t.eigenvalue(n - 1) : 0.0;
    const double upper = t.eigenvalue(n + 1);
    const double shift = lam - 1e-6 * std::min(lam - lower, upper - lam);
    const std::size_t m = t.diag.size();
    std::vector<double> v(m, 1.0);
    for (std::size_t i = 0; i < m; ++i)
        v[i] = 1.0 + 1e-3 * std::sin(1.0 + 7.0 * i); // generic start
    for (int it = 0; it < 4; ++it) {
        // Thomas algorithm on T - shift I
        std::vector<double> cp(m), dp(m);
        double denom = t.diag[0] - shift;
        cp[0] = t.off / denom;
        dp[0] = v[0] / denom;
        for (std::size_t i = 1; i < m; ++i) {
            denom = t.diag[i] - shift - t.off * cp[i - 1];
            cp[i] = t.off / denom;
            dp[i] = (v[i] - t.off * dp[i - 1]) / denom;
        }
        v[m - 1] = dp[m - 1];
        for (std::size_t i = m - 1; i-- > 0;)
            v[i] = dp[i] - cp[i] * v[i + 1];
        double big = 0.0;
        for (double x : v)
            big = std::abs(x) > std::abs(big) ? x : big;
        for (double& x : v)
            x /= big;
    }
    return {t.xs, v};
}

double separable_eigenvalue(double a, double b, double L, int s, int n, int k, double tol, const SturmOptions& opts)
{
    if (!(L > 0))
        throw ConfigError("rectangle height must be positive");
    const double ck = std::pow(k * std::numbers::pi / L, 2);
    return sturm_liouville_eig(a, b, ck, s, n, tol, opts).values[0];
}

OracleSpectrum rectangle_spectrum(double a, double b, double L, int s, int count, double tol)
{
    if (!(a < b) || !(L > 0))
        throw ConfigError("rectangle_spectrum needs a < b and L > 0");
    if (count < 1)
        throw ConfigError("rectangle_spectrum count must be positive");
    OracleSpectrum out;
    const int kCap = 400;
    for (int k = 1;; ++k) {
        if (k > kCap)
            throw Error("rectangle_spectrum: k-branch certification failed");
        const double ck = std::pow(k * std::numbers::pi / L, 2);
        const auto r = sturm_liouville_eigs(a, b, ck, s, count, tol);
        if (!r.converged)
            throw Error("rectangle_spectrum: 1D oracle did not reach tolerance");
        for (int n = 0; n < count; ++n)
            out.entries.push_back({r.values[n], n + 1, k, r.errors[n]});
        if (r.gridSizes.size() > out.gridSizes.size())
            out.gridSizes = r.gridSizes;
        out.branches = k;
        std::sort(out.entries.begin(), out.entries.end(), [](const OracleEntry& x, const OracleEntry& y) {
            return std::tie(x.lambda, x.k, x.n) < std::tie(y.lambda, y.k, y.n);
        });
        // Every later branch has larger c, so its eigenvalues exceed this
        // branch's ground state (c-monotonicity).
        if (static_cast<int>(out.entries.size()) >= count && r.values[0] > out.entries[count - 1].lambda)
            break;
    }
    out.entries.resize(count);
    return out;
}

Crossing tune_crossing(double a, double b, int s, std::pair<int, int> mode1, std::pair<int, int> mode2,
                       std::pair<double, double> bracket)
{
    auto [lo, hi] = bracket;
    if (!(lo > 0 && lo < hi))
        throw ConfigError("tune_crossing: bracket must satisfy 0 < L0 < L1");
    // Freeze the grid ladder so the difference is a continuous function of L.
    SturmOptions fixed;
    {
        const double mid = 0.5 * (lo + hi);
        const int nmax = std::max(mode1.first, mode2.first);
        const int kmax = std::max(mode1.second, mode2.second);
        const auto probe = sturm_liouville_eig(a, b, std::pow(kmax * std::numbers::pi / lo, 2), s, nmax, 1e-11);
        const auto probe2 = sturm_liouville_eig(a, b, std::pow(std::numbers::pi / mid, 2), s, nmax, 1e-11);
        fixed.fixedLevels = static_cast<int>(std::max(probe.gridSizes.size(), probe2.gridSizes.size()));
    }
    auto value = [&](double L, std::pair<int, int> md) {
        return separable_eigenvalue(a, b, L, s, md.first, md.second, 1e-11, fixed);
    };
    auto diff = [&](double L) { return value(L, mode1) - value(L, mode2); };
    const double flo = diff(lo), fhi = diff(hi);
    if (flo == 0.0)
        hi = lo;
    else if (fhi == 0.0)
        lo = hi;
    else if ((flo > 0) == (fhi > 0))
        throw Error("tune_crossing: no sign change over the bracket");
    double L = lo;
    if (lo != hi) {
        boost::uintmax_t iters = 200;
        auto [r0, r1] = boost::math::tools::toms748_solve(diff, lo, hi, flo, fhi,
                                                          boost::math::tools::eps_tolerance<double>(52), iters);
        const double d0 = std::abs(diff(r0)), d1 = std::abs(diff(r1));
        L = d0 <= d1 ? r0 : r1;
    }
    Crossing out;
    out.L = L;
    const double v1 = value(L, mode1), v2 = value(L, mode2);
    out.value = 0.5 * (v1 + v2);
    out.residual = std::abs(v1 - v2) / v1;
    return out;
}

} // namespace grushin
