#include "grushin/shape_derivative.hpp"

#include "grushin/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace grushin {

std::string to_string(FormKind kind) { return kind == FormKind::Volume ? "volume" : "boundary"; }

TraceTable normal_derivative_trace(const MatrixX& nodal, const Mesh& mesh, const Domain& domain)
{
    if (mesh.boundaryTriangle.size() != mesh.boundary.size())
        throw GeometryError("boundary edges without adjacent triangles");
    TraceTable out;
    out.s = domain.s();
    out.edges = boundary_geometry(domain, mesh);
    const auto ne = static_cast<Eigen::Index>(mesh.boundary.size());
    out.dvdn.resize(ne, nodal.cols());
    out.conormal2.resize(ne);
    for (Eigen::Index e = 0; e < ne; ++e) {
        const int t = mesh.boundaryTriangle[e];
        if (t < 0)
            throw GeometryError("boundary edge " + std::to_string(e) + " has no adjacent triangle");
        const auto g = hat_gradients(triangle_of(mesh, t));
        const auto& tri = mesh.triangles[t];
        const Vec2& n = out.edges[e].normal;
        for (Eigen::Index l = 0; l < nodal.cols(); ++l) {
            Vec2 grad = Vec2::Zero();
            for (int k = 0; k < 3; ++k)
                grad += nodal(tri[k], l) * g.row(k).transpose();
            out.dvdn(e, l) = grad.dot(n);
        }
        const double x = out.edges[e].midpoint.x();
        out.conormal2[e] = n.x() * n.x() + std::pow(x, 2 * out.s) * n.y() * n.y();
    }
    return out;
}

TraceTable normal_derivative_trace(const EigenSystem& esys, const DiscreteForms& forms, const Mesh& mesh,
                                   const Domain& domain)
{
    MatrixX nodal(static_cast<Eigen::Index>(mesh.nodes.size()), esys.size());
    for (int l = 0; l < esys.size(); ++l)
        nodal.col(l) = forms.to_nodal(esys.eigenvectors.col(l));
    return normal_derivative_trace(nodal, mesh, domain);
}

std::optional<std::string> regularity_gate(const Domain& domain, const PerturbationField& field)
{
    if (domain.s() >= 1 && domain.meets_degenerate_set() && !field.support_avoids_o())
        return "boundary form refused: the domain meets {x=0} and the field does not vanish on O";
    return std::nullopt;
}

namespace {

void check_cluster(const EigenSystem& esys, const Cluster& F)
{
    if (F.indices.empty())
        throw ConfigError("empty cluster");
    for (int i : F.indices)
        if (i < 0 || i >= esys.size())
            throw ConfigError("cluster index " + std::to_string(i + 1) + " outside the computed spectrum");
}

double binomial(int n, int k)
{
    double r = 1.0;
    for (int i = 1; i <= k; ++i)
        r = r * (n - k + i) / i;
    return r;
}

MatrixX symmetrize(const MatrixX& a) { return 0.5 * (a + a.transpose()); }

VectorX sorted_eigenvalues(const MatrixX& a)
{
    Eigen::SelfAdjointEigenSolver<MatrixX> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

} // namespace

MatrixX hadamard_matrix(const EigenSystem& esys, const TraceTable& traces, const Cluster& F,
                        const PerturbationField& field, const Domain& domain)
{
    check_cluster(esys, F);
    if (auto why = regularity_gate(domain, field))
        throw RegularityGateError(*why);
    const int k = F.size();
    MatrixX h = MatrixX::Zero(k, k);
    for (Eigen::Index e = 0; e < traces.dvdn.rows(); ++e) {
        const auto& rec = traces.edges[e];
        const double psin = field.value(rec.midpoint).dot(rec.normal);
        if (psin == 0.0)
            continue;
        const double w = -rec.weight * psin * traces.conormal2[e];
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j)
                h(i, j) += w * traces.dvdn(e, F.indices[i]) * traces.dvdn(e, F.indices[j]);
    }
    if (esys.normalization == Normalization::FormOrthonormal)
        h *= F.commonValue;
    return symmetrize(h);
}

MatrixX hadamard_matrix(const EigenSystem& esys, const DiscreteForms& forms, const Cluster& F,
                        const PerturbationField& field, const Mesh& mesh, const Domain& domain)
{
    if (auto why = regularity_gate(domain, field))
        throw RegularityGateError(*why);
    return hadamard_matrix(esys, normal_derivative_trace(esys, forms, mesh, domain), F, field, domain);
}

MatrixX volume_matrix(const EigenSystem& esys, const DiscreteForms& forms, const Cluster& F,
                      const PerturbationField& field, const Mesh& mesh, int quadraturePoints)
{
    check_cluster(esys, F);
    const int k = F.size();
    const int s = forms.s;
    const double lambda = F.commonValue;
    const auto& rule = triangle_rule(quadraturePoints);
    std::vector<VectorX> nodal;
    for (int i : F.indices)
        nodal.push_back(forms.to_nodal(esys.eigenvectors.col(i)));

    MatrixX v = MatrixX::Zero(k, k);
    std::vector<Vec2> grad(k);
    std::vector<double> val(k);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const Triangle tri = triangle_of(mesh, t);
        const auto& ids = mesh.triangles[t];
        const auto g = hat_gradients(tri);
        bool any = false;
        for (int i = 0; i < k; ++i) {
            grad[i] = Vec2::Zero();
            for (int c = 0; c < 3; ++c)
                grad[i] += nodal[i][ids[c]] * g.row(c).transpose();
            any = any || grad[i].squaredNorm() > 0.0;
        }
        if (!any)
            continue;
        const Vec2 e1 = tri[1] - tri[0], e2 = tri[2] - tri[0];
        const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
        for (std::size_t q = 0; q < rule.points.size(); ++q) {
            const Vec2& r = rule.points[q];
            const Vec2 z = tri[0] + r.x() * e1 + r.y() * e2;
            const Mat2 dpsi = field.jacobian(z);
            const double div = dpsi.trace();
            const double psix = field.value(z).x();
            const double x = z.x();
            const double w2s = std::pow(x, 2 * s);
            const double dw = s == 0 ? 0.0 : 2.0 * s * std::pow(x, 2 * s - 1) * psix;
            const double bary[3] = {1.0 - r.x() - r.y(), r.x(), r.y()};
            for (int i = 0; i < k; ++i) {
                val[i] = 0.0;
                for (int c = 0; c < 3; ++c)
                    val[i] += bary[c] * nodal[i][ids[c]];
            }
            if (div == 0.0 && dpsi.isZero(0.0) && dw == 0.0)
                continue;
            const double wq = rule.weights[q] * jac;
            for (int i = 0; i < k; ++i) {
                // row vector g_i Dpsi
                const Vec2 gd = dpsi.transpose() * grad[i];
                for (int j = i; j < k; ++j) {
                    const Vec2 ge = dpsi.transpose() * grad[j];
                    const double gg = grad[i].x() * grad[j].x() + w2s * grad[i].y() * grad[j].y();
                    const double cross = gd.x() * grad[j].x() + w2s * gd.y() * grad[j].y() + ge.x() * grad[i].x()
                                         + w2s * ge.y() * grad[i].y();
                    const double b =
                        (gg - lambda * val[i] * val[j]) * div - cross + dw * grad[i].y() * grad[j].y();
                    v(i, j) += wq * b;
                }
            }
        }
    }
    for (int i = 0; i < k; ++i)
        for (int j = 0; j < i; ++j)
            v(i, j) = v(j, i);
    if (esys.normalization == Normalization::FormOrthonormal)
        v *= lambda;
    return v;
}

double elementary_symmetric(const VectorX& values, int tau)
{
    std::vector<double> e(tau + 1, 0.0);
    e[0] = 1.0;
    for (double x : values)
        for (int k = tau; k >= 1; --k)
            e[k] += x * e[k - 1];
    return e[tau];
}

double dLambda(const EigenSystem& esys, const DiscreteForms& forms, const SymmetricFunctionSpec& spec,
               const PerturbationField& field, const Mesh& mesh, const Domain& domain, FormKind mode,
               std::optional<Normalization> require)
{
    const int size = spec.F.size();
    if (spec.tau < 1 || spec.tau > size)
        throw ConfigError("tau must lie in [1, |F|] (tau=" + std::to_string(spec.tau) + ", |F|="
                          + std::to_string(size) + ")");
    if (require && *require != esys.normalization)
        throw Error("normalization mismatch: eigenvectors are " + to_string(esys.normalization) + ", formula needs "
                    + to_string(*require));
    const MatrixX m = mode == FormKind::Volume ? volume_matrix(esys, forms, spec.F, field, mesh)
                                               : hadamard_matrix(esys, forms, spec.F, field, mesh, domain);
    return binomial(size - 1, spec.tau - 1) * std::pow(spec.F.commonValue, spec.tau - 1) * m.trace();
}

namespace {

VectorX solve_values(const Mesh& mesh, int s, int count, double tol)
{
    const auto forms = assemble(mesh, s);
    return solve_lowest(forms, std::min(count, forms.dofs() - 1), tol).eigenvalues;
}

VectorX cluster_values(const VectorX& all, const Cluster& F)
{
    VectorX out(F.size());
    for (int i = 0; i < F.size(); ++i)
        out[i] = all[F.indices[i]];
    return out;
}

// Gaps from the cluster to its outside neighbors (infinity when absent).
std::pair<double, double> neighbor_gaps(const VectorX& all, const Cluster& F)
{
    const int lo = F.indices.front(), hi = F.indices.back();
    const double inf = std::numeric_limits<double>::infinity();
    const double below = lo > 0 ? all[lo] - all[lo - 1] : inf;
    const double above = hi + 1 < all.size() ? all[hi + 1] - all[hi] : inf;
    return {below, above};
}

bool gap_collapsed(const VectorX& at0, const VectorX& at, const Cluster& F)
{
    const auto [b0, a0] = neighbor_gaps(at0, F);
    const auto [b, a] = neighbor_gaps(at, F);
    return b < 0.25 * b0 || a < 0.25 * a0;
}

void check_family(const MapFamily& family, double param, const Domain& domain, const FdOptions& opts)
{
    if (!opts.checkAdmissible)
        return;
    const auto rep = check_admissible(family, param, domain, opts.admissibilitySamples);
    if (!rep.passed)
        throw PerturbationError("perturbation at parameter " + std::to_string(param)
                                + " is not admissible: " + rep.violation);
}

} // namespace

FdReport fd_derivative(const Domain& domain, const Mesh& mesh, const SymmetricFunctionSpec& spec,
                       const MapFamily& family, const FdOptions& opts)
{
    if (spec.tau < 1 || spec.tau > spec.F.size())
        throw ConfigError("tau must lie in [1, |F|]");
    std::vector<double> eps = opts.eps;
    std::sort(eps.begin(), eps.end(), std::greater<>());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    if (eps.size() < 2 || eps.back() <= 0.0)
        throw ConfigError("fd_derivative needs at least two distinct positive eps");

    const double c = family.identity_parameter();
    for (double e : eps) {
        check_family(family, c + e, domain, opts);
        check_family(family, c - e, domain, opts);
    }
    const int s = domain.s();
    const int count = spec.F.indices.back() + 2;
    const int n = static_cast<int>(eps.size());
    std::vector<VectorX> plus(n), minus(n);
    VectorX at0;
    const int threads = opts.threads > 0 ? opts.threads : thread_limit().load();
    parallel_for(2 * n + 1, threads, [&](int job) {
        if (job == 2 * n) {
            at0 = solve_values(mesh, s, count, opts.solverTol);
            return;
        }
        const double e = eps[job / 2];
        const double param = job % 2 == 0 ? c + e : c - e;
        VectorX v = solve_values(map_mesh(mesh, family, param), s, count, opts.solverTol);
        (job % 2 == 0 ? plus : minus)[job / 2] = std::move(v);
    });

    FdReport out;
    out.cluster0 = cluster_values(at0, spec.F);
    out.value0 = elementary_symmetric(out.cluster0, spec.tau);
    std::vector<double> diffs;
    for (int i = 0; i < n; ++i) {
        FdSample smp;
        smp.eps = eps[i];
        smp.clusterPlus = cluster_values(plus[i], spec.F);
        smp.clusterMinus = cluster_values(minus[i], spec.F);
        smp.valuePlus = elementary_symmetric(smp.clusterPlus, spec.tau);
        smp.valueMinus = elementary_symmetric(smp.clusterMinus, spec.tau);
        smp.difference = (smp.valuePlus - smp.valueMinus) / (2.0 * eps[i]);
        diffs.push_back(smp.difference);
        if (gap_collapsed(at0, plus[i], spec.F) || gap_collapsed(at0, minus[i], spec.F))
            out.crossing = true;
        // report in the caller's eps order
        out.samples.push_back(std::move(smp));
    }
    const double e1 = eps[n - 2], e2 = eps[n - 1];
    const double d1 = diffs[n - 2], d2 = diffs[n - 1];
    const double r2 = (e1 / e2) * (e1 / e2);
    out.richardson = d2 + (d2 - d1) / (r2 - 1.0);
    out.richardsonError = std::abs(out.richardson - d2);
    // slope of successive differences |D(e_i) - D(e_{i+1})| against e_i
    if (n >= 3) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int used = 0;
        for (int i = 0; i + 1 < n; ++i) {
            const double d = std::abs(diffs[i] - diffs[i + 1]);
            if (d <= 0.0)
                continue;
            const double x = std::log(eps[i]), y = std::log(d);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
            ++used;
        }
        out.convergenceSlope = used >= 2 ? (used * sxy - sx * sy) / (used * sxx - sx * sx)
                                         : std::numeric_limits<double>::quiet_NaN();
    } else {
        out.convergenceSlope = std::numeric_limits<double>::quiet_NaN();
    }
    if (out.crossing)
        out.warning = "a neighboring eigenvalue approached the cluster inside the eps sweep";
    // restore caller order
    std::vector<FdSample> ordered;
    for (double e : opts.eps)
        for (const auto& smp : out.samples)
            if (smp.eps == e) {
                ordered.push_back(smp);
                break;
            }
    out.samples = std::move(ordered);
    return out;
}

BranchSlopes branch_slopes(const Domain& domain, const Mesh& mesh, const Cluster& F,
                           const PerturbationField& field, double eps, const FdOptions& opts)
{
    if (!(eps > 0.0))
        throw ConfigError("branch_slopes needs eps > 0");
    if (auto why = regularity_gate(domain, field))
        throw RegularityGateError(*why);
    const int s = domain.s();
    const int count = F.indices.back() + 2;
    const auto forms = assemble(mesh, s);
    const auto esys = solve_lowest(forms, std::min(count, forms.dofs() - 1), opts.solverTol);
    Cluster fc = F;
    fc.commonValue = cluster_values(esys.eigenvalues, F).mean();

    BranchSlopes out;
    out.matrix = hadamard_matrix(esys, forms, fc, field, mesh, domain);
    out.formula = sorted_eigenvalues(out.matrix);

    const MapFamily family = MapFamily::linear(field);
    out.oneSided = F.size() > 1;
    const std::vector<double> params = out.oneSided ? std::vector<double>{eps, 2 * eps} : std::vector<double>{eps, -eps};
    for (double p : params)
        check_family(family, p, domain, opts);
    std::vector<VectorX> vals(2);
    const int threads = opts.threads > 0 ? opts.threads : thread_limit().load();
    parallel_for(2, threads, [&](int i) {
        vals[i] = solve_values(map_mesh(mesh, family, params[i]), s, count, opts.solverTol);
    });
    const VectorX c0 = cluster_values(esys.eigenvalues, F);
    const VectorX ca = cluster_values(vals[0], F);
    const VectorX cb = cluster_values(vals[1], F);
    out.fd = out.oneSided ? VectorX((-3.0 * c0 + 4.0 * ca - cb) / (2.0 * eps)) : VectorX((ca - cb) / (2.0 * eps));
    std::sort(out.fd.begin(), out.fd.end());
    out.crossing = gap_collapsed(esys.eigenvalues, vals[0], F) || gap_collapsed(esys.eigenvalues, vals[1], F);
    return out;
}

DerivativeReport derivative_report(const Domain& domain, const Mesh& mesh, const EigenSystem& esys,
                                   const DiscreteForms& forms, const SymmetricFunctionSpec& spec,
                                   const PerturbationField& field, const FdOptions& opts)
{
    DerivativeReport out;
    out.normalization = esys.normalization;
    out.volumeForm = dLambda(esys, forms, spec, field, mesh, domain, FormKind::Volume);
    if (auto why = regularity_gate(domain, field)) {
        out.gateMessage = *why;
        out.branchMatrix = volume_matrix(esys, forms, spec.F, field, mesh);
    } else {
        out.boundaryForm = dLambda(esys, forms, spec, field, mesh, domain, FormKind::Boundary);
        out.branchMatrix = hadamard_matrix(esys, forms, spec.F, field, mesh, domain);
    }
    out.branchSlopes = sorted_eigenvalues(out.branchMatrix);
    out.fd = fd_derivative(domain, mesh, spec, MapFamily::linear(field), opts);
    return out;
}

} // namespace grushin
