#include "grushin/identities.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>

namespace grushin {

std::string to_string(Constraint c) { return c == Constraint::Volume ? "volume" : "perimeter"; }

PohozaevResult pohozaev_residual(const EigenSystem& esys, int j, const TraceTable& traces, const Domain& domain)
{
    if (j < 0 || j >= esys.size())
        throw ConfigError("eigenvalue index " + std::to_string(j + 1) + " out of range");
    if (esys.normalization != Normalization::MassOrthonormal)
        throw Error("Rellich-Pohozaev identity needs mass-normalized eigenvectors");
    const double s1 = 1.0 + domain.s();
    PohozaevResult out;
    out.lhs = esys.eigenvalues[j];
    double sum = 0.0;
    for (Eigen::Index e = 0; e < traces.dvdn.rows(); ++e) {
        const auto& rec = traces.edges[e];
        const Vec2 z = rec.midpoint;
        const double zn = z.x() * rec.normal.x() + s1 * z.y() * rec.normal.y();
        const double d = traces.dvdn(e, j);
        sum += rec.weight * zn * d * d * traces.conormal2[e];
    }
    out.rhs = 0.5 * sum;
    out.residual = std::abs(out.lhs - out.rhs) / out.lhs;
    return out;
}

PohozaevResult pohozaev_residual(const EigenSystem& esys, int j, const DiscreteForms& forms, const Mesh& mesh,
                                 const Domain& domain)
{
    return pohozaev_residual(esys, j, normal_derivative_trace(esys, forms, mesh, domain), domain);
}

ScalingResult scaling_check(const Domain& domain, const Mesh& mesh, double t, int m, double tol)
{
    if (!(t > 0.0))
        throw ConfigError("dilation factor t must be positive");
    const int s = domain.s();
    ScalingResult out;
    out.t = t;
    out.base = solve_lowest(assemble(mesh, s), m, tol).eigenvalues;
    out.scaled = solve_lowest(assemble(map_mesh(mesh, MapFamily::dilation(s), t), s), m, tol).eigenvalues;
    out.deviations = ((t * t * out.scaled - out.base).cwiseAbs().array() / out.base.array()).matrix();
    out.maxDeviation = out.deviations.maxCoeff();
    return out;
}

ConstraintDifferential constraint_differential(const Mesh& mesh, const Domain& domain,
                                               const PerturbationField& field, Constraint which)
{
    using Rule = boost::math::quadrature::gauss<double, 7>;
    ConstraintDifferential out;
    out.cornerFlag = which == Constraint::Perimeter && domain.corner_count() > 0;
    const auto& segs = domain.segments();
    for (const auto& e : mesh.boundary) {
        if (e.segment < 0 || e.segment >= static_cast<int>(segs.size()))
            throw GeometryError("boundary edge lacks a segment tag");
        const Segment& seg = segs[e.segment];
        // psi.n |r'| = psi . (y', -x')
        out.value += Rule::integrate(
            [&](double t) {
                const Vec2 d = seg.d1(t);
                double f = field.value(seg.point(t)).dot(Vec2(d.y(), -d.x()));
                if (which == Constraint::Perimeter)
                    f *= seg.curvature(t);
                return f;
            },
            e.t0, e.t1);
    }
    return out;
}

ProfileFit fit_profile(const std::vector<double>& g, const std::vector<double>& w, const std::vector<double>& h,
                       Constraint which)
{
    ProfileFit out;
    double sw = 0, sg = 0, sabs = 0, sgh = 0, shh = 0;
    for (std::size_t e = 0; e < g.size(); ++e) {
        sw += w[e];
        sg += w[e] * g[e];
        sabs += w[e] * std::abs(g[e]);
        if (which == Constraint::Perimeter) {
            sgh += w[e] * g[e] * h[e];
            shh += w[e] * h[e] * h[e];
        }
    }
    if (sw <= 0.0) {
        out.applicable = false;
        return out;
    }
    if (which == Constraint::Volume) {
        out.c = sg / sw;
        double r = 0.0;
        for (std::size_t e = 0; e < g.size(); ++e)
            r += w[e] * (g[e] - out.c) * (g[e] - out.c);
        out.deviation = out.c != 0.0 ? std::sqrt(r / sw) / std::abs(out.c) : 0.0;
        return out;
    }
    if (shh <= 0.0) {
        out.applicable = false; // H vanishes: polygon
        return out;
    }
    out.c = sgh / shh;
    double r = 0.0;
    for (std::size_t e = 0; e < g.size(); ++e) {
        const double d = g[e] - out.c * h[e];
        r += w[e] * d * d;
    }
    const double mean = sabs / sw;
    out.deviation = mean > 0.0 ? std::sqrt(r / sw) / mean : 0.0;
    return out;
}

CriticalityResult criticality_residual(const EigenSystem& esys, const Cluster& F, const TraceTable& traces,
                                       Constraint which)
{
    for (int i : F.indices)
        if (i < 0 || i >= esys.size())
            throw ConfigError("cluster index outside the computed spectrum");
    CriticalityResult out;
    std::vector<double> g, w, h;
    for (Eigen::Index e = 0; e < traces.dvdn.rows(); ++e) {
        const auto& rec = traces.edges[e];
        double ge = 0.0;
        for (int i : F.indices)
            ge += traces.dvdn(e, i) * traces.dvdn(e, i);
        ge *= traces.conormal2[e];
        const bool excluded = traces.s >= 1 && std::abs(rec.midpoint.x()) < 1e-10;
        out.arclength.push_back(rec.arclength);
        out.g.push_back(ge);
        out.curvature.push_back(rec.curvature);
        out.used.push_back(excluded ? 0 : 1);
        if (!excluded) {
            g.push_back(ge);
            w.push_back(rec.weight);
            h.push_back(rec.curvature);
        }
    }
    out.fit = fit_profile(g, w, h, which);
    return out;
}

CriticalityResult criticality_residual(const EigenSystem& esys, const Cluster& F, const DiscreteForms& forms,
                                       const Mesh& mesh, const Domain& domain, Constraint which)
{
    return criticality_residual(esys, F, normal_derivative_trace(esys, forms, mesh, domain), which);
}

} // namespace grushin
