#include "grushin/identities.hpp"
#include "grushin/oracle1d.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace grushin;

namespace {

const double pi = std::numbers::pi;

Domain rect1() { return build_domain("shape=rectangle xmin=0.2 xmax=1.2 ymin=0 ymax=1 s=1"); }
Domain disk0() { return build_domain("shape=disk cx=2 cy=0 radius=1 s=0"); }
Domain square0() { return build_domain("shape=rectangle xmin=0 xmax=3.141592653589793 ymin=0 ymax=3.141592653589793 s=0"); }

// J0 by its power series, first zero by bisection
double j0_series(double x)
{
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 60; ++k) {
        term *= -(x * x / 4.0) / (double(k) * k);
        sum += term;
    }
    return sum;
}

double first_j0_zero()
{
    double lo = 2.0, hi = 3.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (j0_series(mid) > 0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct Problem {
    Domain domain;
    Mesh mesh;
    DiscreteForms forms;
    EigenSystem esys;

    Problem(Domain d, const Mesh& m, int count)
        : domain(std::move(d)), mesh(m), forms(assemble(mesh, domain.s())), esys(solve_lowest(forms, count))
    {
    }
    static Problem rect(Domain d, int n, int count) { return Problem(d, triangulate_structured(d, n, n), count); }
    static Problem curved(Domain d, double h, int count) { return Problem(d, triangulate(d, h), count); }
};

PerturbationField dilation(const Domain& d)
{
    FieldParams p;
    p.s = d.s();
    return make_field(FieldKind::DilationGenerator, p, d);
}

} // namespace

TEST(Pohozaev, MatchesDilationHadamardExactly)
{
    for (int which = 0; which < 2; ++which) {
        Problem pr = which == 0 ? Problem::rect(rect1(), 32, 3) : Problem::curved(disk0(), 0.08, 3);
        const auto traces = normal_derivative_trace(pr.esys, pr.forms, pr.mesh, pr.domain);
        for (int j = 0; j < 3; ++j) {
            const auto r = pohozaev_residual(pr.esys, j, traces, pr.domain);
            const MatrixX h = hadamard_matrix(pr.esys, traces, Cluster{{j}, pr.esys.eigenvalues[j]}, dilation(pr.domain),
                                              pr.domain);
            EXPECT_NEAR(r.rhs, -0.5 * h(0, 0), 1e-10 * r.lhs);
        }
    }
}

TEST(Pohozaev, ClassicalRellichOnDisk)
{
    const double j01 = first_j0_zero();
    EXPECT_NEAR(j01, 2.404825557695773, 1e-12);
    const double lambda = j01 * j01;
    double prev = 0.0;
    for (double h : {1.0 / 16, 1.0 / 32, 1.0 / 64}) {
        Problem pr = Problem::curved(disk0(), h, 1);
        const auto r = pohozaev_residual(pr.esys, 0, pr.forms, pr.mesh, pr.domain);
        EXPECT_NEAR(r.lhs, lambda, 0.02 * lambda);
        if (prev > 0)
            EXPECT_LT(r.residual, prev);
        prev = r.residual;
    }
    EXPECT_LT(prev, 0.02);
}

TEST(Pohozaev, GrushinRectangleConverges)
{
    const double ref = separable_eigenvalue(0.2, 1.2, 1.0, 1, 1, 1, 1e-10);
    Problem coarse = Problem::rect(rect1(), 64, 1);
    Problem fine = Problem::rect(rect1(), 128, 1);
    const auto rc = pohozaev_residual(coarse.esys, 0, coarse.forms, coarse.mesh, coarse.domain);
    const auto rf = pohozaev_residual(fine.esys, 0, fine.forms, fine.mesh, fine.domain);
    EXPECT_LT(rf.residual, 0.02);
    EXPECT_LT(rf.residual, 0.6 * rc.residual);
    EXPECT_NEAR(rf.lhs, ref, 0.01 * ref);
}

TEST(Pohozaev, Errors)
{
    Problem pr = Problem::rect(rect1(), 8, 2);
    EXPECT_THROW(pohozaev_residual(pr.esys, 2, pr.forms, pr.mesh, pr.domain), ConfigError);
    EXPECT_THROW(pohozaev_residual(pr.esys, -1, pr.forms, pr.mesh, pr.domain), ConfigError);
    const EigenSystem f = renormalize(pr.esys, pr.forms, Normalization::FormOrthonormal);
    EXPECT_THROW(pohozaev_residual(f, 0, pr.forms, pr.mesh, pr.domain), Error);
}

TEST(Scaling, IdentityAndDilations)
{
    const Domain d = rect1();
    const Mesh m = triangulate_structured(d, 16, 16);
    EXPECT_LT(scaling_check(d, m, 1.0, 5).maxDeviation, 1e-12);
    const auto r2 = scaling_check(d, m, 2.0, 5);
    EXPECT_LT(r2.maxDeviation, 1e-10);
    EXPECT_EQ(r2.deviations.size(), 5);
    EXPECT_THROW(scaling_check(d, m, 0.0, 5), ConfigError);

    // 0.5 then 2 returns to the original mesh eigenvalues
    const Mesh half = map_mesh(m, MapFamily::dilation(1), 0.5);
    const VectorX back =
        solve_lowest(assemble(map_mesh(half, MapFamily::dilation(1), 2.0), 1), 5).eigenvalues;
    const VectorX base = solve_lowest(assemble(m, 1), 5).eigenvalues;
    for (int j = 0; j < 5; ++j)
        EXPECT_NEAR(back[j], base[j], 1e-10 * base[j]);
}

TEST(Scaling, CurvedDomainAndOtherS)
{
    const Domain d = build_domain("shape=ellipse cx=1.5 cy=0.3 ax=1 ay=0.6 s=2");
    const Mesh m = triangulate(d, 0.1);
    EXPECT_LT(scaling_check(d, m, 0.7, 4).maxDeviation, 1e-10);
}

TEST(ConstraintDifferential, DilationGivesScaledVolume)
{
    for (const Domain& d : {rect1(), disk0(), build_domain("shape=ellipse cx=0 cy=0 ax=1 ay=0.5 s=1")}) {
        const Mesh m = d.rectangle() ? triangulate_structured(d, 8, 8) : triangulate(d, 0.1);
        // exact volumes: rectangle 1, disk pi, ellipse pi/2
        const double vol = d.rectangle() ? 1.0 : (d.family() == "disk" ? pi : pi / 2);
        const auto v = constraint_differential(m, d, dilation(d), Constraint::Volume);
        EXPECT_NEAR(v.value, (2 + d.s()) * vol, 1e-8) << d.family();
    }
}

TEST(ConstraintDifferential, ZeroField)
{
    const Domain d = disk0();
    const Mesh m = triangulate(d, 0.2);
    const PerturbationField z = make_field(FieldKind::Zero, {}, d);
    EXPECT_EQ(constraint_differential(m, d, z, Constraint::Volume).value, 0.0);
    EXPECT_EQ(constraint_differential(m, d, z, Constraint::Perimeter).value, 0.0);
}

TEST(ConstraintDifferential, TotalCurvatureOfDisk)
{
    const Domain d = build_domain("shape=disk cx=0 cy=0 radius=1 s=0");
    const Mesh m = triangulate(d, 0.05);
    FieldParams p;
    p.center = Vec2(0, 0);
    const auto r = constraint_differential(m, d, make_field(FieldKind::Radial, p, d), Constraint::Perimeter);
    EXPECT_NEAR(r.value, 2 * pi, 1e-6);
    EXPECT_FALSE(r.cornerFlag);
}

TEST(ConstraintDifferential, CornerFlagOnPolygon)
{
    const Domain d = rect1();
    const Mesh m = triangulate_structured(d, 4, 4);
    const auto r = constraint_differential(m, d, dilation(d), Constraint::Perimeter);
    EXPECT_TRUE(r.cornerFlag);
    EXPECT_EQ(r.value, 0.0);
    EXPECT_FALSE(constraint_differential(m, d, dilation(d), Constraint::Volume).cornerFlag);
}

TEST(ConstraintDifferential, MatchesVolumeFiniteDifference)
{
    for (const Domain& d : {rect1(), disk0()}) {
        const Mesh m = d.rectangle() ? triangulate_structured(d, 8, 8) : triangulate(d, 0.1);
        FieldParams p;
        p.shearA = 0.3;
        p.shearB = -0.2;
        std::vector<PerturbationField> fields{dilation(d), make_field(FieldKind::Shear, p, d)};
        FieldParams q;
        q.center = Vec2(1.5, 0.0);
        fields.push_back(make_field(FieldKind::Radial, q, d));
        for (const auto& f : fields) {
            const double eps = 1e-4;
            const auto mapped = [&](double e) {
                return measure(map_mesh(m, [&](const Vec2& z) -> Vec2 { return z + e * f.value(z); })).volume;
            };
            const double fd = (mapped(eps) - mapped(-eps)) / (2 * eps);
            const double dv = constraint_differential(m, d, f, Constraint::Volume).value;
            // linear fields: the polygonal volume differential equals the exact one only on polygons
            const double tol = d.rectangle() ? 1e-8 : 0.02 * std::abs(dv) + 1e-8;
            EXPECT_NEAR(fd, dv, tol) << d.family() << " " << to_string(f.kind());
        }
    }
}

TEST(Criticality, DiskGroundStateIsCritical)
{
    Problem pr = Problem::curved(disk0(), 0.04, 2);
    const auto r = criticality_residual(pr.esys, Cluster{{0}, pr.esys.eigenvalues[0]}, pr.forms, pr.mesh, pr.domain,
                                        Constraint::Volume);
    EXPECT_TRUE(r.fit.applicable);
    EXPECT_LT(r.fit.deviation, 0.02);
    EXPECT_GT(r.fit.c, 0.0);

    // a disk is also perimeter-critical: H is constant
    const auto rp = criticality_residual(pr.esys, Cluster{{0}, pr.esys.eigenvalues[0]}, pr.forms, pr.mesh, pr.domain,
                                         Constraint::Perimeter);
    EXPECT_TRUE(rp.fit.applicable);
    EXPECT_LT(rp.fit.deviation, 0.02);
    EXPECT_NEAR(rp.fit.c, r.fit.c, 1e-9 * r.fit.c); // H = 1
}

TEST(Criticality, SquareIsNotCritical)
{
    Problem pr = Problem::rect(square0(), 32, 1);
    const auto r = criticality_residual(pr.esys, Cluster{{0}, pr.esys.eigenvalues[0]}, pr.forms, pr.mesh, pr.domain,
                                        Constraint::Volume);
    EXPECT_GT(r.fit.deviation, 0.2);
    const auto rp = criticality_residual(pr.esys, Cluster{{0}, pr.esys.eigenvalues[0]}, pr.forms, pr.mesh, pr.domain,
                                         Constraint::Perimeter);
    EXPECT_FALSE(rp.fit.applicable);
}

TEST(Criticality, SyntheticProfile)
{
    const std::vector<double> g(10, 3.0), w{1, 2, 1, 3, 1, 1, 2, 2, 1, 0.5}, h(10, 0.0);
    const auto f = fit_profile(g, w, h, Constraint::Volume);
    EXPECT_DOUBLE_EQ(f.c, 3.0);
    EXPECT_EQ(f.deviation, 0.0);
    EXPECT_FALSE(fit_profile(g, w, h, Constraint::Perimeter).applicable);
    const std::vector<double> h2(10, 2.0);
    const auto fp = fit_profile(g, w, h2, Constraint::Perimeter);
    EXPECT_DOUBLE_EQ(fp.c, 1.5);
    EXPECT_NEAR(fp.deviation, 0.0, 1e-15);
}

TEST(Criticality, AxisEdgesExcluded)
{
    Problem pr = Problem::rect(build_domain("shape=rectangle xmin=0 xmax=1 ymin=0 ymax=1 s=1"), 16, 1);
    const auto r = criticality_residual(pr.esys, Cluster{{0}, pr.esys.eigenvalues[0]}, pr.forms, pr.mesh, pr.domain,
                                        Constraint::Volume);
    int excluded = 0;
    for (std::size_t e = 0; e < r.g.size(); ++e)
        if (!r.used[e])
            ++excluded;
    EXPECT_EQ(excluded, 16); // the left side
    EXPECT_THROW(criticality_residual(pr.esys, Cluster{{3}, 1.0}, pr.forms, pr.mesh, pr.domain, Constraint::Volume),
                 ConfigError);
}

TEST(Criticality, ScaleInvariantUnderNormalization)
{
    Problem pr = Problem::rect(rect1(), 16, 1);
    const Cluster F{{0}, pr.esys.eigenvalues[0]};
    const auto a = criticality_residual(pr.esys, F, pr.forms, pr.mesh, pr.domain, Constraint::Volume);
    const EigenSystem f = renormalize(pr.esys, pr.forms, Normalization::FormOrthonormal);
    const auto b = criticality_residual(f, F, pr.forms, pr.mesh, pr.domain, Constraint::Volume);
    EXPECT_NEAR(a.fit.deviation, b.fit.deviation, 1e-12);
    EXPECT_NEAR(b.fit.c * pr.esys.eigenvalues[0], a.fit.c, 1e-9 * a.fit.c);
}

TEST(Lagrange, SingleMultiplierOnDisk)
{
    Problem pr = Problem::curved(disk0(), 0.04, 2);
    const Cluster F{{0}, pr.esys.eigenvalues[0]};
    const EigenSystem f = renormalize(pr.esys, pr.forms, Normalization::FormOrthonormal);
    const auto crit = criticality_residual(f, F, pr.forms, pr.mesh, pr.domain, Constraint::Volume);

    FieldParams stretch;
    stretch.axis = 0;
    FieldParams quad;
    quad.ax = {0, 0, 1};
    quad.by = {0, 0.5};
    const std::vector<PerturbationField> fields{dilation(pr.domain),
                                                make_field(FieldKind::AxisStretch, stretch, pr.domain),
                                                make_field(FieldKind::SplitPolynomial, quad, pr.domain)};
    std::vector<double> ratios;
    for (const auto& psi : fields) {
        const double dl = dLambda(f, pr.forms, {F, 1}, psi, pr.mesh, pr.domain, FormKind::Volume);
        const double dv = constraint_differential(pr.mesh, pr.domain, psi, Constraint::Volume).value;
        ratios.push_back(-dl / dv);
    }
    // the multiplier is lambda * c1 in form normalization
    const double expected = crit.fit.c * F.commonValue;
    for (double r : ratios)
        EXPECT_NEAR(r, expected, 0.05 * expected);
    EXPECT_NEAR(ratios[1], ratios[2], 0.05 * ratios[1]);
}
