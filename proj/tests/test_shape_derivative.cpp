#include "grushin/shape_derivative.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace grushin;

namespace {

const double pi = std::numbers::pi;

Domain rect1() { return build_domain("shape=rectangle xmin=0.2 xmax=1.2 ymin=0 ymax=1 s=1"); }
Domain square0() { return build_domain("shape=rectangle xmin=0 xmax=3.141592653589793 ymin=0 ymax=3.141592653589793 s=0"); }
Domain crossing_rect() { return build_domain("shape=rectangle xmin=-1 xmax=1 ymin=0 ymax=1 s=1"); }

PerturbationField bump(const Domain& d, Vec2 center, Vec2 dir = Vec2(1, 0))
{
    FieldParams p;
    p.center = center;
    p.radii = Vec2(0.3, 0.3);
    p.direction = dir;
    return make_field(FieldKind::BoundaryBump, p, d);
}

struct Problem {
    Domain domain;
    Mesh mesh;
    DiscreteForms forms;
    EigenSystem esys;

    Problem(Domain d, int n, int m, GridPattern pattern = GridPattern::Diagonal)
        : domain(std::move(d)), mesh(triangulate_structured(domain, n, n, pattern)),
          forms(assemble(mesh, domain.s())), esys(solve_lowest(forms, m))
    {
    }
    Cluster first() const { return {{0}, esys.eigenvalues[0]}; }
};

VectorX eig(const MatrixX& a) { return Eigen::SelfAdjointEigenSolver<MatrixX>(a).eigenvalues(); }

} // namespace

TEST(Trace, LinearFunctionIsExact)
{
    for (const Domain& d : {rect1(), build_domain("shape=disk cx=2 cy=0 radius=1 s=0")}) {
        const Mesh m = d.rectangle() ? triangulate_structured(d, 10, 10) : triangulate(d, 0.1);
        MatrixX u(static_cast<Eigen::Index>(m.nodes.size()), 1);
        for (std::size_t i = 0; i < m.nodes.size(); ++i)
            u(i, 0) = m.nodes[i].x();
        const auto tr = normal_derivative_trace(u, m, d);
        for (Eigen::Index e = 0; e < tr.dvdn.rows(); ++e)
            EXPECT_NEAR(tr.dvdn(e, 0), tr.edges[e].normal.x(), 1e-12);
    }
}

TEST(Trace, DivergenceTheoremForQuadratic)
{
    // Laplacian of x^2 + y^2 is 4: flux -> 4 * area at first order in h
    const Domain d = build_domain("shape=disk cx=2 cy=0 radius=1 s=0");
    double prev = 0.0;
    for (double h : {0.1, 0.05, 0.025}) {
        const Mesh m = triangulate(d, h);
        MatrixX u(static_cast<Eigen::Index>(m.nodes.size()), 1);
        for (std::size_t i = 0; i < m.nodes.size(); ++i)
            u(i, 0) = m.nodes[i].squaredNorm();
        const auto tr = normal_derivative_trace(u, m, d);
        double flux = 0.0;
        for (Eigen::Index e = 0; e < tr.dvdn.rows(); ++e)
            flux += tr.edges[e].weight * tr.dvdn(e, 0);
        const double err = std::abs(flux - 4 * pi);
        EXPECT_LT(err, 10 * h * 4 * pi) << h;
        if (prev > 0)
            EXPECT_LT(err, 0.8 * prev);
        prev = err;
    }
}

TEST(Trace, DiskGroundStateIsRadial)
{
    const Domain d = build_domain("shape=disk cx=2 cy=0 radius=1 s=0");
    const Mesh m = triangulate(d, 0.025);
    const auto f = assemble(m, 0);
    const auto es = solve_lowest(f, 1);
    const auto tr = normal_derivative_trace(es, f, m, d);
    double sw = 0, s1 = 0, s2 = 0;
    for (Eigen::Index e = 0; e < tr.dvdn.rows(); ++e) {
        const double w = tr.edges[e].weight, v = tr.dvdn(e, 0);
        sw += w;
        s1 += w * v;
        s2 += w * v * v;
    }
    const double mean = s1 / sw;
    const double cv = std::sqrt(std::max(s2 / sw - mean * mean, 0.0)) / std::abs(mean);
    EXPECT_LT(cv, 0.02);
}

TEST(Hadamard, ZeroFieldGivesZero)
{
    const Problem st(rect1(), 16, 3);
    const auto zero = make_field(FieldKind::Zero, {}, st.domain);
    const MatrixX h = hadamard_matrix(st.esys, st.forms, st.first(), zero, st.mesh, st.domain);
    EXPECT_EQ(h(0, 0), 0.0);
    EXPECT_EQ(dLambda(st.esys, st.forms, {st.first(), 1}, zero, st.mesh, st.domain, FormKind::Volume), 0.0);
    EXPECT_EQ(dLambda(st.esys, st.forms, {st.first(), 1}, zero, st.mesh, st.domain, FormKind::Boundary), 0.0);
    FdOptions o;
    o.eps = {2e-3, 1e-3};
    const auto fd = fd_derivative(st.domain, st.mesh, {st.first(), 1}, MapFamily::linear(zero), o);
    for (const auto& smp : fd.samples)
        EXPECT_EQ(smp.difference, 0.0);
    const auto bs = branch_slopes(st.domain, st.mesh, st.first(), zero);
    EXPECT_EQ(bs.formula[0], 0.0);
    EXPECT_EQ(bs.fd[0], 0.0);
}

TEST(Hadamard, DilationIsMinusTwoLambda)
{
    const Problem st(rect1(), 128, 2);
    const auto dil = make_field(FieldKind::DilationGenerator, {}, st.domain);
    const double lam = st.esys.eigenvalues[0];
    const MatrixX h = hadamard_matrix(st.esys, st.forms, st.first(), dil, st.mesh, st.domain);
    EXPECT_NEAR(h(0, 0), -2 * lam, 0.01 * 2 * lam);
    // volume form: the discrete identity holds to rounding
    EXPECT_NEAR(dLambda(st.esys, st.forms, {st.first(), 1}, dil, st.mesh, st.domain, FormKind::Volume), -2 * lam,
                1e-9 * lam);
}

TEST(Hadamard, SquareDoubleEigenvalueUnderStretch)
{
    const Problem st(square0(), 64, 4, GridPattern::UnionJack);
    const auto cl = cluster(st.esys, 1e-6);
    const Cluster& F = cl.containing(1);
    ASSERT_EQ(F.size(), 2);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, st.domain);
    const VectorX slopes = eig(hadamard_matrix(st.esys, st.forms, F, stretch, st.mesh, st.domain));
    EXPECT_NEAR(slopes[0], -8.0, 0.05 * 8);
    EXPECT_NEAR(slopes[1], -2.0, 0.05 * 2);
    const double d2 = dLambda(st.esys, st.forms, {F, 2}, stretch, st.mesh, st.domain, FormKind::Volume);
    EXPECT_NEAR(d2, -50.0, 0.05 * 50);
    EXPECT_NEAR(dLambda(st.esys, st.forms, {F, 2}, stretch, st.mesh, st.domain, FormKind::Boundary), -50.0, 2.5);
}

TEST(Hadamard, RegularityGate)
{
    const Domain d = crossing_rect();
    const Problem st(d, 24, 2);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, d);
    EXPECT_TRUE(regularity_gate(d, stretch).has_value());
    EXPECT_THROW(hadamard_matrix(st.esys, st.forms, st.first(), stretch, st.mesh, d), RegularityGateError);
    EXPECT_THROW(dLambda(st.esys, st.forms, {st.first(), 1}, stretch, st.mesh, d, FormKind::Boundary),
                 RegularityGateError);
    EXPECT_NO_THROW(dLambda(st.esys, st.forms, {st.first(), 1}, stretch, st.mesh, d, FormKind::Volume));
    const auto b = bump(d, Vec2(1.0, 0.5));
    EXPECT_FALSE(regularity_gate(d, b).has_value());
    EXPECT_NO_THROW(hadamard_matrix(st.esys, st.forms, st.first(), b, st.mesh, d));
    // s = 0 has no degenerate set
    const Domain d0 = build_domain("shape=rectangle xmin=-1 xmax=1 ymin=0 ymax=1 s=0");
    EXPECT_FALSE(regularity_gate(d0, make_field(FieldKind::AxisStretch, {}, d0)).has_value());
}

TEST(DLambda, Errors)
{
    const Problem st(rect1(), 16, 2);
    const auto dil = make_field(FieldKind::DilationGenerator, {}, st.domain);
    EXPECT_THROW(dLambda(st.esys, st.forms, {st.first(), 2}, dil, st.mesh, st.domain, FormKind::Volume),
                 ConfigError);
    EXPECT_THROW(dLambda(st.esys, st.forms, {st.first(), 1}, dil, st.mesh, st.domain, FormKind::Volume,
                         Normalization::FormOrthonormal),
                 Error);
    EXPECT_THROW(dLambda(st.esys, st.forms, {Cluster{{5}, 1.0}, 1}, dil, st.mesh, st.domain, FormKind::Volume),
                 ConfigError);
}

TEST(DLambda, DilationAsSplitPolynomial)
{
    // (x, (1+s) y) written as a split polynomial, and half of it
    const Problem st(rect1(), 48, 2);
    const auto F = st.first();
    FieldParams dp;
    dp.ax = {0.0, 1.0};
    dp.by = {0.0, 2.0};
    const auto asSplit = make_field(FieldKind::SplitPolynomial, dp, st.domain);
    FieldParams half;
    half.ax = {0.0, 0.5};
    half.by = {0.0, 1.0};
    const auto h = make_field(FieldKind::SplitPolynomial, half, st.domain);
    const auto dil = make_field(FieldKind::DilationGenerator, {}, st.domain);
    const double vd = dLambda(st.esys, st.forms, {F, 1}, dil, st.mesh, st.domain, FormKind::Volume);
    EXPECT_NEAR(dLambda(st.esys, st.forms, {F, 1}, asSplit, st.mesh, st.domain, FormKind::Volume), vd,
                1e-8 * std::abs(vd));
    EXPECT_NEAR(dLambda(st.esys, st.forms, {F, 1}, h, st.mesh, st.domain, FormKind::Volume), 0.5 * vd,
                1e-8 * std::abs(vd));
}

TEST(DLambda, LinearityOfSuperposedFields)
{
    // psi = 2 psi_1 - 3 psi_2 for split polynomials with distinct coefficients
    const Problem st(rect1(), 40, 2);
    auto split = [&](std::vector<double> ax, std::vector<double> by) {
        FieldParams p;
        p.ax = std::move(ax);
        p.by = std::move(by);
        return make_field(FieldKind::SplitPolynomial, p, st.domain);
    };
    const auto p1 = split({0.0, 0.2, 0.4, -0.1}, {0.3, 0.1});
    const auto p2 = split({0.0, -0.5, 0.1}, {0.0, 0.2, 0.6});
    const auto combo = split({0.0, 2 * 0.2 + 1.5, 2 * 0.4 - 0.3, -0.2}, {0.6, 2 * 0.1 - 0.6, -1.8});
    const auto F = st.first();
    for (auto mode : {FormKind::Volume, FormKind::Boundary}) {
        const double d1 = dLambda(st.esys, st.forms, {F, 1}, p1, st.mesh, st.domain, mode);
        const double d2 = dLambda(st.esys, st.forms, {F, 1}, p2, st.mesh, st.domain, mode);
        const double dc = dLambda(st.esys, st.forms, {F, 1}, combo, st.mesh, st.domain, mode);
        EXPECT_NEAR(dc, 2 * d1 - 3 * d2, 1e-8 * (std::abs(2 * d1) + std::abs(3 * d2)));
    }
}

TEST(DLambda, NormalizationConsistency)
{
    const Problem st(square0(), 32, 4, GridPattern::UnionJack);
    const auto form = renormalize(st.esys, st.forms, Normalization::FormOrthonormal);
    const auto F = cluster(st.esys, 1e-6).containing(1);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, st.domain);
    const VectorX m32 = eig(hadamard_matrix(st.esys, st.forms, F, stretch, st.mesh, st.domain));
    const VectorX m31 = eig(hadamard_matrix(form, st.forms, F, stretch, st.mesh, st.domain));
    for (int i = 0; i < 2; ++i)
        EXPECT_NEAR(m31[i], m32[i], 1e-8 * std::abs(m32[i]));
    for (int tau : {1, 2})
        for (auto mode : {FormKind::Volume, FormKind::Boundary}) {
            const double a = dLambda(st.esys, st.forms, {F, tau}, stretch, st.mesh, st.domain, mode);
            const double b = dLambda(form, st.forms, {F, tau}, stretch, st.mesh, st.domain, mode);
            EXPECT_NEAR(a, b, 1e-8 * std::abs(a));
        }
}

TEST(DLambda, VolumeAndBoundaryFormsAgree)
{
    const Problem st(rect1(), 128, 2);
    const auto b = bump(st.domain, Vec2(1.2, 0.5));
    const double lam = st.esys.eigenvalues[0];
    const double v = dLambda(st.esys, st.forms, {st.first(), 1}, b, st.mesh, st.domain, FormKind::Volume);
    const double w = dLambda(st.esys, st.forms, {st.first(), 1}, b, st.mesh, st.domain, FormKind::Boundary);
    EXPECT_LE(std::abs(v - w), 0.02 * std::max(std::abs(v), lam));
}

TEST(DLambda, TraceIdentityOnExactCluster)
{
    const Problem st(square0(), 32, 4, GridPattern::UnionJack);
    const auto F = cluster(st.esys, 1e-6).containing(1);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, st.domain);
    const MatrixX h = hadamard_matrix(st.esys, st.forms, F, stretch, st.mesh, st.domain);
    double sum = 0.0;
    for (int i : F.indices)
        sum += dLambda(st.esys, st.forms, {Cluster{{i}, st.esys.eigenvalues[i]}, 1}, stretch, st.mesh, st.domain,
                       FormKind::Boundary);
    EXPECT_NEAR(h.trace(), sum, 1e-10 * std::abs(sum));
}

TEST(FiniteDifference, DilationClosedForm)
{
    const Problem st(rect1(), 32, 2);
    FdOptions o;
    o.eps = {1e-2, 1e-3};
    const auto fd = fd_derivative(st.domain, st.mesh, {st.first(), 1}, MapFamily::dilation(1), o);
    const double lam = st.esys.eigenvalues[0];
    for (const auto& smp : fd.samples) {
        const double e = smp.eps;
        const double exact = lam * (std::pow(1 + e, -2) - std::pow(1 - e, -2)) / (2 * e);
        EXPECT_NEAR(smp.difference, exact, 1e-8 * lam);
    }
    EXPECT_NEAR(fd.richardson, -2 * lam, 1e-6 * lam);
    EXPECT_FALSE(fd.crossing);
}

TEST(FiniteDifference, SecondOrderInEps)
{
    const Problem st(rect1(), 24, 2);
    const auto b = bump(st.domain, Vec2(1.2, 0.5));
    FdOptions o;
    o.eps = {1.6e-2, 8e-3, 4e-3, 2e-3};
    const auto fd = fd_derivative(st.domain, st.mesh, {st.first(), 1}, MapFamily::linear(b), o);
    EXPECT_GE(fd.convergenceSlope, 1.7);
    EXPECT_LE(fd.convergenceSlope, 2.3);
    EXPECT_LT(fd.richardsonError, 1e-4 * std::abs(fd.richardson));
    EXPECT_THROW(fd_derivative(st.domain, st.mesh, {st.first(), 1}, MapFamily::linear(b), FdOptions{{1e-3}}),
                 ConfigError);
}

TEST(FiniteDifference, SquareClusterSum)
{
    const Problem st(square0(), 64, 4, GridPattern::UnionJack);
    const auto F = cluster(st.esys, 1e-6).containing(1);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, st.domain);
    FdOptions o;
    o.eps = {2e-3, 1e-3};
    const auto fd1 = fd_derivative(st.domain, st.mesh, {F, 1}, MapFamily::linear(stretch), o);
    EXPECT_NEAR(fd1.richardson, -10.0, 0.005 * 10);
    const auto fd2 = fd_derivative(st.domain, st.mesh, {F, 2}, MapFamily::linear(stretch), o);
    EXPECT_NEAR(fd2.richardson, -50.0, 0.05 * 50);
    // trace of the branch matrix against the smooth sum of branches
    const MatrixX h = hadamard_matrix(st.esys, st.forms, F, stretch, st.mesh, st.domain);
    EXPECT_NEAR(h.trace(), fd1.richardson, 0.05 * 10);
}

TEST(FiniteDifference, InadmissibleFamilyRejected)
{
    const Domain d = crossing_rect();
    const Mesh m = triangulate_structured(d, 12, 12);
    FieldParams p;
    p.offset = Vec2(0.3, 0.0);
    const auto moved = make_field(FieldKind::Translation, p, d);
    const Cluster F{{0}, 1.0};
    EXPECT_THROW(fd_derivative(d, m, {F, 1}, MapFamily::linear(moved)), PerturbationError);
}

TEST(BranchSlopes, SimpleEigenvalue)
{
    const Domain d = rect1();
    const Mesh m = triangulate_structured(d, 64, 64);
    const auto bs = branch_slopes(d, m, Cluster{{0}, 0.0}, bump(d, Vec2(1.2, 0.5)));
    ASSERT_EQ(bs.formula.size(), 1);
    ASSERT_EQ(bs.fd.size(), 1);
    EXPECT_FALSE(bs.oneSided);
    EXPECT_NEAR(bs.formula[0], bs.fd[0], 0.02 * std::abs(bs.fd[0]));
}

TEST(BranchSlopes, SquareBifurcation)
{
    const Domain d = square0();
    const Mesh m = triangulate_structured(d, 64, 64, GridPattern::UnionJack);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, d);
    const auto bs = branch_slopes(d, m, Cluster{{1, 2}, 0.0}, stretch);
    EXPECT_TRUE(bs.oneSided);
    EXPECT_FALSE(bs.crossing);
    const double expected[2] = {-8.0, -2.0};
    for (int i = 0; i < 2; ++i) {
        EXPECT_NEAR(bs.formula[i], expected[i], 0.05 * std::abs(expected[i]));
        EXPECT_NEAR(bs.fd[i], expected[i], 0.05 * std::abs(expected[i]));
        EXPECT_NEAR(bs.fd[i], bs.formula[i], 0.05 * std::abs(bs.formula[i]));
    }
}

TEST(Report, GatedDomainFallsBackToVolume)
{
    const Problem st(crossing_rect(), 24, 2);
    const auto stretch = make_field(FieldKind::AxisStretch, {}, st.domain);
    FdOptions o;
    o.eps = {2e-3, 1e-3};
    const auto rep = derivative_report(st.domain, st.mesh, st.esys, st.forms, {st.first(), 1}, stretch, o);
    EXPECT_FALSE(rep.boundaryForm.has_value());
    EXPECT_FALSE(rep.gateMessage.empty());
    EXPECT_NEAR(rep.branchSlopes[0], rep.volumeForm, 1e-10 * std::abs(rep.volumeForm));
    // volume form on the mapped-mesh family tracks the FD derivative of the discrete eigenvalue
    EXPECT_NEAR(rep.volumeForm, rep.fd.richardson, 0.02 * std::abs(rep.fd.richardson));
}
