#include "grushin/eigensolver.hpp"
#include "grushin/oracle1d.hpp"
#include "grushin/perturbation.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace grushin;

namespace {

const double pi = std::numbers::pi;

Domain square0() { return build_domain("shape=rectangle xmin=0 xmax=3.141592653589793 ymin=0 ymax=3.141592653589793 s=0"); }
Domain rect1(int s = 1)
{
    return build_domain("shape=rectangle xmin=0.2 xmax=1.2 ymin=0 ymax=1 s=" + std::to_string(s));
}

DiscreteForms forms_on(const Domain& d, int n, GridPattern p = GridPattern::Diagonal)
{
    return assemble(triangulate_structured(d, n, n, p), d.s());
}

} // namespace

TEST(Solve, DiagonalPencil)
{
    SparseMatrix a(3, 3), m(3, 3);
    a.insert(0, 0) = 2;
    a.insert(1, 1) = 3;
    a.insert(2, 2) = 9;
    for (int i = 0; i < 3; ++i)
        m.insert(i, i) = 1;
    const auto es = solve_lowest(a, m, 2);
    ASSERT_EQ(es.size(), 2);
    EXPECT_NEAR(es.eigenvalues[0], 2.0, 1e-14);
    EXPECT_NEAR(es.eigenvalues[1], 3.0, 1e-14);
    EXPECT_NEAR(std::abs(es.eigenvectors(0, 0)), 1.0, 1e-14);
    EXPECT_GT(es.eigenvectors(0, 0), 0.0);
}

TEST(Solve, Preconditions)
{
    const auto f = forms_on(square0(), 8);
    EXPECT_THROW(solve_lowest(f, 0), SolverError);
    EXPECT_THROW(solve_lowest(f, f.dofs()), SolverError);
    EXPECT_THROW(solve_lowest(f, 3, 1e-3), SolverError);
}

TEST(Solve, ClassicalSquare)
{
    const auto f = forms_on(square0(), 64);
    const auto es = solve_lowest(f, 5);
    const double expected[5] = {2, 5, 5, 8, 10};
    for (int i = 0; i < 5; ++i) {
        EXPECT_NEAR(es.eigenvalues[i], expected[i], 0.005 * expected[i]);
        EXPECT_LE(es.residuals[i], 1e-10);
    }
    // conforming: discrete values lie above the continuum ones
    for (int i = 0; i < 5; ++i)
        EXPECT_GT(es.eigenvalues[i], expected[i]);
    const MatrixX g = gram(es, f.stiffness, f.mass);
    EXPECT_LT((g - MatrixX::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Solve, GrushinRectangleAgainstOracle)
{
    const auto f = forms_on(rect1(), 128);
    const auto es = solve_lowest(f, 5);
    const auto sp = rectangle_spectrum(0.2, 1.2, 1.0, 1, 5);
    for (int i = 0; i < 5; ++i)
        EXPECT_NEAR(es.eigenvalues[i], sp.entries[i].lambda, 0.01 * sp.entries[i].lambda);
}

TEST(Solve, Deterministic)
{
    const auto f = forms_on(rect1(2), 24);
    const auto a = solve_lowest(f, 4);
    const auto b = solve_lowest(f, 4);
    EXPECT_EQ(a.eigenvalues, b.eigenvalues);
    EXPECT_EQ(a.eigenvectors, b.eigenvectors);
}

TEST(Solve, SparsePathMatchesDense)
{
    // 31^2 DoFs goes through subspace iteration; compare with a dense solve
    const auto f = forms_on(rect1(), 32);
    const auto es = solve_lowest(f, 4);
    EXPECT_GT(es.iterations, 0);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatrixX> dense{MatrixX(f.stiffness), MatrixX(f.mass)};
    for (int i = 0; i < 4; ++i)
        EXPECT_NEAR(es.eigenvalues[i], dense.eigenvalues()[i], 1e-10 * dense.eigenvalues()[i]);
    EXPECT_NEAR(es.guardValue, dense.eigenvalues()[4], 1e-6 * dense.eigenvalues()[4]);
}

TEST(Solve, MinMaxLowerBound)
{
    const auto f = forms_on(rect1(), 20);
    const auto es = solve_lowest(f, 1);
    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    for (int k = 0; k < 40; ++k) {
        VectorX u(f.dofs());
        for (auto& x : u)
            x = g(rng);
        u += 30.0 * es.eigenvectors.col(0) * (k % 2);
        EXPECT_GE(rayleigh_quotient(u, f), es.eigenvalues[0] * (1 - 1e-10));
    }
    EXPECT_NEAR(rayleigh_quotient(es.eigenvectors.col(0), f), es.eigenvalues[0], 1e-10 * es.eigenvalues[0]);
}

TEST(Solve, ScalingLaw)
{
    const Domain d = rect1();
    const Mesh m = triangulate_structured(d, 40, 40);
    const auto base = solve_lowest(assemble(m, 1), 5);
    for (double t : {0.5, 2.0}) {
        const auto es = solve_lowest(assemble(map_mesh(m, MapFamily::dilation(1), t), 1), 5);
        for (int i = 0; i < 5; ++i)
            EXPECT_NEAR(t * t * es.eigenvalues[i], base.eigenvalues[i], 1e-10 * base.eigenvalues[i]);
    }
}

TEST(Solve, MonotoneUnderRefinement)
{
    VectorX prev;
    for (int n : {8, 16, 32, 64}) {
        const auto es = solve_lowest(forms_on(rect1(), n), 4);
        if (prev.size())
            for (int i = 0; i < 4; ++i)
                EXPECT_LE(es.eigenvalues[i], prev[i] * (1 + 1e-10));
        prev = es.eigenvalues;
    }
}

TEST(Cluster, Examples)
{
    VectorX v(4);
    v << 2.0, 5.0, 5.0 + 1e-9, 8.0;
    const auto c = cluster(v, 1e-6);
    ASSERT_EQ(c.clusters.size(), 3u);
    EXPECT_EQ(c.clusters[0].indices, std::vector<int>{0});
    EXPECT_EQ(c.clusters[1].indices, (std::vector<int>{1, 2}));
    EXPECT_EQ(c.clusters[2].indices, std::vector<int>{3});
    EXPECT_NEAR(c.clusters[1].commonValue, 5.0 + 5e-10, 1e-15);
    EXPECT_FALSE(c.ambiguous);
    EXPECT_EQ(c.containing(2).first(), 1);

    VectorX w(3);
    w << 1.0, 2.0, 3.0;
    EXPECT_EQ(cluster(w, 1e-6).clusters.size(), 3u);

    VectorX amb(2);
    amb << 1.0, 1.0 + 1.5e-6;
    const auto ca = cluster(amb, 1e-6);
    EXPECT_EQ(ca.clusters.size(), 2u);
    EXPECT_TRUE(ca.ambiguous);
    EXPECT_THROW(cluster(w, 0.0), ConfigError);
}

TEST(Cluster, TruncationFlag)
{
    const auto f = forms_on(square0(), 20, GridPattern::UnionJack);
    const auto es = solve_lowest(f, 2); // cuts the double eigenvalue 5
    EXPECT_TRUE(cluster(es, 1e-6).truncated);
    EXPECT_FALSE(cluster(solve_lowest(f, 3), 1e-6).truncated);
}

TEST(Cluster, OneDiagonalGridSplitsTheDoubleValue)
{
    // only the diagonal swap survives; the pair separates at O(h^2)
    const auto es = solve_lowest(forms_on(square0(), 64), 3);
    const double split = (es.eigenvalues[2] - es.eigenvalues[1]) / es.eigenvalues[1];
    EXPECT_GT(split, 1e-4);
    EXPECT_LT(split, 1e-3);
    EXPECT_EQ(cluster(es, 1e-3).clusters.size(), 2u);
}

TEST(Cluster, TunedCrossingPair)
{
    const auto cr = tune_crossing(0.2, 1.2, 1, {1, 2}, {2, 1}, {0.5, 2.0});
    const Domain d = build_domain("shape=rectangle xmin=0.2 xmax=1.2 ymin=0 ymax=" + std::to_string(cr.L) + " s=1");
    const auto es = solve_lowest(assemble(triangulate_structured(d, 128, 128), 1), 5);
    const auto c = cluster(es, 1e-3);
    bool found = false;
    for (const auto& cl : c.clusters)
        if (cl.size() == 2 && std::abs(cl.commonValue - cr.value) < 0.01 * cr.value)
            found = true;
    EXPECT_TRUE(found);
}

TEST(Renormalize, SimpleAndRoundTrip)
{
    const auto f = forms_on(square0(), 24);
    const auto es = solve_lowest(f, 5);
    const auto form = renormalize(es, f, Normalization::FormOrthonormal);
    EXPECT_EQ(form.normalization, Normalization::FormOrthonormal);
    EXPECT_EQ(form.eigenvalues, es.eigenvalues);
    EXPECT_LT((form.eigenvectors.col(0) - es.eigenvectors.col(0) / std::sqrt(es.eigenvalues[0])).norm(),
              1e-10 * form.eigenvectors.col(0).norm());
    const auto back = renormalize(renormalize(form, f, Normalization::MassOrthonormal), f,
                                  Normalization::FormOrthonormal);
    EXPECT_LT((back.eigenvectors - form.eigenvectors).cwiseAbs().maxCoeff(),
              1e-10 * form.eigenvectors.cwiseAbs().maxCoeff());
}

TEST(Renormalize, DoubleClusterGram)
{
    const auto f = forms_on(square0(), 32, GridPattern::UnionJack);
    const auto es = solve_lowest(f, 3);
    const auto c = cluster(es, 1e-8);
    ASSERT_EQ(c.clusters.size(), 2u);
    ASSERT_EQ(c.clusters[1].size(), 2);
    for (auto target : {Normalization::MassOrthonormal, Normalization::FormOrthonormal}) {
        const auto r = renormalize(es, f, target);
        const MatrixX g = gram(r, f.stiffness, f.mass);
        EXPECT_LT((g - MatrixX::Identity(3, 3)).cwiseAbs().maxCoeff(), 1e-10);
    }
}
