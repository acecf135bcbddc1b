#include "grushin/assembly.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <cmath>
#include <map>
#include <mutex>

namespace grushin {

VectorX DiscreteForms::to_nodal(const Eigen::Ref<const VectorX>& dof) const
{
    VectorX out = VectorX::Zero(static_cast<Eigen::Index>(dofOfNode.size()));
    for (int k = 0; k < dofs(); ++k)
        out[nodeOfDof[k]] = dof[k];
    return out;
}

VectorX DiscreteForms::to_dofs(const Eigen::Ref<const VectorX>& nodal) const
{
    VectorX out(dofs());
    for (int k = 0; k < dofs(); ++k)
        out[k] = nodal[nodeOfDof[k]];
    return out;
}

double monomial_integral(const Triangle& tri, int p)
{
    const double a = tri[0].x(), b = tri[1].x(), c = tri[2].x();
    // h_p(a, b, c) = sum_{i+j+k=p} a^i b^j c^k
    double h = 0.0;
    double ai = 1.0;
    for (int i = 0; i <= p; ++i) {
        double bj = 1.0;
        for (int j = 0; j <= p - i; ++j) {
            h += ai * bj * std::pow(c, p - i - j);
            bj *= b;
        }
        ai *= a;
    }
    const double area = std::abs(signed_area(tri[0], tri[1], tri[2]));
    return 2.0 * area * h / ((p + 1.0) * (p + 2.0));
}

Eigen::Matrix<double, 3, 2> hat_gradients(const Triangle& tri)
{
    const double twice = 2.0 * signed_area(tri[0], tri[1], tri[2]);
    Eigen::Matrix<double, 3, 2> g;
    for (int i = 0; i < 3; ++i) {
        const Vec2& p = tri[(i + 1) % 3];
        const Vec2& q = tri[(i + 2) % 3];
        g(i, 0) = (p.y() - q.y()) / twice;
        g(i, 1) = (q.x() - p.x()) / twice;
    }
    return g;
}

Mat3 element_stiffness(const Triangle& tri, int s)
{
    const auto g = hat_gradients(tri);
    const double area = std::abs(signed_area(tri[0], tri[1], tri[2]));
    const double weight = s == 0 ? area : monomial_integral(tri, 2 * s);
    Mat3 k;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            k(i, j) = area * (g(i, 0) * g(j, 0)) + weight * (g(i, 1) * g(j, 1));
    return k;
}

Mat3 element_mass(const Triangle& tri)
{
    const double area = std::abs(signed_area(tri[0], tri[1], tri[2]));
    Mat3 m;
    m << 2, 1, 1, 1, 2, 1, 1, 1, 2;
    return (area / 12.0) * m;
}

DiscreteForms assemble(const Mesh& mesh, int s)
{
    if (s < 0)
        throw ConfigError("weight exponent s must be nonnegative");
    DiscreteForms f;
    f.s = s;
    f.dofOfNode.assign(mesh.nodes.size(), -1);
    for (std::size_t i = 0; i < mesh.nodes.size(); ++i)
        if (mesh.interior[i]) {
            f.dofOfNode[i] = static_cast<int>(f.nodeOfDof.size());
            f.nodeOfDof.push_back(static_cast<int>(i));
        }
    const int n = f.dofs();
    if (n == 0)
        throw GeometryError("mesh has no interior degrees of freedom");

    using Triplet = Eigen::Triplet<double>;
    std::vector<Triplet> kt, mt;
    kt.reserve(mesh.triangles.size() * 9);
    mt.reserve(mesh.triangles.size() * 9);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const Triangle tri = triangle_of(mesh, t);
        const Mat3 ke = element_stiffness(tri, s);
        const Mat3 me = element_mass(tri);
        const auto& v = mesh.triangles[t];
        for (int i = 0; i < 3; ++i) {
            const int di = f.dofOfNode[v[i]];
            if (di < 0)
                continue;
            for (int j = 0; j < 3; ++j) {
                const int dj = f.dofOfNode[v[j]];
                if (dj < 0)
                    continue;
                kt.emplace_back(di, dj, ke(i, j));
                mt.emplace_back(di, dj, me(i, j));
            }
        }
    }
    f.stiffness.resize(n, n);
    f.mass.resize(n, n);
    f.stiffness.setFromTriplets(kt.begin(), kt.end());
    f.mass.setFromTriplets(mt.begin(), mt.end());
    return f;
}

double rayleigh_quotient(const Eigen::Ref<const VectorX>& u, const DiscreteForms& forms)
{
    const double den = u.dot(forms.mass * u);
    if (!(den > 0.0))
        throw Error("Rayleigh quotient of the zero vector");
    return u.dot(forms.stiffness * u) / den;
}

namespace {

template <int N>
TriangleRule collapsed_rule()
{
    using G = boost::math::quadrature::gauss<double, N>;
    // Full abscissae on [-1, 1] from the symmetric half stored by boost.
    std::vector<double> x, w;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    for (std::size_t i = 0; i < a.size(); ++i) {
        x.push_back(a[i]);
        w.push_back(wt[i]);
        if (a[i] != 0.0) {
            x.push_back(-a[i]);
            w.push_back(wt[i]);
        }
    }
    TriangleRule rule;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double u = 0.5 * (x[i] + 1.0); // [0,1]
            const double v = 0.5 * (x[j] + 1.0);
            // Duffy: (u, v) -> (u, (1-u) v), Jacobian (1-u).
            rule.points.emplace_back(u, (1.0 - u) * v);
            rule.weights.push_back(0.25 * w[i] * w[j] * (1.0 - u));
        }
    return rule;
}

} // namespace

const TriangleRule& triangle_rule(int points)
{
    static const TriangleRule r2 = collapsed_rule<2>();
    static const TriangleRule r3 = collapsed_rule<3>();
    static const TriangleRule r4 = collapsed_rule<4>();
    static const TriangleRule r5 = collapsed_rule<5>();
    static const TriangleRule r7 = collapsed_rule<7>();
    switch (points) {
    case 2:
        return r2;
    case 3:
        return r3;
    case 4:
        return r4;
    case 5:
        return r5;
    case 7:
        return r7;
    default:
        throw Error("triangle_rule: supported sizes are 2, 3, 4, 5, 7");
    }
}

} // namespace grushin
