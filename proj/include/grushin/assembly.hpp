#pragma once

#include "grushin/geometry.hpp"

#include <Eigen/Sparse>

#include <array>
#include <vector>

namespace grushin {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Mat3 = Eigen::Matrix3d;
using Triangle = std::array<Vec2, 3>;

/// Discrete Grushin stiffness and mass forms on the interior degrees of
/// freedom of a piecewise-linear space. Dirichlet nodes are eliminated.
struct DiscreteForms {
    SparseMatrix stiffness;
    SparseMatrix mass;
    std::vector<int> dofOfNode; // -1 for Dirichlet nodes
    std::vector<int> nodeOfDof;
    int s = 0;

    int dofs() const { return static_cast<int>(nodeOfDof.size()); }

    /// Expands a DoF vector to all mesh nodes (zero on the boundary).
    VectorX to_nodal(const Eigen::Ref<const VectorX>& dof) const;
    /// Restricts a nodal vector to the degrees of freedom.
    VectorX to_dofs(const Eigen::Ref<const VectorX>& nodal) const;
};

/// Exact integral of x^p over a triangle:
/// 2|T| h_p(x0, x1, x2) / ((p+1)(p+2)), h_p the complete homogeneous polynomial.
double monomial_integral(const Triangle& tri, int p);

/// Gradients of the three barycentric (hat) functions; row i is grad(lambda_i).
Eigen::Matrix<double, 3, 2> hat_gradients(const Triangle& tri);

/// Element stiffness: integral of d_x u d_x v + x^{2s} d_y u d_y v.
Mat3 element_stiffness(const Triangle& tri, int s);

/// Element mass: (area/12) [[2,1,1],[1,2,1],[1,1,2]].
Mat3 element_mass(const Triangle& tri);

/// Assembles both forms; throws ConfigError for s < 0 and GeometryError when
/// no interior degree of freedom exists.
DiscreteForms assemble(const Mesh& mesh, int s);

/// u^T A u / u^T M u; throws Error for the zero vector.
double rayleigh_quotient(const Eigen::Ref<const VectorX>& u, const DiscreteForms& forms);

/// Collapsed Gauss-Legendre rule on the reference triangle (0,0),(1,0),(0,1);
/// exact for polynomials of total degree 2*points - 2. Weights sum to 1/2.
struct TriangleRule {
    std::vector<Vec2> points; // reference coordinates
    std::vector<double> weights;
};

const TriangleRule& triangle_rule(int points);

template <class F>
double integrate(const Triangle& tri, const TriangleRule& rule, F&& f)
{
    const Vec2 e1 = tri[1] - tri[0];
    const Vec2 e2 = tri[2] - tri[0];
    const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    double total = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
        const Vec2& r = rule.points[q];
        total += rule.weights[q] * f(Vec2(tri[0] + r.x() * e1 + r.y() * e2), r);
    }
    return jac * total;
}

inline Triangle triangle_of(const Mesh& mesh, int t)
{
    const auto& v = mesh.triangles[t];
    return {mesh.nodes[v[0]], mesh.nodes[v[1]], mesh.nodes[v[2]]};
}

} // namespace grushin
