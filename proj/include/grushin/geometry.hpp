#pragma once

#include "grushin/types.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace grushin {

/// Smooth parametric boundary piece t in [0,1] -> R^2.
///
/// Two closed-form families cover every supported shape: straight lines and
/// elliptical arcs (circles are arcs with equal semi-axes). Arcs run
/// counter-clockwise when theta1 > theta0.
struct Segment {
    enum class Kind { Line, EllipseArc };

    Kind kind = Kind::Line;
    Vec2 p0 = Vec2::Zero(); // line start, or arc center
    Vec2 p1 = Vec2::Zero(); // line end, or arc semi-axes (ax, ay)
    double theta0 = 0.0;
    double theta1 = 0.0;

    static Segment line(const Vec2& from, const Vec2& to);
    static Segment arc(const Vec2& center, double radius, double theta0, double theta1);
    static Segment ellipse_arc(const Vec2& center, double ax, double ay, double theta0, double theta1);

    Vec2 point(double t) const;
    Vec2 d1(double t) const;
    Vec2 d2(double t) const;

    /// Outward unit normal for a positively oriented boundary: (y', -x') / |r'|.
    Vec2 normal(double t) const;
    /// Signed curvature (x'y'' - y'x'') / |r'|^3; positive on convex pieces.
    double curvature(double t) const;
    /// Arclength of the parameter interval [ta, tb].
    double length(double ta = 0.0, double tb = 1.0) const;
};

/// Axis-aligned rectangle; infinite bounds are allowed.
struct Rect {
    double xmin, xmax, ymin, ymax;

    bool contains(const Vec2& z) const
    {
        return z.x() > xmin && z.x() < xmax && z.y() > ymin && z.y() < ymax;
    }
    bool intersects(const Rect& o) const
    {
        return xmin < o.xmax && o.xmin < xmax && ymin < o.ymax && o.ymin < ymax;
    }
};

/// Bounded planar domain with a parametric boundary loop, the exponent s of
/// the weight |x|^{2s}, and the neighborhood O of the degenerate set {x = 0}.
class Domain {
public:
    /// Validates closure, orientation, simplicity, and the neighborhood
    /// condition; throws GeometryError or ConfigError on violation.
    Domain(std::vector<Segment> segments, int s, std::optional<Rect> neighborhood,
           std::string family = "curves");

    const std::vector<Segment>& segments() const { return segments_; }
    int s() const { return s_; }
    const std::optional<Rect>& neighborhood() const { return neighborhood_; }
    const std::string& family() const { return family_; }

    /// Set for rectangles, which are meshed with a structured grid.
    const std::optional<Rect>& rectangle() const { return rectangle_; }
    void set_rectangle(const Rect& r) { rectangle_ = r; }

    /// Point membership by crossing number against a fine boundary polyline.
    bool inside(const Vec2& z) const;

    /// True when the closed domain intersects {x = 0}.
    bool meets_degenerate_set() const { return meets_axis_; }

    /// Junctions between consecutive segments with a tangent jump.
    int corner_count() const { return corners_; }

    Rect bounding_box() const { return bbox_; }
    double perimeter() const;

    /// Fine sampled boundary polyline (closed, first point not repeated).
    const std::vector<Vec2>& polyline() const { return polyline_; }

private:
    std::vector<Segment> segments_;
    int s_;
    std::optional<Rect> neighborhood_;
    std::string family_;
    std::optional<Rect> rectangle_;
    std::vector<Vec2> polyline_;
    Rect bbox_{};
    bool meets_axis_ = false;
    int corners_ = 0;
};

using KeyValues = std::map<std::string, std::string>;

/// Builds a domain from key/value pairs.
///
///   shape = rectangle | disk | ellipse | polygon | curves
///   rectangle: xmin xmax ymin ymax      disk: cx cy radius
///   ellipse:   cx cy ax ay              polygon: vertices = "x y; x y; ..."
///   curves:    segments = "line x0 y0 x1 y1; arc cx cy r th0 th1; ellipse cx cy ax ay th0 th1"
///   s (default 1), margin (half-width of O, default 10% of the x-extent),
///   o = none | "xmin xmax ymin ymax"
Domain build_domain(const KeyValues& spec);

/// Same as above from whitespace separated `key=value` tokens, e.g.
/// "shape=rectangle xmin=0 xmax=1 ymin=0 ymax=1 s=1".
Domain build_domain(std::string_view text);

struct BoundaryEdge {
    int a = -1; // traversed a -> b along the positive orientation
    int b = -1;
    int segment = -1;
    double t0 = 0.0;
    double t1 = 0.0;
};

struct Mesh {
    std::vector<Vec2> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<BoundaryEdge> boundary;
    /// Per node: 1 for degrees of freedom, 0 for Dirichlet boundary nodes.
    std::vector<char> interior;
    /// Per boundary edge: index of the unique adjacent triangle.
    std::vector<int> boundaryTriangle;
};

/// Signed area of triangle (a, b, c), positive when counter-clockwise.
double signed_area(const Vec2& a, const Vec2& b, const Vec2& c);

/// Checks orientation, conformity, and the boundary loop; throws GeometryError.
void validate_mesh(const Mesh& mesh);

enum class GridPattern {
    Diagonal,  // every cell split along (i,j)-(i+1,j+1)
    UnionJack, // diagonals alternate with (i+j) parity; keeps the rectangle's reflections
};

/// Structured nx-by-ny grid of a rectangle.
Mesh triangulate_structured(const Domain& domain, int nx, int ny, GridPattern pattern = GridPattern::Diagonal);

/// Rectangles get a structured grid with ceil(width/h) x ceil(height/h) cells;
/// curved domains get a deterministic Delaunay mesh of a clipped hexagonal
/// lattice with boundary nodes exactly on the parametric curves.
Mesh triangulate(const Domain& domain, double hTarget);

struct BoundaryRecord {
    Vec2 midpoint;   // curve point at the edge-midpoint parameter
    Vec2 normal;     // exact outward unit normal there
    double weight;   // polygonal edge length
    double arcWeight; // exact parametric arclength of the edge's interval
    double curvature;
    double arclength; // cumulative polygonal arclength at the edge midpoint
};

std::vector<BoundaryRecord> boundary_geometry(const Domain& domain, const Mesh& mesh);

struct Measures {
    double volume;
    double perimeter;
};

Measures measure(const Mesh& mesh);

/// Longest mesh edge.
double max_edge_length(const Mesh& mesh);

} // namespace grushin
