#include "grushin/geometry.hpp"

#include "delaunay.hpp"
#include "parse.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <unordered_map>

namespace grushin {

// ---------------------------------------------------------------------------
// Segment

Segment Segment::line(const Vec2& from, const Vec2& to)
{
    return Segment{Kind::Line, from, to, 0.0, 0.0};
}

Segment Segment::arc(const Vec2& center, double radius, double theta0, double theta1)
{
    return ellipse_arc(center, radius, radius, theta0, theta1);
}

Segment Segment::ellipse_arc(const Vec2& center, double ax, double ay, double theta0, double theta1)
{
    return Segment{Kind::EllipseArc, center, Vec2(ax, ay), theta0, theta1};
}

Vec2 Segment::point(double t) const
{
    if (kind == Kind::Line) {
        if (t == 1.0)
            return p1;
        return p0 + t * (p1 - p0);
    }
    const double th = theta0 + t * (theta1 - theta0);
    return p0 + Vec2(p1.x() * std::cos(th), p1.y() * std::sin(th));
}

Vec2 Segment::d1(double t) const
{
    if (kind == Kind::Line)
        return p1 - p0;
    const double dth = theta1 - theta0;
    const double th = theta0 + t * dth;
    return dth * Vec2(-p1.x() * std::sin(th), p1.y() * std::cos(th));
}

Vec2 Segment::d2(double t) const
{
    if (kind == Kind::Line)
        return Vec2::Zero();
    const double dth = theta1 - theta0;
    const double th = theta0 + t * dth;
    return -dth * dth * Vec2(p1.x() * std::cos(th), p1.y() * std::sin(th));
}

Vec2 Segment::normal(double t) const
{
    const Vec2 d = d1(t);
    return Vec2(d.y(), -d.x()) / d.norm();
}

double Segment::curvature(double t) const
{
    if (kind == Kind::Line)
        return 0.0;
    const Vec2 a = d1(t);
    const Vec2 b = d2(t);
    return (a.x() * b.y() - a.y() * b.x()) / std::pow(a.norm(), 3);
}

double Segment::length(double ta, double tb) const
{
    if (kind == Kind::Line)
        return (p1 - p0).norm() * std::abs(tb - ta);
    if (p1.x() == p1.y())
        return p1.x() * std::abs(theta1 - theta0) * std::abs(tb - ta);
    // Ellipse: composite Gauss-Legendre over 16 panels.
    constexpr int panels = 16;
    double total = 0.0;
    const double w = (tb - ta) / panels;
    for (int k = 0; k < panels; ++k) {
        const double lo = ta + k * w;
        total += boost::math::quadrature::gauss<double, 15>::integrate(
            [this](double t) { return d1(t).norm(); }, lo, lo + w);
    }
    return std::abs(total);
}

// ---------------------------------------------------------------------------
// Domain

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d)
{
    const double d1 = cross(b - a, c - a);
    const double d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c);
    const double d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0
        && d4 != 0;
}

std::vector<Vec2> sample_loop(const std::vector<Segment>& segments)
{
    const int per = std::max(64, 512 / static_cast<int>(segments.size()));
    std::vector<Vec2> out;
    out.reserve(per * segments.size());
    for (const auto& seg : segments)
        for (int k = 0; k < per; ++k)
            out.push_back(seg.point(static_cast<double>(k) / per));
    return out;
}

bool crossing_inside(const std::vector<Vec2>& poly, const Vec2& z)
{
    bool in = false;
    const std::size_t n = poly.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y() > z.y()) != (b.y() > z.y())) {
            const double x = a.x() + (z.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
            if (z.x() < x)
                in = !in;
        }
    }
    return in;
}

} // namespace

Domain::Domain(std::vector<Segment> segments, int s, std::optional<Rect> neighborhood,
               std::string family)
    : segments_(std::move(segments))
    , s_(s)
    , neighborhood_(neighborhood)
    , family_(std::move(family))
{
    if (segments_.empty())
        throw GeometryError("domain has no boundary segments");
    if (s_ < 0)
        throw ConfigError("weight exponent s must be nonnegative");

    polyline_ = sample_loop(segments_);
    bbox_ = Rect{polyline_[0].x(), polyline_[0].x(), polyline_[0].y(), polyline_[0].y()};
    for (const auto& p : polyline_) {
        bbox_.xmin = std::min(bbox_.xmin, p.x());
        bbox_.xmax = std::max(bbox_.xmax, p.x());
        bbox_.ymin = std::min(bbox_.ymin, p.y());
        bbox_.ymax = std::max(bbox_.ymax, p.y());
    }
    const double scale = std::max(bbox_.xmax - bbox_.xmin, bbox_.ymax - bbox_.ymin);

    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const auto& cur = segments_[i];
        const auto& next = segments_[(i + 1) % segments_.size()];
        if ((cur.point(1.0) - next.point(0.0)).norm() > 1e-9 * scale)
            throw GeometryError("boundary segments do not form a closed loop at junction "
                                + std::to_string(i));
        const Vec2 ta = cur.d1(1.0).normalized();
        const Vec2 tb = next.d1(0.0).normalized();
        if (std::abs(cross(ta, tb)) > 1e-8 || ta.dot(tb) < 0)
            ++corners_;
    }

    double area = 0.0;
    const std::size_t n = polyline_.size();
    for (std::size_t i = 0; i < n; ++i)
        area += cross(polyline_[i], polyline_[(i + 1) % n]);
    if (area <= 0.0)
        throw GeometryError("boundary loop is not positively oriented");

    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = polyline_[i];
        const Vec2& b = polyline_[(i + 1) % n];
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1)
                continue;
            if (segments_cross(a, b, polyline_[j], polyline_[(j + 1) % n]))
                throw GeometryError("boundary is self-intersecting");
        }
    }

    // Closed domain meets {x = 0}: record the y-range of the intersection.
    double ylo = std::numeric_limits<double>::infinity();
    double yhi = -ylo;
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = polyline_[i];
        const Vec2& b = polyline_[(i + 1) % n];
        if (a.x() == 0.0) {
            ylo = std::min(ylo, a.y());
            yhi = std::max(yhi, a.y());
        }
        if ((a.x() < 0.0) != (b.x() < 0.0) && a.x() != b.x()) {
            const double y = a.y() + (0.0 - a.x()) * (b.y() - a.y()) / (b.x() - a.x());
            ylo = std::min(ylo, y);
            yhi = std::max(yhi, y);
        }
    }
    meets_axis_ = bbox_.xmin <= 0.0 && bbox_.xmax >= 0.0 && ylo <= yhi;
    if (meets_axis_) {
        if (!neighborhood_)
            throw GeometryError("closed domain meets {x = 0} but no neighborhood O was given");
        const Rect& o = *neighborhood_;
        if (!(o.xmin < 0.0 && o.xmax > 0.0 && o.ymin < ylo && o.ymax > yhi))
            throw GeometryError("neighborhood O does not contain the intersection with {x = 0}");
    }
}

bool Domain::inside(const Vec2& z) const { return crossing_inside(polyline_, z); }

double Domain::perimeter() const
{
    double total = 0.0;
    for (const auto& seg : segments_)
        total += seg.length();
    return total;
}

// ---------------------------------------------------------------------------
// build_domain

Domain build_domain(const KeyValues& spec)
{
    using detail::get_number;
    using detail::parse_numbers;

    const auto shapeIt = spec.find("shape");
    if (shapeIt == spec.end())
        throw ConfigError("domain spec needs a 'shape' key");
    const std::string shape = shapeIt->second;

    int s = 1;
    if (auto it = spec.find("s"); it != spec.end()) {
        const double v = detail::to_number(it->second, "s");
        if (v != std::floor(v) || v < 0)
            throw ConfigError("s must be a nonnegative integer");
        s = static_cast<int>(v);
    }

    std::vector<Segment> segs;
    std::optional<Rect> rect;
    if (shape == "rectangle") {
        const double x0 = get_number(spec, "xmin"), x1 = get_number(spec, "xmax");
        const double y0 = get_number(spec, "ymin"), y1 = get_number(spec, "ymax");
        if (!(x0 < x1 && y0 < y1))
            throw ConfigError("rectangle needs xmin < xmax and ymin < ymax");
        segs = {Segment::line({x0, y0}, {x1, y0}), Segment::line({x1, y0}, {x1, y1}),
                Segment::line({x1, y1}, {x0, y1}), Segment::line({x0, y1}, {x0, y0})};
        rect = Rect{x0, x1, y0, y1};
    } else if (shape == "disk") {
        const double r = get_number(spec, "radius");
        if (!(r > 0))
            throw ConfigError("disk radius must be positive");
        segs = {Segment::arc({get_number(spec, "cx"), get_number(spec, "cy")}, r, 0.0,
                             2 * std::numbers::pi)};
    } else if (shape == "ellipse") {
        const double ax = get_number(spec, "ax"), ay = get_number(spec, "ay");
        if (!(ax > 0 && ay > 0))
            throw ConfigError("ellipse semi-axes must be positive");
        segs = {Segment::ellipse_arc({get_number(spec, "cx"), get_number(spec, "cy")}, ax, ay, 0.0,
                                     2 * std::numbers::pi)};
    } else if (shape == "polygon") {
        const auto it = spec.find("vertices");
        if (it == spec.end())
            throw ConfigError("polygon needs 'vertices'");
        const auto v = parse_numbers(it->second);
        if (v.size() < 6 || v.size() % 2 != 0)
            throw ConfigError("polygon needs at least three (x, y) vertices");
        const std::size_t k = v.size() / 2;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = (i + 1) % k;
            segs.push_back(Segment::line({v[2 * i], v[2 * i + 1]}, {v[2 * j], v[2 * j + 1]}));
        }
    } else if (shape == "curves") {
        const auto it = spec.find("segments");
        if (it == spec.end())
            throw ConfigError("curves needs 'segments'");
        std::stringstream ss(it->second);
        std::string piece;
        while (std::getline(ss, piece, ';')) {
            std::stringstream ps(piece);
            std::string kind;
            if (!(ps >> kind))
                continue;
            std::string rest;
            std::getline(ps, rest);
            const auto v = parse_numbers(rest);
            if (kind == "line" && v.size() == 4)
                segs.push_back(Segment::line({v[0], v[1]}, {v[2], v[3]}));
            else if (kind == "arc" && v.size() == 5)
                segs.push_back(Segment::arc({v[0], v[1]}, v[2], v[3], v[4]));
            else if (kind == "ellipse" && v.size() == 6)
                segs.push_back(Segment::ellipse_arc({v[0], v[1]}, v[2], v[3], v[4], v[5]));
            else
                throw ConfigError("malformed segment '" + piece + "'");
        }
    } else {
        throw ConfigError("unsupported shape '" + shape + "'");
    }
    if (segs.empty())
        throw ConfigError("domain has no segments");

    // Neighborhood O of the degenerate set.
    const auto samples = sample_loop(segs);
    double xlo = samples[0].x(), xhi = samples[0].x();
    for (const auto& p : samples) {
        xlo = std::min(xlo, p.x());
        xhi = std::max(xhi, p.x());
    }
    std::optional<Rect> o;
    const auto oIt = spec.find("o");
    if (oIt != spec.end() && oIt->second != "none" && oIt->second != "auto") {
        const auto v = parse_numbers(oIt->second);
        if (v.size() != 4)
            throw ConfigError("o must be 'none', 'auto', or 'xmin xmax ymin ymax'");
        o = Rect{v[0], v[1], v[2], v[3]};
    } else if (oIt == spec.end() || oIt->second == "auto") {
        if (xlo <= 0.0 && xhi >= 0.0) {
            const double margin = spec.count("margin") ? get_number(spec, "margin") : 0.1 * (xhi - xlo);
            if (!(margin > 0))
                throw ConfigError("margin must be positive");
            const double inf = std::numeric_limits<double>::infinity();
            o = Rect{-margin, margin, -inf, inf};
        }
    }

    try {
        Domain d(std::move(segs), s, o, shape);
        if (rect)
            d.set_rectangle(*rect);
        return d;
    } catch (const GeometryError& e) {
        throw ConfigError(std::string("invalid domain: ") + e.what());
    }
}

Domain build_domain(std::string_view text)
{
    KeyValues kv;
    std::stringstream ss{std::string(text)};
    std::string tok;
    while (ss >> tok) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("expected key=value, got '" + tok + "'");
        std::string value = tok.substr(eq + 1);
        std::replace(value.begin(), value.end(), ',', ' ');
        kv[tok.substr(0, eq)] = value;
    }
    return build_domain(kv);
}

// ---------------------------------------------------------------------------
// Mesh utilities

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c)
{
    return 0.5 * cross(b - a, c - a);
}

namespace {

std::uint64_t edge_key(int a, int b)
{
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32)
        | static_cast<std::uint32_t>(b);
}

void attach_boundary_triangles(Mesh& mesh)
{
    std::unordered_map<std::uint64_t, int> directed;
    directed.reserve(mesh.triangles.size() * 3);
    for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t) {
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            directed[edge_key(tri[i], tri[(i + 1) % 3])] = t;
    }
    mesh.boundaryTriangle.assign(mesh.boundary.size(), -1);
    for (std::size_t e = 0; e < mesh.boundary.size(); ++e) {
        const auto it = directed.find(edge_key(mesh.boundary[e].a, mesh.boundary[e].b));
        if (it != directed.end())
            mesh.boundaryTriangle[e] = it->second;
    }
}

} // namespace

void validate_mesh(const Mesh& mesh)
{
    const int n = static_cast<int>(mesh.nodes.size());
    if (static_cast<int>(mesh.interior.size()) != n)
        throw GeometryError("interior mask size mismatch");
    std::unordered_map<std::uint64_t, int> undirected;
    undirected.reserve(mesh.triangles.size() * 3);
    for (const auto& tri : mesh.triangles) {
        for (int v : tri)
            if (v < 0 || v >= n)
                throw GeometryError("triangle references a missing node");
        if (signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]) <= 0.0)
            throw GeometryError("triangle with nonpositive area");
        for (int i = 0; i < 3; ++i) {
            const int a = tri[i], b = tri[(i + 1) % 3];
            ++undirected[edge_key(std::min(a, b), std::max(a, b))];
        }
    }
    std::unordered_map<std::uint64_t, int> boundary;
    for (const auto& e : mesh.boundary)
        boundary[edge_key(std::min(e.a, e.b), std::max(e.a, e.b))] = 1;
    for (const auto& [key, count] : undirected) {
        const bool onBoundary = boundary.count(key) > 0;
        if (count > 2 || (count == 1) != onBoundary)
            throw GeometryError("nonconforming mesh edge");
    }
    if (boundary.size() != mesh.boundary.size())
        throw GeometryError("duplicate boundary edge");

    // Single closed loop.
    std::unordered_map<int, int> next;
    for (std::size_t e = 0; e < mesh.boundary.size(); ++e) {
        if (undirected.find(edge_key(std::min(mesh.boundary[e].a, mesh.boundary[e].b),
                                     std::max(mesh.boundary[e].a, mesh.boundary[e].b)))
            == undirected.end())
            throw GeometryError("boundary edge is not a triangle edge");
        if (!next.emplace(mesh.boundary[e].a, mesh.boundary[e].b).second)
            throw GeometryError("boundary node with two outgoing edges");
    }
    if (mesh.boundary.empty())
        throw GeometryError("mesh has no boundary");
    int v = mesh.boundary.front().a;
    for (std::size_t k = 0; k < mesh.boundary.size(); ++k) {
        const auto it = next.find(v);
        if (it == next.end())
            throw GeometryError("boundary loop is open");
        v = it->second;
    }
    if (v != mesh.boundary.front().a)
        throw GeometryError("boundary edges do not form a single loop");
    for (int i = 0; i < n; ++i)
        if ((next.count(i) > 0) == (mesh.interior[i] != 0))
            throw GeometryError("interior mask does not match the boundary node set");
}

Mesh triangulate_structured(const Domain& domain, int nx, int ny, GridPattern pattern)
{
    if (!domain.rectangle())
        throw GeometryError("structured meshing needs a rectangle");
    if (nx < 1 || ny < 1 || 2 * (nx + ny) < 8)
        throw GeometryError("mesh too coarse: fewer than 8 boundary nodes");
    const Rect& r = *domain.rectangle();
    Mesh mesh;
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    mesh.nodes.resize(static_cast<std::size_t>(nx + 1) * (ny + 1));
    mesh.interior.assign(mesh.nodes.size(), 0);
    for (int j = 0; j <= ny; ++j) {
        const double y = j == ny ? r.ymax : r.ymin + (r.ymax - r.ymin) * j / ny;
        for (int i = 0; i <= nx; ++i) {
            const double x = i == nx ? r.xmax : r.xmin + (r.xmax - r.xmin) * i / nx;
            mesh.nodes[id(i, j)] = Vec2(x, y);
            mesh.interior[id(i, j)] = (i > 0 && i < nx && j > 0 && j < ny) ? 1 : 0;
        }
    }
    mesh.triangles.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            if (pattern == GridPattern::UnionJack && (i + j) % 2 == 1) {
                mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i, j + 1)});
                mesh.triangles.push_back({id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
            } else {
                mesh.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
                mesh.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
            }
        }
    const double fx = 1.0 / nx, fy = 1.0 / ny;
    for (int i = 0; i < nx; ++i)
        mesh.boundary.push_back({id(i, 0), id(i + 1, 0), 0, i * fx, (i + 1) * fx});
    for (int j = 0; j < ny; ++j)
        mesh.boundary.push_back({id(nx, j), id(nx, j + 1), 1, j * fy, (j + 1) * fy});
    for (int i = nx - 1; i >= 0; --i)
        mesh.boundary.push_back({id(i + 1, ny), id(i, ny), 2, (nx - i - 1) * fx, (nx - i) * fx});
    for (int j = ny - 1; j >= 0; --j)
        mesh.boundary.push_back({id(0, j + 1), id(0, j), 3, (ny - j - 1) * fy, (ny - j) * fy});
    attach_boundary_triangles(mesh);
    return mesh;
}

namespace {

// Parameter values splitting a segment into k pieces of equal arclength.
std::vector<double> arclength_params(const Segment& seg, int k)
{
    std::vector<double> t(k + 1);
    for (int j = 0; j <= k; ++j)
        t[j] = static_cast<double>(j) / k;
    if (seg.kind == Segment::Kind::Line || seg.p1.x() == seg.p1.y())
        return t;
    constexpr int fine = 2048;
    std::vector<double> cum(fine + 1, 0.0);
    for (int i = 0; i < fine; ++i)
        cum[i + 1] = cum[i] + seg.length(static_cast<double>(i) / fine, static_cast<double>(i + 1) / fine);
    for (int j = 1; j < k; ++j) {
        const double target = cum[fine] * j / k;
        const auto it = std::lower_bound(cum.begin(), cum.end(), target);
        const int hi = static_cast<int>(it - cum.begin());
        const int lo = hi - 1;
        const double f = (target - cum[lo]) / (cum[hi] - cum[lo]);
        t[j] = (lo + f) / fine;
    }
    return t;
}

// Point-in-polygon and distance queries against the boundary node loop,
// bucketed into horizontal bands.
class LoopIndex {
public:
    LoopIndex(const std::vector<Vec2>& pts, const std::vector<BoundaryEdge>& edges, double band)
        : pts_(pts), edges_(edges), band_(band)
    {
        ymin_ = pts[edges[0].a].y();
        double ymax = ymin_;
        for (const auto& e : edges) {
            ymin_ = std::min(ymin_, pts[e.a].y());
            ymax = std::max(ymax, pts[e.a].y());
        }
        bands_.resize(static_cast<std::size_t>((ymax - ymin_) / band_) + 3);
        for (int i = 0; i < static_cast<int>(edges.size()); ++i) {
            const double ya = pts[edges[i].a].y(), yb = pts[edges[i].b].y();
            const int lo = band_index(std::min(ya, yb)), hi = band_index(std::max(ya, yb));
            for (int b = lo; b <= hi; ++b)
                bands_[b].push_back(i);
        }
    }

    bool inside(const Vec2& z) const
    {
        const int b = band_index(z.y());
        if (b < 0 || b >= static_cast<int>(bands_.size()))
            return false;
        bool in = false;
        for (int i : bands_[b]) {
            const Vec2& p = pts_[edges_[i].a];
            const Vec2& q = pts_[edges_[i].b];
            if ((p.y() > z.y()) != (q.y() > z.y())) {
                const double x = p.x() + (z.y() - p.y()) * (q.x() - p.x()) / (q.y() - p.y());
                if (z.x() < x)
                    in = !in;
            }
        }
        return in;
    }

    /// Distance to the loop, exact when below one band height.
    double distance(const Vec2& z) const
    {
        double best = std::numeric_limits<double>::infinity();
        const int b = band_index(z.y());
        for (int k = b - 1; k <= b + 1; ++k) {
            if (k < 0 || k >= static_cast<int>(bands_.size()))
                continue;
            for (int i : bands_[k]) {
                const Vec2& p = pts_[edges_[i].a];
                const Vec2& q = pts_[edges_[i].b];
                const Vec2 d = q - p;
                const double f = std::clamp((z - p).dot(d) / d.squaredNorm(), 0.0, 1.0);
                best = std::min(best, (p + f * d - z).norm());
            }
        }
        return best;
    }

private:
    int band_index(double y) const { return static_cast<int>(std::floor((y - ymin_) / band_)) + 1; }

    const std::vector<Vec2>& pts_;
    const std::vector<BoundaryEdge>& edges_;
    double band_;
    double ymin_ = 0.0;
    std::vector<std::vector<int>> bands_;
};

Mesh triangulate_unstructured(const Domain& domain, double h)
{
    const auto& segs = domain.segments();

    // Boundary nodes in loop order; the last node of each segment is the
    // first node of the next one.
    std::vector<Vec2> bnodes;
    std::vector<BoundaryEdge> bedges;
    for (int si = 0; si < static_cast<int>(segs.size()); ++si) {
        const int k = std::max(1, static_cast<int>(std::ceil(segs[si].length() / h - 1e-9)));
        const auto t = arclength_params(segs[si], k);
        for (int j = 0; j < k; ++j) {
            const int id = static_cast<int>(bnodes.size());
            bnodes.push_back(segs[si].point(t[j]));
            bedges.push_back({id, id + 1, si, t[j], t[j + 1]});
        }
    }
    if (bnodes.size() < 8)
        throw GeometryError("mesh too coarse: fewer than 8 boundary nodes");
    bedges.back().b = 0;

    const Rect box = domain.bounding_box();
    std::mt19937_64 rng(0x5eed2024ULL);
    std::uniform_real_distribution<double> jitter(-1e-3 * h, 1e-3 * h);

    for (int round = 0; round < 12; ++round) {
        const int nb = static_cast<int>(bnodes.size());
        LoopIndex loop(bnodes, bedges, h);

        std::vector<Vec2> pts = bnodes;
        const double dy = h * std::sqrt(3.0) / 2.0;
        const int rows = static_cast<int>((box.ymax - box.ymin) / dy) + 2;
        const int cols = static_cast<int>((box.xmax - box.xmin) / h) + 2;
        rng.seed(0x5eed2024ULL);
        for (int r = 0; r < rows; ++r) {
            const double y = box.ymin + (r + 0.5) * dy;
            std::vector<Vec2> row;
            for (int c = 0; c < cols; ++c) {
                const Vec2 z(box.xmin + (c + 0.25 + 0.5 * (r % 2)) * h + jitter(rng), y + jitter(rng));
                if (loop.inside(z) && loop.distance(z) >= 0.55 * h)
                    row.push_back(z);
            }
            if (r % 2 == 1)
                std::reverse(row.begin(), row.end());
            pts.insert(pts.end(), row.begin(), row.end());
        }

        auto tris = detail::delaunay(pts);
        std::vector<std::array<int, 3>> kept;
        kept.reserve(tris.size());
        for (const auto& t : tris) {
            const Vec2 c = (pts[t[0]] + pts[t[1]] + pts[t[2]]) / 3.0;
            if (loop.inside(c))
                kept.push_back(t);
        }

        // Recover missing boundary edges by parametric midpoint splitting.
        std::unordered_map<std::uint64_t, int> directed;
        for (const auto& t : kept)
            for (int i = 0; i < 3; ++i)
                directed[edge_key(t[i], t[(i + 1) % 3])] = 1;
        std::vector<BoundaryEdge> refined;
        bool missing = false;
        for (const auto& e : bedges) {
            if (directed.count(edge_key(e.a, e.b))) {
                refined.push_back(e);
                continue;
            }
            missing = true;
            refined.push_back(e);
        }
        if (missing) {
            std::vector<Vec2> nn;
            std::vector<BoundaryEdge> ne;
            for (const auto& e : refined) {
                const int a = static_cast<int>(nn.size());
                nn.push_back(bnodes[e.a]);
                if (!directed.count(edge_key(e.a, e.b))) {
                    const double tm = 0.5 * (e.t0 + e.t1);
                    nn.push_back(segs[e.segment].point(tm));
                    ne.push_back({a, a + 1, e.segment, e.t0, tm});
                    ne.push_back({a + 1, a + 2, e.segment, tm, e.t1});
                } else {
                    ne.push_back({a, a + 1, e.segment, e.t0, e.t1});
                }
            }
            ne.back().b = 0;
            bnodes = std::move(nn);
            bedges = std::move(ne);
            continue;
        }

        // Compact away nodes not used by any kept triangle.
        std::vector<int> remap(pts.size(), -1);
        Mesh mesh;
        for (int i = 0; i < nb; ++i) {
            remap[i] = i;
            mesh.nodes.push_back(pts[i]);
        }
        for (const auto& t : kept)
            for (int v : t)
                if (remap[v] < 0) {
                    remap[v] = static_cast<int>(mesh.nodes.size());
                    mesh.nodes.push_back(pts[v]);
                }
        for (const auto& t : kept)
            mesh.triangles.push_back({remap[t[0]], remap[t[1]], remap[t[2]]});
        mesh.interior.assign(mesh.nodes.size(), 1);
        for (int i = 0; i < nb; ++i)
            mesh.interior[i] = 0;
        mesh.boundary = bedges;

        // A few Laplacian smoothing sweeps on interior nodes, rejecting moves
        // that would invert a triangle.
        std::vector<std::vector<int>> nbrs(mesh.nodes.size()), incident(mesh.nodes.size());
        for (int t = 0; t < static_cast<int>(mesh.triangles.size()); ++t)
            for (int i = 0; i < 3; ++i) {
                const int v = mesh.triangles[t][i];
                incident[v].push_back(t);
                nbrs[v].push_back(mesh.triangles[t][(i + 1) % 3]);
                nbrs[v].push_back(mesh.triangles[t][(i + 2) % 3]);
            }
        for (auto& l : nbrs) {
            std::sort(l.begin(), l.end());
            l.erase(std::unique(l.begin(), l.end()), l.end());
        }
        for (int sweep = 0; sweep < 4; ++sweep) {
            for (int v = nb; v < static_cast<int>(mesh.nodes.size()); ++v) {
                Vec2 avg = Vec2::Zero();
                for (int u : nbrs[v])
                    avg += mesh.nodes[u];
                avg /= static_cast<double>(nbrs[v].size());
                const Vec2 old = mesh.nodes[v];
                mesh.nodes[v] = avg;
                bool ok = true;
                for (int t : incident[v]) {
                    const auto& tri = mesh.triangles[t];
                    if (signed_area(mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]) <= 0) {
                        ok = false;
                        break;
                    }
                }
                if (!ok)
                    mesh.nodes[v] = old;
            }
        }
        attach_boundary_triangles(mesh);
        validate_mesh(mesh);
        return mesh;
    }
    throw GeometryError("boundary recovery failed; try a smaller mesh size");
}

} // namespace

Mesh triangulate(const Domain& domain, double hTarget)
{
    if (!(hTarget > 0))
        throw GeometryError("mesh size must be positive");
    if (const auto& r = domain.rectangle()) {
        const int nx = std::max(1, static_cast<int>(std::ceil((r->xmax - r->xmin) / hTarget - 1e-9)));
        const int ny = std::max(1, static_cast<int>(std::ceil((r->ymax - r->ymin) / hTarget - 1e-9)));
        return triangulate_structured(domain, nx, ny);
    }
    return triangulate_unstructured(domain, hTarget);
}

std::vector<BoundaryRecord> boundary_geometry(const Domain& domain, const Mesh& mesh)
{
    const auto& segs = domain.segments();
    std::vector<BoundaryRecord> out;
    out.reserve(mesh.boundary.size());
    double arc = 0.0;
    for (const auto& e : mesh.boundary) {
        if (e.segment < 0 || e.segment >= static_cast<int>(segs.size()))
            throw GeometryError("boundary edge lacks a segment tag");
        const auto& seg = segs[e.segment];
        const double tm = 0.5 * (e.t0 + e.t1);
        const double w = (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
        out.push_back({seg.point(tm), seg.normal(tm), w, seg.length(e.t0, e.t1), seg.curvature(tm),
                       arc + 0.5 * w});
        arc += w;
    }
    return out;
}

Measures measure(const Mesh& mesh)
{
    Measures m{0.0, 0.0};
    for (const auto& t : mesh.triangles)
        m.volume += signed_area(mesh.nodes[t[0]], mesh.nodes[t[1]], mesh.nodes[t[2]]);
    for (const auto& e : mesh.boundary)
        m.perimeter += (mesh.nodes[e.b] - mesh.nodes[e.a]).norm();
    return m;
}

double max_edge_length(const Mesh& mesh)
{
    double best = 0.0;
    for (const auto& t : mesh.triangles)
        for (int i = 0; i < 3; ++i)
            best = std::max(best, (mesh.nodes[t[i]] - mesh.nodes[t[(i + 1) % 3]]).norm());
    return best;
}

} // namespace grushin
