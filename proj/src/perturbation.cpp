#include "grushin/perturbation.hpp"

#include "parse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace grushin {

namespace {

const std::map<std::string, FieldKind>& kind_names()
{
    static const std::map<std::string, FieldKind> names{
        {"zero", FieldKind::Zero},
        {"dilationGenerator", FieldKind::DilationGenerator},
        {"axisStretch", FieldKind::AxisStretch},
        {"splitPolynomial", FieldKind::SplitPolynomial},
        {"boundaryBump", FieldKind::BoundaryBump},
        {"shear", FieldKind::Shear},
        {"translation", FieldKind::Translation},
        {"radial", FieldKind::Radial},
    };
    return names;
}

double poly(const std::vector<double>& c, double x)
{
    double v = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it)
        v = v * x + *it;
    return v;
}

double dpoly(const std::vector<double>& c, double x)
{
    double v = 0.0;
    for (std::size_t k = c.size(); k-- > 1;)
        v = v * x + static_cast<double>(k) * c[k];
    return v;
}

double bump(double t) { return std::abs(t) < 1.0 ? std::pow(1.0 - t * t, 3) : 0.0; }

double dbump(double t) { return std::abs(t) < 1.0 ? -6.0 * t * std::pow(1.0 - t * t, 2) : 0.0; }

} // namespace

std::string to_string(FieldKind kind)
{
    for (const auto& [name, k] : kind_names())
        if (k == kind)
            return name;
    return "unknown";
}

FieldKind field_kind_from_string(const std::string& name)
{
    if (name == "dilation")
        return FieldKind::DilationGenerator;
    if (name == "bump")
        return FieldKind::BoundaryBump;
    const auto it = kind_names().find(name);
    if (it == kind_names().end())
        throw ConfigError("unknown field kind '" + name + "'");
    return it->second;
}

PerturbationField::PerturbationField(FieldKind kind, FieldParams params, bool supportAvoidsO)
    : kind_(kind)
    , params_(std::move(params))
    , avoids_(supportAvoidsO)
{
}

Vec2 PerturbationField::value(const Vec2& z) const
{
    const auto& p = params_;
    switch (kind_) {
    case FieldKind::Zero:
        return Vec2::Zero();
    case FieldKind::DilationGenerator:
        return Vec2(z.x(), (1.0 + p.s) * z.y());
    case FieldKind::AxisStretch:
        return p.axis == 0 ? Vec2(p.amplitude * z.x(), 0.0) : Vec2(0.0, p.amplitude * z.y());
    case FieldKind::SplitPolynomial:
        return Vec2(poly(p.ax, z.x()), poly(p.by, z.y()));
    case FieldKind::BoundaryBump: {
        const double u = (z.x() - p.center.x()) / p.radii.x();
        const double v = (z.y() - p.center.y()) / p.radii.y();
        return p.amplitude * bump(u) * bump(v) * p.direction;
    }
    case FieldKind::Shear:
        return Vec2(p.shearA * z.y(), p.shearB * z.x());
    case FieldKind::Translation:
        return p.offset;
    case FieldKind::Radial:
        return p.amplitude * (z - p.center);
    }
    return Vec2::Zero();
}

Mat2 PerturbationField::jacobian(const Vec2& z) const
{
    const auto& p = params_;
    Mat2 j = Mat2::Zero();
    switch (kind_) {
    case FieldKind::Zero:
    case FieldKind::Translation:
        break;
    case FieldKind::DilationGenerator:
        j(0, 0) = 1.0;
        j(1, 1) = 1.0 + p.s;
        break;
    case FieldKind::AxisStretch:
        j(p.axis, p.axis) = p.amplitude;
        break;
    case FieldKind::SplitPolynomial:
        j(0, 0) = dpoly(p.ax, z.x());
        j(1, 1) = dpoly(p.by, z.y());
        break;
    case FieldKind::BoundaryBump: {
        const double u = (z.x() - p.center.x()) / p.radii.x();
        const double v = (z.y() - p.center.y()) / p.radii.y();
        const double gx = p.amplitude * dbump(u) / p.radii.x() * bump(v);
        const double gy = p.amplitude * bump(u) * dbump(v) / p.radii.y();
        j.col(0) = gx * p.direction;
        j.col(1) = gy * p.direction;
        break;
    }
    case FieldKind::Shear:
        j(0, 1) = p.shearA;
        j(1, 0) = p.shearB;
        break;
    case FieldKind::Radial:
        j = p.amplitude * Mat2::Identity();
        break;
    }
    return j;
}

PerturbationField make_field(FieldKind kind, const FieldParams& params, const Domain& domain)
{
    const auto& o = domain.neighborhood();
    bool avoids = !o.has_value();
    switch (kind) {
    case FieldKind::Zero:
        avoids = true;
        break;
    case FieldKind::AxisStretch:
        if (params.axis != 0 && params.axis != 1)
            throw PerturbationError("axisStretch axis must be 0 (x) or 1 (y)");
        break;
    case FieldKind::SplitPolynomial:
        if (!params.ax.empty() && params.ax[0] != 0.0)
            throw PerturbationError("splitPolynomial: psi_x must vanish at x = 0 (constant term)");
        break;
    case FieldKind::BoundaryBump: {
        if (!(params.radii.x() > 0 && params.radii.y() > 0))
            throw PerturbationError("boundaryBump radii must be positive");
        const Rect support{params.center.x() - params.radii.x(), params.center.x() + params.radii.x(),
                           params.center.y() - params.radii.y(), params.center.y() + params.radii.y()};
        if (o && support.intersects(*o))
            throw PerturbationError("boundaryBump support intersects the neighborhood O");
        avoids = true;
        break;
    }
    default:
        break;
    }
    FieldParams p = params;
    if (kind == FieldKind::DilationGenerator)
        p.s = domain.s();
    return PerturbationField(kind, std::move(p), avoids);
}

PerturbationField make_field(const KeyValues& spec, const Domain& domain)
{
    const auto kindIt = spec.find("kind");
    if (kindIt == spec.end())
        throw ConfigError("field needs a 'kind' key");
    const FieldKind kind = field_kind_from_string(kindIt->second);
    FieldParams p;
    auto num = [&](const std::string& key, double fallback) {
        const auto it = spec.find(key);
        return it == spec.end() ? fallback : detail::to_number(it->second, key);
    };
    auto vec2 = [&](const std::string& key, Vec2 fallback) {
        const auto it = spec.find(key);
        if (it == spec.end())
            return fallback;
        const auto v = detail::parse_numbers(it->second);
        if (v.size() != 2)
            throw ConfigError("'" + key + "' needs two numbers");
        return Vec2(v[0], v[1]);
    };
    auto list = [&](const std::string& key) {
        const auto it = spec.find(key);
        return it == spec.end() ? std::vector<double>{} : detail::parse_numbers(it->second);
    };
    p.axis = static_cast<int>(num("axis", 0));
    p.amplitude = num("amplitude", 1.0);
    p.ax = list("ax");
    p.by = list("by");
    p.center = vec2("center", Vec2::Zero());
    p.radii = vec2("radii", Vec2::Ones());
    p.direction = vec2("direction", Vec2(1.0, 0.0));
    p.shearA = num("a", 0.0);
    p.shearB = num("b", 0.0);
    p.offset = vec2("offset", Vec2::Zero());
    try {
        return make_field(kind, p, domain);
    } catch (const PerturbationError& e) {
        throw ConfigError(e.what());
    }
}

MapFamily MapFamily::linear(PerturbationField field)
{
    MapFamily f;
    f.generator_ = std::move(field);
    return f;
}

MapFamily MapFamily::dilation(int s)
{
    MapFamily f;
    FieldParams p;
    p.s = s;
    f.generator_ = PerturbationField(FieldKind::DilationGenerator, p, false);
    f.dilation_ = true;
    f.s_ = s;
    return f;
}

Vec2 MapFamily::apply(double param, const Vec2& z) const
{
    if (dilation_)
        return Vec2(param * z.x(), std::pow(param, 1 + s_) * z.y());
    return z + param * generator_.value(z);
}

namespace {

std::vector<Vec2> sample_closure(const Domain& domain, int count, std::mt19937_64& rng,
                                 const std::optional<Rect>& window)
{
    Rect box = domain.bounding_box();
    if (window) {
        box.xmin = std::max(box.xmin, window->xmin);
        box.xmax = std::min(box.xmax, window->xmax);
        box.ymin = std::max(box.ymin, window->ymin);
        box.ymax = std::min(box.ymax, window->ymax);
        if (!(box.xmin < box.xmax && box.ymin < box.ymax))
            return {};
    }
    std::uniform_real_distribution<double> ux(box.xmin, box.xmax), uy(box.ymin, box.ymax);
    std::vector<Vec2> out;
    for (int tries = 0; tries < 200 * count && static_cast<int>(out.size()) < count; ++tries) {
        const Vec2 z(ux(rng), uy(rng));
        if (domain.inside(z) && (!window || window->contains(z)))
            out.push_back(z);
    }
    if (!window) {
        const auto& poly = domain.polyline();
        const std::size_t stride = std::max<std::size_t>(1, poly.size() / static_cast<std::size_t>(count));
        for (std::size_t i = 0; i < poly.size(); i += stride)
            out.push_back(poly[i]);
    }
    return out;
}

} // namespace

AdmissibilityReport check_admissible(const MapFamily& family, double param, const Domain& domain,
                                     int samples, const AdmissibilityOptions& opts)
{
    AdmissibilityReport rep;
    std::mt19937_64 rng(opts.seed);
    const auto pts = sample_closure(domain, std::max(samples, 100), rng, std::nullopt);
    const Rect box = domain.bounding_box();
    const double diam = std::hypot(box.xmax - box.xmin, box.ymax - box.ymin);
    auto phi = [&](const Vec2& z) { return family.apply(param, z); };

    double minRatio = std::numeric_limits<double>::infinity();
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * 3.141592653589793);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2& z1 = pts[i];
        const Vec2& z2 = pts[pick(rng)];
        if ((z1 - z2).norm() > 1e-12 * diam)
            minRatio = std::min(minRatio, (phi(z1) - phi(z2)).norm() / (z1 - z2).norm());
        const double a = angle(rng);
        const Vec2 z3 = z1 + 1e-5 * diam * Vec2(std::cos(a), std::sin(a));
        minRatio = std::min(minRatio, (phi(z1) - phi(z3)).norm() / (z1 - z3).norm());
    }
    rep.minRatio = minRatio;
    if (!(minRatio > opts.minLipschitzRatio)) {
        rep.passed = false;
        rep.violation = "bi-Lipschitz lower bound " + std::to_string(minRatio) + " too small";
        return rep;
    }

    const auto& o = domain.neighborhood();
    if (!o)
        return rep;
    const auto inO = sample_closure(domain, std::max(samples, 100), rng, o);
    const double tol = opts.splitTolerance;
    auto close = [tol](double a, double b) { return std::abs(a - b) <= tol * (1.0 + std::abs(a)); };
    for (std::size_t i = 0; i < inO.size(); ++i) {
        const Vec2& z1 = inO[i];
        const Vec2& z2 = inO[(i * 7 + 3) % inO.size()];
        const Vec2 sameX(z1.x(), z2.y());
        const Vec2 sameY(z2.x(), z1.y());
        if (domain.inside(sameX) && o->contains(sameX) && !close(phi(z1).x(), phi(sameX).x())) {
            rep.passed = false;
            rep.violation = "split structure: phi_x depends on y inside O";
            return rep;
        }
        if (domain.inside(sameY) && o->contains(sameY) && !close(phi(z1).y(), phi(sameY).y())) {
            rep.passed = false;
            rep.violation = "split structure: phi_y depends on x inside O";
            return rep;
        }
        const Vec2 onAxis(0.0, z1.y());
        if (domain.inside(onAxis) && std::abs(phi(onAxis).x()) > tol) {
            rep.passed = false;
            rep.violation = "phi_x(0) != 0: the degenerate set is not preserved";
            return rep;
        }
    }
    return rep;
}

AdmissibilityReport check_admissible(const PerturbationField& field, double eps,
                                     const Domain& domain, int samples,
                                     const AdmissibilityOptions& opts)
{
    return check_admissible(MapFamily::linear(field), eps, domain, samples, opts);
}

Mesh map_mesh(const Mesh& mesh, const PointMap& map)
{
    Mesh out = mesh;
    for (auto& z : out.nodes)
        z = map(z);
    for (const auto& t : out.triangles)
        if (!(signed_area(out.nodes[t[0]], out.nodes[t[1]], out.nodes[t[2]]) > 0.0))
            throw PerturbationError("map inverts a triangle");
    std::vector<int> order(out.nodes.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        const auto& p = out.nodes[a];
        const auto& q = out.nodes[b];
        return p.x() < q.x() || (p.x() == q.x() && p.y() < q.y());
    });
    for (std::size_t i = 0; i < order.size(); ++i)
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const auto& p = out.nodes[order[i]];
            const auto& q = out.nodes[order[j]];
            if (q.x() - p.x() > 1e-12)
                break;
            if ((p - q).norm() <= 1e-12)
                throw PerturbationError("map is not injective on the node set");
        }
    return out;
}

Mesh map_mesh(const Mesh& mesh, const MapFamily& family, double param)
{
    return map_mesh(mesh, [&](const Vec2& z) { return family.apply(param, z); });
}

} // namespace grushin
