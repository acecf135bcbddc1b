#include "delaunay.hpp"

#include <algorithm>
#include <cmath>

namespace grushin::detail {

namespace {

struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> nb; // nb[i] is across the edge opposite v[i]
    int stamp = -1;
    bool alive = true;
};

double orient(const Vec2& a, const Vec2& b, const Vec2& p)
{
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// > 0 when p lies strictly inside the circumcircle of counter-clockwise (a, b, c).
double incircle(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p)
{
    const double adx = a.x() - p.x(), ady = a.y() - p.y();
    const double bdx = b.x() - p.x(), bdy = b.y() - p.y();
    const double cdx = c.x() - p.x(), cdy = c.y() - p.y();
    const double ad = adx * adx + ady * ady;
    const double bd = bdx * bdx + bdy * bdy;
    const double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

class Triangulator {
public:
    explicit Triangulator(const std::vector<Vec2>& input)
    {
        Vec2 lo = input.front(), hi = input.front();
        for (const auto& p : input) {
            lo = lo.cwiseMin(p);
            hi = hi.cwiseMax(p);
        }
        const Vec2 c = 0.5 * (lo + hi);
        const double d = std::max((hi - lo).maxCoeff(), 1e-12);
        pts_ = input;
        super_ = static_cast<int>(pts_.size());
        pts_.push_back(c + Vec2(-40 * d, -40 * d));
        pts_.push_back(c + Vec2(40 * d, -40 * d));
        pts_.push_back(c + Vec2(0.0, 40 * d));
        tris_.push_back(Tri{{super_, super_ + 1, super_ + 2}, {-1, -1, -1}});
    }

    void insert(int p)
    {
        const int start = locate(pts_[p]);
        ++stamp_;
        bad_.clear();
        stack_.clear();
        stack_.push_back(start);
        tris_[start].stamp = stamp_;
        while (!stack_.empty()) {
            const int t = stack_.back();
            stack_.pop_back();
            bad_.push_back(t);
            for (int i = 0; i < 3; ++i) {
                const int n = tris_[t].nb[i];
                if (n < 0 || tris_[n].stamp == stamp_)
                    continue;
                const auto& v = tris_[n].v;
                if (incircle(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[p]) > 0.0) {
                    tris_[n].stamp = stamp_;
                    stack_.push_back(n);
                }
            }
        }

        fresh_.clear();
        for (int t : bad_) {
            for (int i = 0; i < 3; ++i) {
                const int n = tris_[t].nb[i];
                if (n >= 0 && tris_[n].stamp == stamp_)
                    continue;
                const int a = tris_[t].v[(i + 1) % 3];
                const int b = tris_[t].v[(i + 2) % 3];
                const int id = static_cast<int>(tris_.size());
                tris_.push_back(Tri{{p, a, b}, {n, -1, -1}});
                if (n >= 0) {
                    auto& outer = tris_[n];
                    for (int j = 0; j < 3; ++j)
                        if (outer.nb[j] == t)
                            outer.nb[j] = id;
                }
                fresh_.push_back(id);
            }
        }
        // Link the fan around p: (p,a,b) meets (p,b,*) across edge (b,p)
        // and (p,*,a) across edge (p,a).
        for (int id : fresh_) {
            auto& t = tris_[id];
            for (int other : fresh_) {
                if (other == id)
                    continue;
                const auto& o = tris_[other].v;
                if (o[1] == t.v[2])
                    t.nb[1] = other;
                if (o[2] == t.v[1])
                    t.nb[2] = other;
            }
        }
        for (int t : bad_)
            tris_[t].alive = false;
        last_ = fresh_.front();
    }

    std::vector<std::array<int, 3>> result() const
    {
        std::vector<std::array<int, 3>> out;
        for (const auto& t : tris_) {
            if (!t.alive)
                continue;
            if (t.v[0] >= super_ || t.v[1] >= super_ || t.v[2] >= super_)
                continue;
            out.push_back(t.v);
        }
        return out;
    }

private:
    int locate(const Vec2& p) const
    {
        int t = last_;
        const int cap = 4 * static_cast<int>(tris_.size()) + 16;
        for (int step = 0; step < cap; ++step) {
            const auto& tri = tris_[t];
            int next = -1;
            for (int i = 0; i < 3; ++i) {
                const Vec2& a = pts_[tri.v[(i + 1) % 3]];
                const Vec2& b = pts_[tri.v[(i + 2) % 3]];
                if (orient(a, b, p) < 0.0 && tri.nb[i] >= 0) {
                    next = tri.nb[i];
                    break;
                }
            }
            if (next < 0)
                return t;
            t = next;
        }
        // Walk failed to terminate; fall back to a scan.
        for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
            const auto& tri = tris_[i];
            if (!tri.alive)
                continue;
            const auto& a = pts_[tri.v[0]];
            const auto& b = pts_[tri.v[1]];
            const auto& c = pts_[tri.v[2]];
            if (orient(a, b, p) >= 0 && orient(b, c, p) >= 0 && orient(c, a, p) >= 0)
                return i;
        }
        return last_;
    }

    std::vector<Vec2> pts_;
    std::vector<Tri> tris_;
    std::vector<int> bad_, stack_, fresh_;
    int super_ = 0;
    int last_ = 0;
    int stamp_ = 0;
};

} // namespace

std::vector<std::array<int, 3>> delaunay(const std::vector<Vec2>& points)
{
    if (points.size() < 3)
        return {};
    Triangulator tri(points);
    for (int i = 0; i < static_cast<int>(points.size()); ++i)
        tri.insert(i);
    return tri.result();
}

} // namespace grushin::detail
