#include "eitcorner/geom2d.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

namespace eit {

double signed_area(const Polygon& p) {
    double s = 0.0;
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& a = p[i];
        const Vec2& b = p[(i + 1) % n];
        s += a.cross(b);
    }
    return 0.5 * s;
}

double polygon_area(const Polygon& p) { return std::abs(signed_area(p)); }

Vec2 polygon_centroid(const Polygon& p) {
    double a6 = 0.0;
    Vec2 c{};
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2& u = p[i];
        const Vec2& v = p[(i + 1) % n];
        const double w = u.cross(v);
        a6 += w;
        c = c + w * (u + v);
    }
    if (std::abs(a6) < 1e-300) throw std::runtime_error("degenerate polygon in centroid");
    return (1.0 / (3.0 * a6)) * c;
}

bool polygon_is_convex(const Polygon& p, double tol) {
    const std::size_t n = p.size();
    if (n < 3) return false;
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale = std::max(scale, p[i].norm());
    int sign = 0;
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 e1 = p[(i + 1) % n] - p[i];
        Vec2 e2 = p[(i + 2) % n] - p[(i + 1) % n];
        const double cr = e1.cross(e2);
        if (std::abs(cr) <= tol * scale * scale) continue;
        const int s = cr > 0 ? 1 : -1;
        if (sign == 0) sign = s;
        else if (s != sign) return false;
    }
    return true;
}

namespace {

bool segments_properly_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d, double tol) {
    const double d1 = (b - a).cross(c - a);
    const double d2 = (b - a).cross(d - a);
    const double d3 = (d - c).cross(a - c);
    const double d4 = (d - c).cross(b - c);
    return (d1 > tol && d2 < -tol && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol))) ||
           (d1 < -tol && d2 > tol && ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)));
}

}  // namespace

bool polygon_is_simple(const Polygon& p, double tol) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            // skip adjacent edges
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_properly_intersect(p[i], p[(i + 1) % n], p[j], p[(j + 1) % n], tol))
                return false;
        }
    }
    return true;
}

Polygon canonicalize_ccw(Polygon p) {
    if (signed_area(p) < 0.0) std::reverse(p.begin(), p.end());
    std::size_t best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i].x < p[best].x - 1e-14 ||
            (std::abs(p[i].x - p[best].x) <= 1e-14 && p[i].y < p[best].y))
            best = i;
    }
    std::rotate(p.begin(), p.begin() + static_cast<std::ptrdiff_t>(best), p.end());
    return p;
}

double point_segment_distance(Vec2 q, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.norm2();
    if (len2 < 1e-300) return (q - a).norm();
    double t = (q - a).dot(ab) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return (q - (a + t * ab)).norm();
}

bool point_in_polygon(Vec2 q, const Polygon& p, double tol) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        if (point_segment_distance(q, p[i], p[(i + 1) % n]) <= tol) return true;
    // crossing number
    bool inside = false;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const bool cond = (p[i].y > q.y) != (p[j].y > q.y);
        if (cond) {
            const double xint = p[j].x + (p[i].x - p[j].x) * (q.y - p[j].y) / (p[i].y - p[j].y);
            if (q.x < xint) inside = !inside;
        }
    }
    return inside;
}

bool point_strictly_inside(Vec2 q, const Polygon& p, double tol) {
    const std::size_t n = p.size();
    for (std::size_t i = 0; i < n; ++i)
        if (point_segment_distance(q, p[i], p[(i + 1) % n]) <= tol) return false;
    return point_in_polygon(q, p, 0.0);
}

double interior_angle(const Polygon& p, std::size_t i) {
    const std::size_t n = p.size();
    const Vec2 prev = p[(i + n - 1) % n];
    const Vec2 next = p[(i + 1) % n];
    const Vec2 u = prev - p[i];
    const Vec2 v = next - p[i];
    double ang = std::atan2(v.cross(u), v.dot(u));
    if (ang < 0) ang += 2.0 * M_PI;
    return ang;
}

Polygon clip_polygon_convex(const Polygon& subject, const Polygon& clipper) {
    Polygon out = subject;
    const std::size_t m = clipper.size();
    const double orient = signed_area(clipper) >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < m && !out.empty(); ++i) {
        const Vec2 a = clipper[i];
        const Vec2 b = clipper[(i + 1) % m];
        const Vec2 e = b - a;
        Polygon in;
        in.swap(out);
        const std::size_t k = in.size();
        for (std::size_t j = 0; j < k; ++j) {
            const Vec2 p = in[j];
            const Vec2 q = in[(j + 1) % k];
            const double sp = orient * e.cross(p - a);
            const double sq = orient * e.cross(q - a);
            if (sp >= -1e-14) out.push_back(p);
            if ((sp > 1e-14 && sq < -1e-14) || (sp < -1e-14 && sq > 1e-14)) {
                const double t = sp / (sp - sq);
                out.push_back(p + t * (q - p));
            }
        }
    }
    return out;
}

double intersection_area_convex(const Polygon& subject, const Polygon& clipper) {
    const Polygon c = clip_polygon_convex(subject, clipper);
    return c.size() >= 3 ? polygon_area(c) : 0.0;
}

// ---------------------------------------------------------------------------
// union_boundary: cancel interface edges (with partial overlaps) and stitch.
// ---------------------------------------------------------------------------
namespace {

struct LineKey {
    std::int64_t nx, ny, c;
    bool operator<(const LineKey& o) const {
        if (nx != o.nx) return nx < o.nx;
        if (ny != o.ny) return ny < o.ny;
        return c < o.c;
    }
};

std::int64_t quantize(double v, double tol) { return std::llround(v / tol); }

struct DirectedEdge {
    Vec2 a, b;
};

struct PointKey {
    std::int64_t x, y;
    bool operator<(const PointKey& o) const { return x != o.x ? x < o.x : y < o.y; }
};

PointKey pkey(Vec2 p, double tol) { return {quantize(p.x, tol), quantize(p.y, tol)}; }

}  // namespace

std::vector<Polygon> union_boundary(const std::vector<Polygon>& parts, double tol) {
    // Group all directed edges by their supporting line.
    struct Interval {
        double t0, t1;  // along the line, oriented with +dir
        int sign;       // +1 if edge direction == +dir
    };
    std::map<LineKey, std::pair<std::pair<Vec2, Vec2>, std::vector<Interval>>> lines;
    for (const Polygon& poly : parts) {
        Polygon p = poly;
        if (signed_area(p) < 0) std::reverse(p.begin(), p.end());
        const std::size_t n = p.size();
        for (std::size_t i = 0; i < n; ++i) {
            Vec2 a = p[i], b = p[(i + 1) % n];
            Vec2 d = b - a;
            const double len = d.norm();
            if (len <= tol) continue;
            d = (1.0 / len) * d;
            // canonical +dir: positive x, tie-break positive y
            Vec2 dir = d;
            int sgn = 1;
            if (dir.x < -1e-15 || (std::abs(dir.x) <= 1e-15 && dir.y < 0)) {
                dir = -dir;
                sgn = -1;
            }
            const double offs = dir.cross(Vec2{0, 0} - a);  // signed offset of origin line
            LineKey key{quantize(dir.x, 1e-12), quantize(dir.y, 1e-12), quantize(offs, tol)};
            auto& slot = lines[key];
            if (slot.second.empty()) slot.first = {a - a.dot(dir) * dir, dir};  // line origin, dir
            const Vec2 origin = slot.first.first;
            const Vec2 u = slot.first.second;
            double ta = (a - origin).dot(u);
            double tb = (b - origin).dot(u);
            if (sgn < 0) std::swap(ta, tb);  // store interval along +dir
            slot.second.push_back({std::min(ta, tb), std::max(ta, tb), sgn});
        }
    }
    // Resolve coverage on each line and emit surviving directed sub-edges.
    std::vector<DirectedEdge> edges;
    for (auto& [key, slot] : lines) {
        const Vec2 origin = slot.first.first;
        const Vec2 u = slot.first.second;
        std::vector<double> cuts;
        for (const Interval& iv : slot.second) {
            cuts.push_back(iv.t0);
            cuts.push_back(iv.t1);
        }
        std::sort(cuts.begin(), cuts.end());
        cuts.erase(std::unique(cuts.begin(), cuts.end(),
                               [&](double x, double y) { return std::abs(x - y) <= tol; }),
                   cuts.end());
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
            int net = 0;
            for (const Interval& iv : slot.second)
                if (iv.t0 - tol < mid && mid < iv.t1 + tol && iv.t0 < mid && mid < iv.t1)
                    net += iv.sign;
            if (net == 0) continue;
            if (net != 1 && net != -1)
                throw std::runtime_error("union_boundary: interior overlap detected");
            Vec2 pa = origin + cuts[i] * u;
            Vec2 pb = origin + cuts[i + 1] * u;
            if (net < 0) std::swap(pa, pb);
            edges.push_back({pa, pb});
        }
    }
    // Stitch directed edges into loops.
    std::map<PointKey, std::vector<std::size_t>> by_start;
    for (std::size_t i = 0; i < edges.size(); ++i) by_start[pkey(edges[i].a, tol)].push_back(i);
    std::vector<bool> used(edges.size(), false);
    std::vector<Polygon> loops;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (used[i]) continue;
        Polygon loop;
        std::size_t cur = i;
        while (!used[cur]) {
            used[cur] = true;
            loop.push_back(edges[cur].a);
            auto it = by_start.find(pkey(edges[cur].b, tol));
            if (it == by_start.end()) throw std::runtime_error("union_boundary: open chain");
            std::size_t next = SIZE_MAX;
            Vec2 in_dir = edges[cur].b - edges[cur].a;
            double best_turn = 1e300;
            for (std::size_t cand : it->second) {
                if (used[cand]) continue;
                Vec2 out_dir = edges[cand].b - edges[cand].a;
                // leftmost turn keeps the interior on the left
                double ang = std::atan2(in_dir.cross(out_dir), in_dir.dot(out_dir));
                double turn = -ang;  // prefer the most counterclockwise continuation
                if (turn < best_turn) {
                    best_turn = turn;
                    next = cand;
                }
            }
            if (next == SIZE_MAX) break;
            cur = next;
        }
        if (loop.size() >= 3) {
            // drop collinear vertices
            Polygon clean;
            const std::size_t n = loop.size();
            for (std::size_t j = 0; j < n; ++j) {
                Vec2 prev = loop[(j + n - 1) % n], here = loop[j], next = loop[(j + 1) % n];
                if (std::abs((here - prev).cross(next - here)) >
                    tol * std::max(1.0, (next - prev).norm2()))
                    clean.push_back(here);
            }
            if (clean.size() >= 3) loops.push_back(clean);
        }
    }
    if (loops.empty()) throw std::runtime_error("union_boundary: no loops");
    return loops;
}

}  // namespace eit
