#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eit {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double a) const { return {a * x, a * y}; }
    Vec2 operator-() const { return {-x, -y}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double a, Vec2 v) { return {a * v.x, a * v.y}; }

using Polygon = std::vector<Vec2>;

// Signed area (positive for counterclockwise ordering).
double signed_area(const Polygon& p);
double polygon_area(const Polygon& p);
Vec2 polygon_centroid(const Polygon& p);

bool polygon_is_convex(const Polygon& p, double tol = 1e-12);
bool polygon_is_simple(const Polygon& p, double tol = 1e-12);

// Reorders a simple polygon counterclockwise starting from the
// lexicographically smallest vertex (x first, then y).
Polygon canonicalize_ccw(Polygon p);

// Winding-number point-in-polygon test for simple polygons. Points within tol
// of the boundary count as inside.
bool point_in_polygon(Vec2 q, const Polygon& p, double tol = 1e-12);
bool point_strictly_inside(Vec2 q, const Polygon& p, double tol = 1e-12);

// Distance from q to the segment [a,b].
double point_segment_distance(Vec2 q, Vec2 a, Vec2 b);

// Interior angle of the polygon at vertex i (CCW orientation assumed).
double interior_angle(const Polygon& p, std::size_t i);

// Sutherland-Hodgman clip of an arbitrary simple polygon against a convex
// clipper. Returns the clipped polygon (possibly empty).
Polygon clip_polygon_convex(const Polygon& subject, const Polygon& convex_clipper);

// Area of subject ∩ clipper, clipper convex.
double intersection_area_convex(const Polygon& subject, const Polygon& convex_clipper);

struct Segment {
    Vec2 a, b;
};

// Union boundary of a set of polygons that tile a region without interior
// overlap. Edges that appear once (counted with orientation and partial
// overlaps resolved) form the boundary; shared interface pieces cancel.
// Returns the outer loops (CCW). Throws if the edges do not cancel into
// closed loops or if double-covered sub-edges are detected.
std::vector<Polygon> union_boundary(const std::vector<Polygon>& parts, double tol = 1e-9);

// Affine map helper: p -> A p + b.
struct Affine {
    std::array<std::array<double, 2>, 2> A{{{1.0, 0.0}, {0.0, 1.0}}};
    Vec2 b{};
    Vec2 operator()(Vec2 p) const {
        return {A[0][0] * p.x + A[0][1] * p.y + b.x, A[1][0] * p.x + A[1][1] * p.y + b.y};
    }
};

}  // namespace eit
