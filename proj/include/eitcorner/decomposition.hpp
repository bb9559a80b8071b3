#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eitcorner/geom2d.hpp"

namespace eit {

// Oblique coordinate frame: e1 horizontal, e2 at angle theta from e1.
struct ObliqueFrame {
    double theta = M_PI_2;
    Vec2 e1() const { return {1.0, 0.0}; }
    Vec2 e2() const { return {std::cos(theta), std::sin(theta)}; }
    Vec2 embed(double s, double t) const { return s * e1() + t * e2(); }
    // inverse of embed
    Vec2 pullback(Vec2 p) const {
        const double t = p.y / std::sin(theta);
        return {p.x - t * std::cos(theta), t};
    }
};

enum class CellKind {
    rhombus,
    parallelogram_remainder,
    top_parallelogram,
    top_corner_u,
    lateral,
    trapezoid,
    inverted_trapezoid,
    trapezoid_remainder,
};

const char* cell_kind_name(CellKind k);
CellKind cell_kind_from_name(const std::string& s);

struct Cell {
    int id = -1;
    CellKind kind = CellKind::rhombus;
    Polygon vertices;                    // canonical CCW order
    std::vector<Polygon> convex_parts;   // convex cover ({vertices} when convex)

    // construction bookkeeping
    double s0 = 0, s1 = 0;  // oblique x-range (parallelogram decompositions)
    double t0 = 0, t1 = 0;  // oblique y-range / lateral interval
    int parent = -1;        // big-trapezoid index, -1 otherwise

    double area() const;
    Vec2 centroid() const { return polygon_centroid(vertices); }
    bool contains(Vec2 p, double tol = 1e-12) const;
};

enum class DecompKind { parallelogram, lateral, trapezoid };

const char* decomp_kind_name(DecompKind k);

// The zigzag union of unit-lateral isosceles trapezoids. Trapezoid #t sits
// at global lateral offset t*q; adjacent trapezoids share a lateral-edge
// segment of length 1-q.
struct TrapezoidDomain {
    double theta = 0.0, q = 0.0;
    int n_pairs = 0;

    struct Big {
        bool inverted = false;
        Vec2 bl{};             // bottom-left vertex
        double blen = 0.0;     // bottom edge length
        Vec2 ldir{}, rdir{};   // unit lateral edge directions, upward
        double lam_lo = 0.0, lam_hi = 1.0;  // local lateral span (extensions widen it)
        double offset = 0.0;   // global lateral of local 0
        int pattern_index = 0; // position in the staircase pattern

        Vec2 left_at(double lam) const { return bl + lam * ldir; }
        Vec2 right_at(double lam) const { return Vec2{bl.x + blen, bl.y} + lam * rdir; }
        Polygon slice(double a, double b) const {
            return {left_at(a), right_at(a), right_at(b), left_at(b)};
        }
        double width_at(double lam) const { return right_at(lam).x - left_at(lam).x; }
    };
    std::vector<Big> bigs;
    Polygon boundary;               // outline of the union
    std::vector<Segment> sigma;     // measured boundary arcs
    double lateral_height() const;  // global lateral extent
    double area() const;
};

// Builds the union of n_pairs upright + n_pairs inverted unit-side isosceles
// trapezoids with low angle theta, odd-indexed (inverted) ones slid by q
// along the shared lateral edges.
TrapezoidDomain build_trapezoid_domain(int n_pairs, double theta, double q);

struct Decomposition {
    ObliqueFrame frame;
    DecompKind kind = DecompKind::parallelogram;
    double r = 1.0;      // cell size parameter (r or r0)
    double shift = 0.0;  // q of the underlying trapezoid domain
    std::vector<Cell> cells;
    std::vector<Segment> sigma;
    Polygon boundary;
    std::shared_ptr<const TrapezoidDomain> domain;  // set for lateral/trapezoid kinds
    std::vector<double> cuts_s, cuts_t;             // oblique cut lines (parallelogram)

    double area() const;
    double sigma_length() const;
    // id of the cell containing p, or -1
    int locate(Vec2 p, double tol = 1e-12) const;
    bool on_domain_boundary(Vec2 p, double tol = 1e-12) const;
    std::string to_json() const;
};

Decomposition build_parallelogram_decomposition(double r, double theta);
Decomposition build_lateral_decomposition(const TrapezoidDomain& dom, double r0);
Decomposition build_trapezoid_decomposition(const TrapezoidDomain& dom, double r);

enum class CornerRole { lower_left, lower_right, upper_left, upper_right };
const char* corner_role_name(CornerRole r);

struct ExposedCorner {
    Vec2 point;
    int cell_id = -1;
    double corner_angle = 0.0;
    CornerRole corner_role = CornerRole::lower_left;
};

// Vertices of the support's boundary that are a vertex of exactly one support
// cell, lie off the domain boundary, and are not interior to the support
// union (angle-coverage test handles T-vertex contacts).
std::vector<ExposedCorner> find_exposed_corners(const Decomposition& d,
                                                const std::vector<int>& support_cell_ids);

struct SharedCornerReport {
    struct Hit {
        int pert_cell = -1;
        Vec2 point{};
        int bg_cell = -1;
        bool on_edge = false;  // corner lies on a background edge (not vertex)
    };
    std::vector<Hit> hits;
    bool rational_flag = false;
    long long num = 0, den = 0;  // flagged approximation of r/r0
    double ratio = 0.0;
};

// Continued-fraction rationality heuristic: is x within tol of p/q, q <= max_den?
std::optional<std::pair<long long, long long>> rational_within(double x, long long max_den,
                                                               double tol);

SharedCornerReport shared_corner_test(const Decomposition& bg, const Decomposition& pert,
                                      double tol = 1e-9);

// Geometric enlargement keeping the original cells (same ids) interior;
// supported for parallelogram and trapezoid kinds.
Decomposition extend_domain(const Decomposition& d, int layers);

}  // namespace eit
