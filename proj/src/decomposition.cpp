#include "eitcorner/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "eitcorner/io_util.hpp"

namespace eit {

namespace {
constexpr double kSnap = 1e-12;

int floor_count(double total, double step) {
    int n = static_cast<int>(std::floor(total / step + 1e-12));
    return std::max(n, 0);
}
}  // namespace

const char* cell_kind_name(CellKind k) {
    switch (k) {
        case CellKind::rhombus: return "rhombus";
        case CellKind::parallelogram_remainder: return "parallelogram-remainder";
        case CellKind::top_parallelogram: return "top-parallelogram";
        case CellKind::top_corner_u: return "top-corner-U";
        case CellKind::lateral: return "lateral";
        case CellKind::trapezoid: return "trapezoid";
        case CellKind::inverted_trapezoid: return "inverted-trapezoid";
        case CellKind::trapezoid_remainder: return "trapezoid-remainder";
    }
    return "?";
}

CellKind cell_kind_from_name(const std::string& s) {
    for (int k = 0; k <= static_cast<int>(CellKind::trapezoid_remainder); ++k)
        if (s == cell_kind_name(static_cast<CellKind>(k))) return static_cast<CellKind>(k);
    throw std::invalid_argument("unknown cell kind: " + s);
}

const char* decomp_kind_name(DecompKind k) {
    switch (k) {
        case DecompKind::parallelogram: return "parallelogram";
        case DecompKind::lateral: return "lateral";
        case DecompKind::trapezoid: return "trapezoid";
    }
    return "?";
}

const char* corner_role_name(CornerRole r) {
    switch (r) {
        case CornerRole::lower_left: return "lower-left";
        case CornerRole::lower_right: return "lower-right";
        case CornerRole::upper_left: return "upper-left";
        case CornerRole::upper_right: return "upper-right";
    }
    return "?";
}

double Cell::area() const { return polygon_area(vertices); }

bool Cell::contains(Vec2 p, double tol) const {
    if (convex_parts.size() <= 1) return point_in_polygon(p, vertices, tol);
    for (const Polygon& part : convex_parts)
        if (point_in_polygon(p, part, tol)) return true;
    return false;
}

double Decomposition::area() const {
    double a = 0.0;
    for (const Cell& c : cells) a += c.area();
    return a;
}

double Decomposition::sigma_length() const {
    double l = 0.0;
    for (const Segment& s : sigma) l += (s.b - s.a).norm();
    return l;
}

bool Decomposition::on_domain_boundary(Vec2 p, double tol) const {
    const std::size_t n = boundary.size();
    for (std::size_t i = 0; i < n; ++i)
        if (point_segment_distance(p, boundary[i], boundary[(i + 1) % n]) <= tol) return true;
    return false;
}

int Decomposition::locate(Vec2 p, double tol) const {
    if (kind == DecompKind::parallelogram) {
        const Vec2 st = frame.pullback(p);
        for (const Cell& c : cells)
            if (st.x >= c.s0 - tol && st.x <= c.s1 + tol && st.y >= c.t0 - tol &&
                st.y <= c.t1 + tol)
                return c.id;
        return -1;
    }
    for (const Cell& c : cells)
        if (c.contains(p, tol)) return c.id;
    return -1;
}

// ---------------------------------------------------------------------------
// Parallelogram decomposition (stair construction on the oblique unit square)
// ---------------------------------------------------------------------------

Decomposition build_parallelogram_decomposition(double r, double theta) {
    if (!(r > 0.0) || r > 1.0 + kSnap) throw std::invalid_argument("r must be in (0,1]");
    if (!(theta > 0.0) || !(theta < M_PI)) throw std::invalid_argument("theta must be in (0,pi)");
    r = std::min(r, 1.0);

    Decomposition d;
    d.frame.theta = theta;
    d.kind = DecompKind::parallelogram;
    d.r = r;

    const int n = std::max(1, floor_count(1.0, r));
    double w = 1.0 - n * r;
    if (w <= kSnap) w = 0.0;  // exact division, no remainder slivers

    std::vector<double>& cs = d.cuts_s;
    for (int i = 0; i <= n; ++i) cs.push_back(i * r);
    if (w > 0.0) cs.push_back(1.0);
    cs.back() = 1.0;
    d.cuts_t = cs;

    auto add_cell = [&](double s0, double s1, double t0, double t1, CellKind kind) {
        Cell c;
        c.id = static_cast<int>(d.cells.size());
        c.kind = kind;
        c.s0 = s0; c.s1 = s1; c.t0 = t0; c.t1 = t1;
        c.vertices = canonicalize_ccw({d.frame.embed(s0, t0), d.frame.embed(s1, t0),
                                       d.frame.embed(s1, t1), d.frame.embed(s0, t1)});
        c.convex_parts = {c.vertices};
        d.cells.push_back(std::move(c));
    };

    // stairs of rhombi plus the per-stair remainder T_j
    for (int j = 0; j < n; ++j) {
        const double t0 = j * r, t1 = (j + 1) * r;
        for (int i = 0; i < n; ++i) add_cell(i * r, (i + 1) * r, t0, t1, CellKind::rhombus);
        if (w > 0.0) add_cell(n * r, 1.0, t0, t1, CellKind::parallelogram_remainder);
    }
    // top row of r x r~ parallelograms and the corner rhombus U
    if (w > 0.0) {
        const double t0 = n * r;
        for (int i = 0; i < n; ++i) add_cell(i * r, (i + 1) * r, t0, 1.0, CellKind::top_parallelogram);
        add_cell(n * r, 1.0, t0, 1.0, CellKind::top_corner_u);
    }

    d.boundary = {d.frame.embed(0, 0), d.frame.embed(1, 0), d.frame.embed(1, 1),
                  d.frame.embed(0, 1)};
    d.sigma = {{d.frame.embed(1, 0), d.frame.embed(0, 0)},
               {d.frame.embed(0, 0), d.frame.embed(0, 1)}};
    return d;
}

// ---------------------------------------------------------------------------
// Trapezoid domain and its decompositions
// ---------------------------------------------------------------------------

double TrapezoidDomain::lateral_height() const {
    return bigs.empty() ? 0.0 : bigs.back().offset + bigs.back().lam_hi;
}

double TrapezoidDomain::area() const { return polygon_area(boundary); }

namespace {

void walk_trapezoid_boundary(TrapezoidDomain& dom) {
    const auto& bigs = dom.bigs;
    const int m = static_cast<int>(bigs.size());
    Polygon pts;
    std::vector<Segment> sigma;
    auto push = [&](Vec2 p) {
        if (pts.empty() || (pts.back() - p).norm() > kSnap) pts.push_back(p);
    };
    auto push_sigma = [&](Vec2 a, Vec2 b) {
        if ((b - a).norm() > kSnap) sigma.push_back({a, b});
    };
    auto L = [&](int t, double lam) { return bigs[t].left_at(lam); };
    auto R = [&](int t, double lam) { return bigs[t].right_at(lam); };
    // bottom staircase
    for (int t = 0; t < m; ++t) {
        const double lo = bigs[t].lam_lo;
        push(L(t, lo));
        push(R(t, lo));
        push_sigma(L(t, lo), R(t, lo));
        if (t + 1 < m) push_sigma(R(t, lo), L(t + 1, bigs[t + 1].lam_lo));
    }
    // right lateral edge
    push(R(m - 1, bigs[m - 1].lam_hi));
    push_sigma(R(m - 1, bigs[m - 1].lam_lo), R(m - 1, bigs[m - 1].lam_hi));
    // top staircase, right to left
    for (int t = m - 1; t >= 0; --t) {
        push(L(t, bigs[t].lam_hi));
        if (t > 0) push(R(t - 1, bigs[t - 1].lam_hi));
    }
    if ((pts.front() - pts.back()).norm() <= kSnap) pts.pop_back();
    // drop collinear vertices introduced by flush joints
    Polygon clean;
    const std::size_t n = pts.size();
    for (std::size_t j = 0; j < n; ++j) {
        const Vec2 prev = pts[(j + n - 1) % n], here = pts[j], next = pts[(j + 1) % n];
        if (std::abs((here - prev).cross(next - here)) > 1e-12) clean.push_back(here);
    }
    sigma.insert(sigma.begin(), {L(0, bigs[0].lam_hi), L(0, bigs[0].lam_lo)});
    dom.boundary = clean;
    dom.sigma = sigma;
    if (!(polygon_is_simple(clean) && signed_area(clean) > 0))
        throw std::runtime_error("trapezoid domain boundary is degenerate");
}

}  // namespace

namespace {

// staircase trapezoid #t with local lateral span [0,1]; valid for any t
TrapezoidDomain::Big pattern_big(int t, double theta, double q) {
    const double c = std::cos(theta), s = std::sin(theta);
    const double B = 1.0 + 2.0 * c;
    const Vec2 eplus{c, s}, eminus{-c, s};
    TrapezoidDomain::Big b;
    b.pattern_index = t;
    b.inverted = ((t % 2) + 2) % 2 == 1;
    b.offset = t * q;
    const auto fdiv = [](int a, int m) { return (a >= 0) ? a / m : -((-a + m - 1) / m); };
    if (!b.inverted) {
        b.bl = Vec2{fdiv(t, 2) * (B + 1.0), 0.0} + Vec2{0.0, t * q * s};
        b.blen = B;
        b.ldir = eplus;
        b.rdir = eminus;
    } else {
        b.bl = Vec2{fdiv(t - 1, 2) * (B + 1.0) + B, 0.0} + Vec2{-q * c, t * q * s};
        b.blen = 1.0;
        b.ldir = eminus;
        b.rdir = eplus;
    }
    return b;
}

}  // namespace

TrapezoidDomain build_trapezoid_domain(int n_pairs, double theta, double q) {
    if (n_pairs < 1) throw std::invalid_argument("n_pairs must be >= 1");
    if (!(theta > 0.0) || !(theta < M_PI)) throw std::invalid_argument("theta must be in (0,pi)");
    if (std::abs(theta - M_PI_2) <= 1e-12)
        throw std::invalid_argument("theta = pi/2 is degenerate for the trapezoid domain");
    const double B = 1.0 + 2.0 * std::cos(theta);  // long base (short base has length 1)
    if (B <= 1e-9) throw std::invalid_argument("trapezoid self-intersects: need theta < 2*pi/3");
    if (!(q > 0.0) || !(q < 1.0)) throw std::invalid_argument("q must be in (0,1)");

    TrapezoidDomain dom;
    dom.theta = theta;
    dom.q = q;
    dom.n_pairs = n_pairs;
    for (int t = 0; t < 2 * n_pairs; ++t) dom.bigs.push_back(pattern_big(t, theta, q));
    walk_trapezoid_boundary(dom);
    return dom;
}

namespace {

Cell make_slice_cell(const TrapezoidDomain::Big& big, int parent, double a, double b,
                     CellKind kind) {
    Cell c;
    c.kind = kind;
    c.parent = parent;
    c.t0 = a;
    c.t1 = b;
    c.vertices = canonicalize_ccw(big.slice(a, b));
    c.convex_parts = {c.vertices};
    return c;
}

}  // namespace

Decomposition build_trapezoid_decomposition(const TrapezoidDomain& dom, double r) {
    if (!(r > 0.0) || r > 1.0 + kSnap) throw std::invalid_argument("r must be in (0,1]");
    r = std::min(r, 1.0);
    Decomposition d;
    d.frame.theta = dom.theta;
    d.kind = DecompKind::trapezoid;
    d.r = r;
    d.shift = dom.q;
    d.domain = std::make_shared<TrapezoidDomain>(dom);
    d.boundary = dom.boundary;
    d.sigma = dom.sigma;

    for (std::size_t t = 0; t < dom.bigs.size(); ++t) {
        const auto& big = dom.bigs[t];
        const double span = big.lam_hi - big.lam_lo;
        int k = floor_count(span, r);
        double rem = span - k * r;
        if (rem <= kSnap) rem = 0.0;
        for (int i = 0; i < k; ++i) {
            const double a = big.lam_lo + i * r;
            const double b = (i + 1 == k && rem == 0.0) ? big.lam_hi : big.lam_lo + (i + 1) * r;
            Cell c = make_slice_cell(big, static_cast<int>(t), a, b,
                                     big.inverted ? CellKind::inverted_trapezoid
                                                  : CellKind::trapezoid);
            c.id = static_cast<int>(d.cells.size());
            d.cells.push_back(std::move(c));
        }
        if (rem > 0.0) {
            Cell c = make_slice_cell(big, static_cast<int>(t), big.lam_lo + k * r, big.lam_hi,
                                     CellKind::trapezoid_remainder);
            c.id = static_cast<int>(d.cells.size());
            d.cells.push_back(std::move(c));
        }
    }
    return d;
}

Decomposition build_lateral_decomposition(const TrapezoidDomain& dom, double r0) {
    const double height = dom.lateral_height();
    if (!(r0 > 0.0) || r0 > height + kSnap)
        throw std::invalid_argument("r0 must be in (0, lateral height]");
    Decomposition d;
    d.frame.theta = dom.theta;
    d.kind = DecompKind::lateral;
    d.r = r0;
    d.shift = dom.q;
    d.domain = std::make_shared<TrapezoidDomain>(dom);
    d.boundary = dom.boundary;
    d.sigma = dom.sigma;

    const int m = static_cast<int>(dom.bigs.size());
    int nb = floor_count(height, r0);
    if (height - nb * r0 > kSnap) ++nb;  // remainder band

    for (int band = 0; band < nb; ++band) {
        const double a = band * r0;
        const double b = std::min((band + 1) * r0, height);
        // per-trapezoid clips of the band
        std::vector<std::pair<int, std::pair<double, double>>> pieces;  // (t, local interval)
        for (int t = 0; t < m; ++t) {
            const double lo = std::max(dom.bigs[t].lam_lo, a - dom.bigs[t].offset);
            const double hi = std::min(dom.bigs[t].lam_hi, b - dom.bigs[t].offset);
            if (hi - lo > kSnap) pieces.push_back({t, {lo, hi}});
        }
        if (pieces.empty()) continue;
        // group consecutive trapezoids connected through their shared edge
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            bool joined = false;
            if (!groups.empty()) {
                const auto& prev = pieces[groups.back().back()];
                const auto& cur = pieces[i];
                if (cur.first == prev.first + 1) {
                    // contact range of the interface in global lateral units
                    const double c_lo = dom.bigs[cur.first].offset + dom.bigs[cur.first].lam_lo;
                    const double c_hi =
                        dom.bigs[prev.first].offset + dom.bigs[prev.first].lam_hi;
                    const double lo = std::max({a, c_lo});
                    const double hi = std::min({b, c_hi});
                    if (hi - lo > kSnap) joined = true;
                }
            }
            if (joined) groups.back().push_back(i);
            else groups.push_back({i});
        }
        for (const auto& g : groups) {
            Cell c;
            c.id = static_cast<int>(d.cells.size());
            c.kind = CellKind::lateral;
            c.t0 = a;
            c.t1 = b;
            c.parent = -1;
            std::vector<Polygon> parts;
            for (std::size_t idx : g) {
                const auto& [t, iv] = pieces[idx];
                parts.push_back(dom.bigs[t].slice(iv.first, iv.second));
            }
            c.convex_parts = parts;
            if (parts.size() == 1) {
                c.vertices = canonicalize_ccw(parts[0]);
            } else {
                auto loops = union_boundary(parts);
                if (loops.size() != 1)
                    throw std::runtime_error("lateral cell union produced multiple loops");
                c.vertices = canonicalize_ccw(loops[0]);
            }
            d.cells.push_back(std::move(c));
        }
    }
    return d;
}

// ---------------------------------------------------------------------------
// Exposed corners
// ---------------------------------------------------------------------------

std::vector<ExposedCorner> find_exposed_corners(const Decomposition& d,
                                                const std::vector<int>& support_cell_ids) {
    if (support_cell_ids.empty()) throw std::invalid_argument("empty support");
    std::set<int> support(support_cell_ids.begin(), support_cell_ids.end());
    for (int id : support)
        if (id < 0 || id >= static_cast<int>(d.cells.size()))
            throw std::invalid_argument("support cell id out of range");

    struct Key {
        std::int64_t x, y;
        bool operator<(const Key& o) const { return x != o.x ? x < o.x : y < o.y; }
    };
    auto key = [](Vec2 p) {
        return Key{std::llround(p.x * 1e9), std::llround(p.y * 1e9)};
    };

    std::map<Key, std::vector<std::pair<int, std::size_t>>> incidence;  // (cell, vertex idx)
    for (int id : support) {
        const Cell& c = d.cells[static_cast<std::size_t>(id)];
        for (std::size_t i = 0; i < c.vertices.size(); ++i)
            incidence[key(c.vertices[i])].push_back({id, i});
    }

    std::vector<ExposedCorner> out;
    for (const auto& [k, inc] : incidence) {
        if (inc.size() != 1) continue;
        const auto [cell_id, vidx] = inc[0];
        const Cell& cell = d.cells[static_cast<std::size_t>(cell_id)];
        const Vec2 v = cell.vertices[vidx];
        if (d.on_domain_boundary(v, 1e-9)) continue;
        // angle coverage over the support at v (vertex wedges + pi for edge hits)
        double coverage = 0.0;
        for (int id : support) {
            const Cell& c = d.cells[static_cast<std::size_t>(id)];
            const std::size_t n = c.vertices.size();
            bool at_vertex = false;
            for (std::size_t i = 0; i < n; ++i) {
                if ((c.vertices[i] - v).norm() <= 1e-9) {
                    coverage += interior_angle(c.vertices, i);
                    at_vertex = true;
                    break;
                }
            }
            if (at_vertex) continue;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec2 a = c.vertices[i], b = c.vertices[(i + 1) % n];
                if (point_segment_distance(v, a, b) <= 1e-9 && (v - a).norm() > 1e-9 &&
                    (v - b).norm() > 1e-9) {
                    coverage += M_PI;
                    break;
                }
            }
        }
        if (coverage >= 2.0 * M_PI - 1e-6) continue;  // interior to the support union

        ExposedCorner ec;
        ec.point = v;
        ec.cell_id = cell_id;
        ec.corner_angle = interior_angle(cell.vertices, vidx);
        const std::size_t n = cell.vertices.size();
        Vec2 eprev = cell.vertices[(vidx + n - 1) % n] - v;
        Vec2 enext = cell.vertices[(vidx + 1) % n] - v;
        Vec2 bis = (1.0 / std::max(eprev.norm(), 1e-300)) * eprev +
                   (1.0 / std::max(enext.norm(), 1e-300)) * enext;
        const bool lower = bis.y >= -1e-12;
        const bool left = bis.x >= 0.0;
        ec.corner_role = lower ? (left ? CornerRole::lower_left : CornerRole::lower_right)
                               : (left ? CornerRole::upper_left : CornerRole::upper_right);
        out.push_back(ec);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Shared corners & rationality heuristic
// ---------------------------------------------------------------------------

std::optional<std::pair<long long, long long>> rational_within(double x, long long max_den,
                                                               double tol) {
    // continued-fraction convergents of x
    double v = x;
    long long p0 = 1, q0 = 0, p1 = static_cast<long long>(std::floor(v)), q1 = 1;
    if (std::abs(x - static_cast<double>(p1)) <= tol) return std::make_pair(p1, 1ll);
    for (int it = 0; it < 64; ++it) {
        const double frac = v - std::floor(v);
        if (frac < 1e-15) break;
        v = 1.0 / frac;
        const long long a = static_cast<long long>(std::floor(v));
        const long long p2 = a * p1 + p0;
        const long long q2 = a * q1 + q0;
        if (q2 > max_den) break;
        p0 = p1; q0 = q1; p1 = p2; q1 = q2;
        if (std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol)
            return std::make_pair(p1, q1);
    }
    if (q1 <= max_den && std::abs(x - static_cast<double>(p1) / static_cast<double>(q1)) <= tol)
        return std::make_pair(p1, q1);
    return std::nullopt;
}

SharedCornerReport shared_corner_test(const Decomposition& bg, const Decomposition& pert,
                                      double tol) {
    if (std::abs(bg.frame.theta - pert.frame.theta) > 1e-12)
        throw std::invalid_argument("decompositions must share the frame");
    SharedCornerReport rep;
    rep.ratio = pert.r / bg.r;
    if (auto pq = rational_within(rep.ratio, 64, 1e-9)) {
        rep.rational_flag = true;
        rep.num = pq->first;
        rep.den = pq->second;
    }
    std::set<std::pair<std::int64_t, std::int64_t>> seen;
    for (const Cell& pc : pert.cells) {
        for (const Vec2& v : pc.vertices) {
            const auto k = std::make_pair(std::llround(v.x * 1e9), std::llround(v.y * 1e9));
            if (!seen.insert(k).second) continue;
            if (bg.on_domain_boundary(v, tol)) continue;
            for (const Cell& bc : bg.cells) {
                bool vertex_hit = false, edge_hit = false;
                for (const Vec2& w : bc.vertices)
                    if ((v - w).norm() <= tol) { vertex_hit = true; break; }
                if (!vertex_hit) {
                    const std::size_t n = bc.vertices.size();
                    for (std::size_t i = 0; i < n; ++i) {
                        const Vec2 a = bc.vertices[i], b = bc.vertices[(i + 1) % n];
                        if (point_segment_distance(v, a, b) <= tol && (v - a).norm() > tol &&
                            (v - b).norm() > tol) {
                            edge_hit = true;
                            break;
                        }
                    }
                }
                if (vertex_hit || edge_hit)
                    rep.hits.push_back({pc.id, v, bc.id, edge_hit});
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Domain extension
// ---------------------------------------------------------------------------

namespace {

Decomposition extend_parallelogram(const Decomposition& d, int layers) {
    Decomposition e = d;
    for (int layer = 0; layer < layers; ++layer) {
        const double r = e.r;
        const double lo_s = e.cuts_s.front(), hi_s = e.cuts_s.back();
        const double lo_t = e.cuts_t.front(), hi_t = e.cuts_t.back();
        std::vector<double> ns = e.cuts_s, nt = e.cuts_t;
        ns.insert(ns.begin(), lo_s - r);
        ns.push_back(hi_s + r);
        nt.insert(nt.begin(), lo_t - r);
        nt.push_back(hi_t + r);
        auto add_ring_cell = [&](double s0, double s1, double t0, double t1) {
            Cell c;
            c.id = static_cast<int>(e.cells.size());
            const bool sq = std::abs((s1 - s0) - (t1 - t0)) <= kSnap;
            c.kind = sq ? CellKind::rhombus : CellKind::parallelogram_remainder;
            c.s0 = s0; c.s1 = s1; c.t0 = t0; c.t1 = t1;
            c.vertices = canonicalize_ccw({e.frame.embed(s0, t0), e.frame.embed(s1, t0),
                                           e.frame.embed(s1, t1), e.frame.embed(s0, t1)});
            c.convex_parts = {c.vertices};
            e.cells.push_back(std::move(c));
        };
        for (std::size_t i = 0; i + 1 < ns.size(); ++i) {
            add_ring_cell(ns[i], ns[i + 1], nt.front(), lo_t);       // bottom strip
            add_ring_cell(ns[i], ns[i + 1], hi_t, nt.back());        // top strip
        }
        for (std::size_t j = 1; j + 2 < nt.size(); ++j) {
            add_ring_cell(ns.front(), lo_s, nt[j], nt[j + 1]);       // left strip
            add_ring_cell(hi_s, ns.back(), nt[j], nt[j + 1]);        // right strip
        }
        e.cuts_s = ns;
        e.cuts_t = nt;
        e.boundary = {e.frame.embed(ns.front(), nt.front()), e.frame.embed(ns.back(), nt.front()),
                      e.frame.embed(ns.back(), nt.back()), e.frame.embed(ns.front(), nt.back())};
        e.sigma = {{e.frame.embed(ns.back(), nt.front()), e.frame.embed(ns.front(), nt.front())},
                   {e.frame.embed(ns.front(), nt.front()), e.frame.embed(ns.front(), nt.back())}};
    }
    return e;
}

Decomposition extend_trapezoid(const Decomposition& d, int layers) {
    Decomposition e = d;
    for (int layer = 0; layer < layers; ++layer) {
        const TrapezoidDomain& dom = *e.domain;
        const double c = std::cos(dom.theta), s = std::sin(dom.theta);
        const double B = 1.0 + 2.0 * c;
        // extension must exceed the stair offset q to bury the old corners
        const double ext = 1.5 * dom.q;
        (void)c;
        (void)B;
        TrapezoidDomain nd = dom;
        for (auto& b : nd.bigs) {
            b.lam_lo -= ext;
            b.lam_hi += ext;
        }
        // flank trapezoids continuing the staircase pattern on both sides;
        // tall enough to cover the outer lateral edges of their neighbors
        {
            TrapezoidDomain::Big b =
                pattern_big(nd.bigs.front().pattern_index - 1, dom.theta, dom.q);
            b.lam_lo = nd.bigs.front().lam_lo;
            b.lam_hi = nd.bigs.front().lam_hi + dom.q;
            nd.bigs.insert(nd.bigs.begin(), b);
        }
        {
            TrapezoidDomain::Big b =
                pattern_big(nd.bigs.back().pattern_index + 1, dom.theta, dom.q);
            b.lam_lo = nd.bigs.back().lam_lo - dom.q;
            b.lam_hi = nd.bigs.back().lam_hi;
            nd.bigs.push_back(b);
        }
        // validity: every extended trapezoid keeps positive width
        for (const auto& b : nd.bigs) {
            if (b.width_at(b.lam_lo) <= 1e-9 || b.width_at(b.lam_hi) <= 1e-9)
                throw std::invalid_argument(
                    "extend_domain: extension degenerates a trapezoid (theta too extreme)");
        }
        walk_trapezoid_boundary(nd);
        // extension cells: bottom/top slices of the old trapezoids, full flanks
        std::vector<Cell> add;
        for (std::size_t i = 0; i < dom.bigs.size(); ++i) {
            const auto& nb = nd.bigs[i + 1];
            const auto& ob = dom.bigs[i];
            const CellKind kind =
                nb.inverted ? CellKind::inverted_trapezoid : CellKind::trapezoid;
            add.push_back(make_slice_cell(nb, static_cast<int>(i + 1), nb.lam_lo, ob.lam_lo, kind));
            add.push_back(make_slice_cell(nb, static_cast<int>(i + 1), ob.lam_hi, nb.lam_hi, kind));
        }
        add.push_back(make_slice_cell(nd.bigs.front(), 0, nd.bigs.front().lam_lo,
                                      nd.bigs.front().lam_hi,
                                      nd.bigs.front().inverted ? CellKind::inverted_trapezoid
                                                               : CellKind::trapezoid));
        add.push_back(make_slice_cell(nd.bigs.back(), static_cast<int>(nd.bigs.size()) - 1,
                                      nd.bigs.back().lam_lo, nd.bigs.back().lam_hi,
                                      nd.bigs.back().inverted ? CellKind::inverted_trapezoid
                                                              : CellKind::trapezoid));
        // reindex parents of existing cells (+1 for the new left flank)
        for (Cell& cell : e.cells)
            if (cell.parent >= 0) cell.parent += 1;
        for (Cell& cell : add) {
            cell.id = static_cast<int>(e.cells.size());
            e.cells.push_back(cell);
        }
        e.domain = std::make_shared<TrapezoidDomain>(nd);
        e.boundary = nd.boundary;
        e.sigma = nd.sigma;
    }
    return e;
}

}  // namespace

Decomposition extend_domain(const Decomposition& d, int layers) {
    if (layers < 0) throw std::invalid_argument("layers must be >= 0");
    if (layers == 0) return d;
    switch (d.kind) {
        case DecompKind::parallelogram: return extend_parallelogram(d, layers);
        case DecompKind::trapezoid: return extend_trapezoid(d, layers);
        case DecompKind::lateral:
            throw std::invalid_argument(
                "extend the perturbation tiling; rebuild the background on the extended domain");
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string Decomposition::to_json() const {
    std::ostringstream os;
    os << "{\"frame\":{\"theta\":" << fmt_g17(frame.theta) << "},";
    os << "\"kind\":\"" << decomp_kind_name(kind) << "\",";
    os << "\"r\":" << fmt_g17(r) << ",";
    os << "\"shift\":" << fmt_g17(shift) << ",";
    os << "\"cells\":[";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const Cell& c = cells[i];
        if (i) os << ",";
        os << "{\"id\":" << c.id << ",\"kind\":\"" << cell_kind_name(c.kind)
           << "\",\"vertices\":[";
        for (std::size_t j = 0; j < c.vertices.size(); ++j) {
            if (j) os << ",";
            os << "[" << fmt_g17(c.vertices[j].x) << "," << fmt_g17(c.vertices[j].y) << "]";
        }
        os << "]}";
    }
    os << "],\"sigma\":[";
    for (std::size_t i = 0; i < sigma.size(); ++i) {
        if (i) os << ",";
        os << "[[" << fmt_g17(sigma[i].a.x) << "," << fmt_g17(sigma[i].a.y) << "],["
           << fmt_g17(sigma[i].b.x) << "," << fmt_g17(sigma[i].b.y) << "]]";
    }
    os << "]}";
    return os.str();
}

}  // namespace eit
