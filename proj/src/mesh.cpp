#include "eitcorner/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "eitcorner/io_util.hpp"

namespace eit {

namespace {

std::vector<double> dedup_sorted(std::vector<double> v, double tol = 1e-12) {
    std::sort(v.begin(), v.end());
    std::vector<double> out;
    for (double x : v)
        if (out.empty() || x - out.back() > tol) out.push_back(x);
    return out;
}

// geometric grading toward each anchor, then uniform fill to the target step
std::vector<double> refine_cuts(std::vector<double> cuts, double target, bool grading,
                                int levels, double ratio) {
    cuts = dedup_sorted(std::move(cuts));
    if (grading) {
        std::vector<double> extra;
        for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
            const double a = cuts[i], b = cuts[i + 1], len = b - a;
            double f = 1.0;
            for (int l = 0; l < levels; ++l) {
                f *= ratio;
                extra.push_back(a + f * len);
                extra.push_back(b - f * len);
            }
        }
        cuts.insert(cuts.end(), extra.begin(), extra.end());
        cuts = dedup_sorted(std::move(cuts));
    }
    std::vector<double> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        const double a = cuts[i], b = cuts[i + 1];
        const int n = std::max(1, static_cast<int>(std::ceil((b - a) / target - 1e-9)));
        for (int j = 0; j < n; ++j) out.push_back(a + (b - a) * j / n);
    }
    out.push_back(cuts.back());
    return out;
}

struct NodeBank {
    std::vector<Vec2>& nodes;
    std::map<std::pair<std::int64_t, std::int64_t>, int> index;
    int get(Vec2 p) {
        const auto k = std::make_pair(std::llround(p.x * 1e9), std::llround(p.y * 1e9));
        auto it = index.find(k);
        if (it != index.end()) return it->second;
        const int id = static_cast<int>(nodes.size());
        nodes.push_back(p);
        index.emplace(k, id);
        return id;
    }
};

void add_quad(Mesh& m, int n00, int n10, int n11, int n01, int cell_id) {
    // split along the shorter diagonal
    const double d1 = (m.nodes[static_cast<std::size_t>(n00)] -
                       m.nodes[static_cast<std::size_t>(n11)]).norm2();
    const double d2 = (m.nodes[static_cast<std::size_t>(n10)] -
                       m.nodes[static_cast<std::size_t>(n01)]).norm2();
    auto push = [&](int a, int b, int c) {
        const Vec2 pa = m.nodes[static_cast<std::size_t>(a)];
        const Vec2 pb = m.nodes[static_cast<std::size_t>(b)];
        const Vec2 pc = m.nodes[static_cast<std::size_t>(c)];
        if ((pb - pa).cross(pc - pa) <= 0.0) std::swap(b, c);
        m.triangles.push_back({{a, b, c}, cell_id});
    };
    if (d1 <= d2 + 1e-15) {
        push(n00, n10, n11);
        push(n00, n11, n01);
    } else {
        push(n00, n10, n01);
        push(n10, n11, n01);
    }
}

void finalize_mesh(Mesh& m, const Decomposition& d) {
    // boundary edges = triangle edges seen once
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            int a = t.v[static_cast<std::size_t>(e)], b = t.v[static_cast<std::size_t>((e + 1) % 3)];
            if (a > b) std::swap(a, b);
            count[{a, b}]++;
        }
    }
    for (const auto& [e, c] : count) {
        if (c != 1) continue;
        Mesh::BEdge be;
        be.a = e.first;
        be.b = e.second;
        const Vec2 mid = 0.5 * (m.nodes[static_cast<std::size_t>(be.a)] +
                                m.nodes[static_cast<std::size_t>(be.b)]);
        for (const Segment& s : d.sigma)
            if (point_segment_distance(mid, s.a, s.b) <= 1e-9) {
                be.on_sigma = true;
                break;
            }
        m.boundary_edges.push_back(be);
    }
    // ordered node path along sigma
    std::vector<int> path;
    std::set<int> seen;
    for (const Segment& s : d.sigma) {
        const Vec2 dir = s.b - s.a;
        const double len2 = dir.norm2();
        std::vector<std::pair<double, int>> onseg;
        for (const Mesh::BEdge& be : m.boundary_edges) {
            if (!be.on_sigma) continue;
            for (int n : {be.a, be.b}) {
                const Vec2 p = m.nodes[static_cast<std::size_t>(n)];
                if (point_segment_distance(p, s.a, s.b) <= 1e-9)
                    onseg.push_back({(p - s.a).dot(dir) / len2, n});
            }
        }
        std::sort(onseg.begin(), onseg.end());
        for (const auto& [t, n] : onseg) {
            if (!path.empty() && path.back() == n) continue;
            if (seen.insert(n).second) path.push_back(n);
        }
    }
    m.sigma_path = path;
    // size and quality
    double h = 0.0, min_ang = M_PI;
    for (const auto& t : m.triangles) {
        const Vec2 a = m.nodes[static_cast<std::size_t>(t.v[0])];
        const Vec2 b = m.nodes[static_cast<std::size_t>(t.v[1])];
        const Vec2 c = m.nodes[static_cast<std::size_t>(t.v[2])];
        h = std::max({h, (b - a).norm(), (c - b).norm(), (a - c).norm()});
        const std::array<Vec2, 3> p{a, b, c};
        for (int i = 0; i < 3; ++i) {
            const Vec2 u = p[static_cast<std::size_t>((i + 1) % 3)] - p[static_cast<std::size_t>(i)];
            const Vec2 v = p[static_cast<std::size_t>((i + 2) % 3)] - p[static_cast<std::size_t>(i)];
            min_ang = std::min(min_ang, std::acos(std::clamp(
                                            u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0)));
        }
    }
    m.h = h;
    m.min_angle = min_ang;
}

Mesh mesh_parallelogram(const Decomposition& d, const MeshOptions& opt) {
    std::vector<double> cs = d.cuts_s, ct = d.cuts_t;
    if (opt.constraint) {
        if (opt.constraint->kind != DecompKind::parallelogram)
            throw std::invalid_argument("constraint decomposition kind mismatch");
        cs.insert(cs.end(), opt.constraint->cuts_s.begin(), opt.constraint->cuts_s.end());
        ct.insert(ct.end(), opt.constraint->cuts_t.begin(), opt.constraint->cuts_t.end());
        // clip constraint cuts to this domain
        std::erase_if(cs, [&](double x) {
            return x < d.cuts_s.front() - 1e-12 || x > d.cuts_s.back() + 1e-12;
        });
        std::erase_if(ct, [&](double x) {
            return x < d.cuts_t.front() - 1e-12 || x > d.cuts_t.back() + 1e-12;
        });
    }
    const std::vector<double> xs =
        refine_cuts(cs, opt.target_h, opt.corner_grading, opt.grading_levels, opt.grading_ratio);
    const std::vector<double> ys =
        refine_cuts(ct, opt.target_h, opt.corner_grading, opt.grading_levels, opt.grading_ratio);

    Mesh m;
    NodeBank bank{m.nodes, {}};
    std::vector<std::vector<int>> grid(xs.size(), std::vector<int>(ys.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = 0; j < ys.size(); ++j)
            grid[i][j] = bank.get(d.frame.embed(xs[i], ys[j]));
    for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const Vec2 mid = d.frame.embed(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            const int cell = d.locate(mid);
            if (cell < 0) throw std::runtime_error("mesh quad outside decomposition");
            add_quad(m, grid[i][j], grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1], cell);
        }
    }
    finalize_mesh(m, d);
    return m;
}

Mesh mesh_trapezoid(const Decomposition& d, const MeshOptions& opt) {
    const TrapezoidDomain& dom = *d.domain;
    const double s = std::sin(dom.theta);
    // global lateral cut set: all cell interfaces of this decomposition and
    // of the constraint decomposition
    std::vector<double> cuts;
    auto push_cell_cuts = [&](const Decomposition& dd) {
        for (const Cell& c : dd.cells) {
            double off = 0.0;
            if (dd.kind == DecompKind::trapezoid && c.parent >= 0)
                off = dom.bigs[static_cast<std::size_t>(c.parent)].offset;
            cuts.push_back(off + c.t0);
            cuts.push_back(off + c.t1);
        }
    };
    push_cell_cuts(d);
    if (opt.constraint) {
        if (opt.constraint->kind == DecompKind::parallelogram)
            throw std::invalid_argument("constraint decomposition kind mismatch");
        push_cell_cuts(*opt.constraint);
    }
    for (const auto& b : dom.bigs) {
        cuts.push_back(b.offset + b.lam_lo);
        cuts.push_back(b.offset + b.lam_hi);
    }
    const double target_lam = opt.target_h / s;
    const std::vector<double> lam =
        refine_cuts(cuts, target_lam, opt.corner_grading, opt.grading_levels, opt.grading_ratio);

    Mesh m;
    NodeBank bank{m.nodes, {}};
    for (std::size_t t = 0; t < dom.bigs.size(); ++t) {
        const auto& big = dom.bigs[t];
        const double glo = big.offset + big.lam_lo, ghi = big.offset + big.lam_hi;
        std::vector<double> rows;
        for (double g : lam)
            if (g > glo - 1e-12 && g < ghi + 1e-12) rows.push_back(std::clamp(g, glo, ghi));
        rows = dedup_sorted(std::move(rows));
        const double wmax = std::max(big.width_at(big.lam_lo), big.width_at(big.lam_hi));
        const int mcols = std::max(1, static_cast<int>(std::ceil(wmax / opt.target_h - 1e-9)));
        std::vector<std::vector<int>> grid(rows.size(), std::vector<int>(static_cast<std::size_t>(mcols + 1)));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double lam_local = rows[i] - big.offset;
            const Vec2 L = big.left_at(lam_local), R = big.right_at(lam_local);
            for (int j = 0; j <= mcols; ++j)
                grid[i][static_cast<std::size_t>(j)] =
                    bank.get(L + (static_cast<double>(j) / mcols) * (R - L));
        }
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            const double lam_mid = 0.5 * (rows[i] + rows[i + 1]) - big.offset;
            const Vec2 Lm = big.left_at(lam_mid), Rm = big.right_at(lam_mid);
            for (int j = 0; j < mcols; ++j) {
                const Vec2 mid = Lm + ((j + 0.5) / mcols) * (Rm - Lm);
                const int cell = d.locate(mid);
                if (cell < 0) throw std::runtime_error("mesh quad outside decomposition");
                add_quad(m, grid[i][static_cast<std::size_t>(j)],
                         grid[i][static_cast<std::size_t>(j + 1)],
                         grid[i + 1][static_cast<std::size_t>(j + 1)],
                         grid[i + 1][static_cast<std::size_t>(j)], cell);
            }
        }
    }
    finalize_mesh(m, d);
    return m;
}

}  // namespace

Mesh triangulate(const Decomposition& d, const MeshOptions& opt) {
    if (!(opt.target_h > 0.0)) throw std::invalid_argument("target_h must be positive");
    Mesh m = (d.kind == DecompKind::parallelogram) ? mesh_parallelogram(d, opt)
                                                   : mesh_trapezoid(d, opt);
    return m;
}

double Mesh::tri_area(std::size_t t) const {
    const Vec2 a = nodes[static_cast<std::size_t>(triangles[t].v[0])];
    const Vec2 b = nodes[static_cast<std::size_t>(triangles[t].v[1])];
    const Vec2 c = nodes[static_cast<std::size_t>(triangles[t].v[2])];
    return 0.5 * (b - a).cross(c - a);
}

std::string Mesh::to_ascii() const {
    std::ostringstream os;
    os << "$nodes " << nodes.size() << "\n";
    for (std::size_t i = 0; i < nodes.size(); ++i)
        os << i << " " << fmt_g17(nodes[i].x) << " " << fmt_g17(nodes[i].y) << "\n";
    os << "$triangles " << triangles.size() << "\n";
    for (std::size_t i = 0; i < triangles.size(); ++i)
        os << i << " " << triangles[i].v[0] << " " << triangles[i].v[1] << " " << triangles[i].v[2]
           << " " << triangles[i].cell_id << "\n";
    os << "$boundary " << boundary_edges.size() << "\n";
    for (const auto& e : boundary_edges) os << e.a << " " << e.b << " " << (e.on_sigma ? 1 : 0) << "\n";
    return os.str();
}

}  // namespace eit
