#pragma once

// Test-only oracles, kept independent of the implementation paths they check.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

#include "eitcorner/conductivity.hpp"
#include "eitcorner/corner.hpp"
#include "eitcorner/decomposition.hpp"

namespace eit::oracle {

// Midpoint rule on the ruled parametrization of the corner trapezoid
// (smooth integrand away from eta, second-order convergent).
inline double corner_integral_midpoint(const AnisoTensor& H, const CornerDomain& dom, Vec2 eta,
                                       int n) {
    const bool dbl = dom.mode == CornerDomain::Mode::double_corner;
    double y2max = dom.epsilon;
    if (!dbl && dom.k > 1.0) y2max = dom.epsilon / dom.k;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const double t = (i + 0.5) / n;
        const double y2 = y2max * t;
        const double lo = dom.k * y2;
        const double hi = dbl ? dom.z1 - dom.k * y2 : dom.epsilon;
        const double jac = y2max * (hi - lo);
        for (int j = 0; j < n; ++j) {
            const double u = (j + 0.5) / n;
            const double y1 = lo + (hi - lo) * u;
            const double tt = y1 - eta.x, ss = y2 - eta.y;
            const double r2 = tt * tt + ss * ss;
            acc += jac * (H.m11 * tt * tt + 2.0 * H.m12 * tt * ss + H.m22 * ss * ss) / (r2 * r2);
        }
    }
    return acc / (static_cast<double>(n) * n);
}

// Brute-force recount of exposed corners: vertex incidence over the support
// plus a dense angular probe of local coverage.
inline int count_exposed(const Decomposition& d, const std::vector<int>& support, Vec2 v) {
    int owners = 0;
    for (int id : support) {
        const Cell& c = d.cells[static_cast<std::size_t>(id)];
        for (const Vec2& w : c.vertices)
            if ((w - v).norm() < 1e-9) ++owners;
    }
    if (owners != 1) return 0;
    if (d.on_domain_boundary(v, 1e-9)) return 0;
    // probe a small circle: exposed means some direction leaves the support
    const double rad = 1e-6;
    bool outside_somewhere = false;
    for (int k = 0; k < 720; ++k) {
        const double a = 2.0 * M_PI * k / 720.0;
        const Vec2 p = v + Vec2{rad * std::cos(a), rad * std::sin(a)};
        bool covered = false;
        for (int id : support)
            if (d.cells[static_cast<std::size_t>(id)].contains(p, 1e-12)) {
                covered = true;
                break;
            }
        if (!covered) {
            outside_somewhere = true;
            break;
        }
    }
    return outside_somewhere ? 1 : 0;
}

// 7-point degree-5 rule over a triangle
inline double tri_quad(const Vec2& a, const Vec2& b, const Vec2& c,
                       const std::function<double(Vec2)>& f) {
    static const double w0 = 9.0 / 40.0;
    static const double w1 = (155.0 - std::sqrt(15.0)) / 1200.0;
    static const double w2 = (155.0 + std::sqrt(15.0)) / 1200.0;
    static const double g1 = (6.0 - std::sqrt(15.0)) / 21.0;
    static const double g2 = (6.0 + std::sqrt(15.0)) / 21.0;
    struct P { double l1, l2, l3, w; };
    const P pts[7] = {{1.0 / 3, 1.0 / 3, 1.0 / 3, w0},
                      {g1, g1, 1 - 2 * g1, w1}, {g1, 1 - 2 * g1, g1, w1}, {1 - 2 * g1, g1, g1, w1},
                      {g2, g2, 1 - 2 * g2, w2}, {g2, 1 - 2 * g2, g2, w2}, {1 - 2 * g2, g2, g2, w2}};
    const double area = 0.5 * std::abs((b - a).cross(c - a));
    double acc = 0.0;
    for (const P& p : pts) acc += p.w * f(p.l1 * a + p.l2 * b + p.l3 * c);
    return 2.0 * area * acc;
}

}  // namespace eit::oracle
