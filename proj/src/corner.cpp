#include "eitcorner/corner.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "eitcorner/io_util.hpp"

namespace eit {

CornerReduction corner_reduction(const AnisoTensor& g, double theta) {
    if (g.min_eigenvalue() <= 0.0)
        throw std::invalid_argument("corner_reduction needs a positive definite tensor");
    CornerReduction red;
    red.theta = theta;
    red.k = std::cos(theta) / std::sin(theta);

    // eigenpairs; assign d1 to the eigenvector closest to e1
    const auto [lo, hi] = g.eigenvalues();
    Vec2 v_lo, v_hi;
    if (std::abs(g.m12) < 1e-15 * (std::abs(g.m11) + std::abs(g.m22) + 1e-300)) {
        if (g.m11 <= g.m22) { v_lo = {1, 0}; v_hi = {0, 1}; }
        else { v_lo = {0, 1}; v_hi = {1, 0}; }
    } else {
        v_lo = {g.m12, lo - g.m11};
        v_hi = {g.m12, hi - g.m11};
        v_lo = (1.0 / v_lo.norm()) * v_lo;
        v_hi = (1.0 / v_hi.norm()) * v_hi;
    }
    Vec2 v1 = (std::abs(v_lo.x) >= std::abs(v_hi.x)) ? v_lo : v_hi;
    red.d1 = (std::abs(v_lo.x) >= std::abs(v_hi.x)) ? lo : hi;
    red.d2 = (red.d1 == lo) ? hi : lo;
    if (v1.x < 0 || (v1.x == 0.0 && v1.y < 0)) v1 = -v1;
    // gamma0 = R_psi^T D R_psi with the d1-eigenvector (cos psi, -sin psi)
    red.psi = std::atan2(-v1.y, v1.x);
    if (red.psi <= 0.0) red.psi += 2.0 * M_PI;

    const double s1 = 1.0 / std::sqrt(red.d1), s2 = 1.0 / std::sqrt(red.d2);
    const double cp = std::cos(red.psi), sp = std::sin(red.psi);
    const Vec2 u{s1 * cp, s2 * sp};                      // D^{-1/2} R_psi e1
    const Vec2 w{-s1 * sp, s2 * cp};                     // D^{-1/2} R_psi e2
    const Vec2 v2{s1 * (red.k * cp - sp), s2 * (red.k * sp + cp)};  // D^{-1/2} R_psi (k,1)
    red.d = u.norm();
    red.varphi = std::atan2(u.y, u.x);
    const double d2_ = red.d * red.d;
    red.a = u.dot(w) / d2_;
    red.b = u.cross(w) / d2_;  // = (d1 d2)^{-1/2} / d^2
    const double cross = u.cross(v2);
    if (cross <= 0.0) throw std::runtime_error("corner transform lost orientation");
    red.k_tilde = u.dot(v2) / cross;
    red.p = -0.5 * red.a * red.a + 0.5 * red.b * red.b + red.k_tilde * red.a * red.b + 0.5;
    red.q_det = red.a - red.k_tilde * red.b;
    red.alpha = std::atan2(red.q_det, red.p);
    return red;
}

double determinant_condition(const CornerReduction& red, double phi) {
    return red.p * std::sin(2.0 * phi) + red.q_det * std::cos(2.0 * phi);
}

std::array<std::array<double, 2>, 2> condition_system(const CornerReduction& red, double phi) {
    const double s2 = std::sin(2.0 * phi);
    const double sinp = std::sin(phi), cosp = std::cos(phi);
    const double ab2 = red.a * red.a + red.b * red.b;
    const double akb = red.a - red.k_tilde * red.b;
    return {{{cosp * cosp - red.a * s2 + ab2 * sinp * sinp,
              sinp * sinp + red.a * s2 + ab2 * cosp * cosp},
             {-0.5 * s2 + akb * sinp * sinp, 0.5 * s2 + akb * cosp * cosp}}};
}

TrapezoidAngleCheck trapezoid_angle_condition(const AnisoTensor& g, double theta) {
    if (g.min_eigenvalue() <= 0.0)
        throw std::invalid_argument("trapezoid_angle_condition needs an SPD tensor");
    const AnisoTensor gi = g.inverse();
    const Vec2 gie1 = gi.apply({1.0, 0.0});
    const double k = std::cos(theta) / std::sin(theta);
    TrapezoidAngleCheck out;
    out.value = gie1.dot({k, 1.0});
    out.mirrored_value = gie1.dot({-k, 1.0});
    const double scale = gie1.norm() * (1.0 + std::abs(k));
    out.pass = std::abs(out.value) > 1e-14 * scale && std::abs(out.mirrored_value) > 1e-14 * scale;
    return out;
}

// ---------------------------------------------------------------------------
// Corner integral
// ---------------------------------------------------------------------------

CornerDomain CornerDomain::single(double epsilon, double k) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    CornerDomain d;
    d.mode = Mode::single;
    d.epsilon = epsilon;
    d.k = k;
    return d;
}

CornerDomain CornerDomain::double_corner(double epsilon, double theta, double z1) {
    if (!(epsilon > 0.0) || !(z1 > 0.0)) throw std::invalid_argument("bad double-corner domain");
    if (std::abs(theta - M_PI_2) <= 1e-12)
        throw std::invalid_argument("theta = pi/2 excluded (Lemma hypothesis)");
    CornerDomain d;
    d.mode = Mode::double_corner;
    d.epsilon = epsilon;
    d.k = std::cos(theta) / std::sin(theta);
    d.z1 = z1;
    if (d.k > 0.0 && z1 - 2.0 * d.k * epsilon <= 0.0)
        throw std::invalid_argument("double-corner trapezoid degenerates: shrink epsilon");
    return d;
}

bool CornerDomain::contains(Vec2 y, double tol) const {
    if (y.y < -tol || y.y > epsilon + tol) return false;
    if (mode == Mode::single) return y.x >= k * y.y - tol && y.x <= epsilon + tol;
    return y.x >= k * y.y - tol && y.x <= z1 - k * y.y + tol;
}

namespace {

// Gauss-Legendre nodes/weights on [0,1]
constexpr int kGlo = 4, kGhi = 7;
const double kNodes4[4] = {0.069431844202973712, 0.33000947820757187, 0.66999052179242813,
                           0.93056815579702623};
const double kW4[4] = {0.17392742256872692, 0.32607257743127305, 0.32607257743127305,
                       0.17392742256872692};
const double kNodes7[7] = {0.025446043828620737, 0.12923440720030277, 0.29707742431130141,
                           0.5,                  0.70292257568869853, 0.87076559279969718,
                           0.97455395617137929};
const double kW7[7] = {0.064742483084434846, 0.13985269574463833, 0.19091502525255946,
                       0.20897959183673470,  0.19091502525255946, 0.13985269574463833,
                       0.064742483084434846};

struct MappedRegion {
    // y2 = y2max * t ; y1 = lo(y2) + (hi(y2) - lo(y2)) * u
    double y2max = 0.0;
    double k = 0.0;
    double eps = 0.0;
    double z1 = 0.0;
    bool double_mode = false;
    double lo(double y2) const { return k * y2; }
    double hi(double y2) const { return double_mode ? z1 - k * y2 : eps; }
};

MappedRegion make_region(const CornerDomain& dom) {
    MappedRegion r;
    r.k = dom.k;
    r.eps = dom.epsilon;
    r.z1 = dom.z1;
    r.double_mode = dom.mode == CornerDomain::Mode::double_corner;
    r.y2max = dom.epsilon;
    if (!r.double_mode && dom.k > 1.0) r.y2max = dom.epsilon / dom.k;  // triangle tip
    return r;
}

double integrand(const AnisoTensor& H, Vec2 y, Vec2 eta) {
    const double t = y.x - eta.x, s = y.y - eta.y;
    const double r2 = t * t + s * s;
    return (H.m11 * t * t + 2.0 * H.m12 * t * s + H.m22 * s * s) / (r2 * r2);
}

struct Panel {
    double t0, t1, u0, u1;
    double val = 0.0, err = 0.0;
    double dist = 0.0, diam = 0.0;
    std::size_t id = 0;
};

template <int N>
double panel_rule(const MappedRegion& reg, const AnisoTensor& H, Vec2 eta, const Panel& p,
                  const double* nodes, const double* wts) {
    double acc = 0.0;
    for (int i = 0; i < N; ++i) {
        const double t = p.t0 + (p.t1 - p.t0) * nodes[i];
        const double y2 = reg.y2max * t;
        const double lo = reg.lo(y2), hi = reg.hi(y2);
        const double jac = reg.y2max * (hi - lo);
        double inner = 0.0;
        for (int j = 0; j < N; ++j) {
            const double u = p.u0 + (p.u1 - p.u0) * nodes[j];
            const double y1 = lo + (hi - lo) * u;
            inner += wts[j] * integrand(H, {y1, y2}, eta);
        }
        acc += wts[i] * inner * jac;
    }
    return acc * (p.t1 - p.t0) * (p.u1 - p.u0);
}

void panel_geometry(const MappedRegion& reg, Vec2 eta, Panel& p) {
    // conservative distance from eta to the mapped quadrilateral
    Vec2 c[4];
    int idx = 0;
    for (double t : {p.t0, p.t1})
        for (double u : {p.u0, p.u1}) {
            const double y2 = reg.y2max * t;
            const double lo = reg.lo(y2), hi = reg.hi(y2);
            c[idx++] = {lo + (hi - lo) * u, y2};
        }
    double diam = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) diam = std::max(diam, (c[i] - c[j]).norm());
    double dmin = 1e300;
    dmin = std::min(dmin, point_segment_distance(eta, c[0], c[1]));
    dmin = std::min(dmin, point_segment_distance(eta, c[1], c[3]));
    dmin = std::min(dmin, point_segment_distance(eta, c[3], c[2]));
    dmin = std::min(dmin, point_segment_distance(eta, c[2], c[0]));
    p.diam = diam;
    p.dist = dmin;
}

}  // namespace

double corner_integral_quadrature(const AnisoTensor& H, const CornerDomain& dom, Vec2 eta,
                                  const QuadratureOptions& opt) {
    if (dom.contains(eta, 1e-15)) throw std::invalid_argument("eta must lie outside T");
    const double hnorm = H.spectral_norm();
    if (hnorm == 0.0) return 0.0;
    const MappedRegion reg = make_region(dom);

    auto eval_panel = [&](Panel& p) {
        p.val = panel_rule<kGhi>(reg, H, eta, p, kNodes7, kW7);
        const double coarse = panel_rule<kGlo>(reg, H, eta, p, kNodes4, kW4);
        p.err = std::abs(p.val - coarse);
        panel_geometry(reg, eta, p);
    };

    auto cmp = [](const Panel& x, const Panel& y) {
        if (x.err != y.err) return x.err < y.err;
        return x.id > y.id;  // deterministic tie-break
    };
    std::priority_queue<Panel, std::vector<Panel>, decltype(cmp)> queue(cmp);
    std::size_t evals = 0, next_id = 0;
    Panel root{0.0, 1.0, 0.0, 1.0};
    root.id = next_id++;
    eval_panel(root);
    evals += kGhi * kGhi + kGlo * kGlo;
    queue.push(root);
    double total = root.val, total_err = root.err;

    while (true) {
        const double scale = std::max({std::abs(total), hnorm, 1e-12});
        if (total_err <= opt.rel_tol * scale) {
            // also require the worst panel to be resolved against eta
            const Panel& top = queue.top();
            if (!(top.diam > 0.6 * top.dist && top.diam > 1e-13)) break;
        }
        if (evals > opt.max_evals)
            throw std::runtime_error("corner_integral_quadrature: tolerance not met");
        Panel top = queue.top();
        queue.pop();
        total -= top.val;
        total_err -= top.err;
        const double tm = 0.5 * (top.t0 + top.t1), um = 0.5 * (top.u0 + top.u1);
        const Panel children[4] = {{top.t0, tm, top.u0, um},
                                   {tm, top.t1, top.u0, um},
                                   {top.t0, tm, um, top.u1},
                                   {tm, top.t1, um, top.u1}};
        for (Panel ch : children) {
            ch.id = next_id++;
            eval_panel(ch);
            evals += kGhi * kGhi + kGlo * kGlo;
            // force refinement of panels large relative to their distance to eta
            if (ch.diam > 0.6 * ch.dist && ch.diam > 1e-13) ch.err = std::max(ch.err, 1e280);
            total += ch.val;
            total_err += ch.err;
            queue.push(ch);
        }
    }
    return total;
}

ClosedFormCoefs corner_integral_closed_form(const AnisoTensor& H, const CornerDomain& dom,
                                            Vec2 eta) {
    if (dom.mode != CornerDomain::Mode::single)
        throw std::invalid_argument("closed form applies to the single-corner trapezoid");
    if (!(eta.y < 0.0)) throw std::invalid_argument("closed form needs eta2 < 0");
    const double h11 = H.m11, h12 = H.m12, h22 = H.m22;
    const double eps = dom.epsilon, k = dom.k;
    const double e1 = eta.x, e2 = eta.y;
    auto f1 = [](double x) { return std::atan(x); };
    auto f2 = [](double x) { return x / (1.0 + x * x); };
    auto f3 = [](double x) { return 1.0 / (1.0 + x * x); };
    const double T0 = e1 / e2;
    const double T1 = (eps - e1) / (-e2);
    const double T2 = (k * eps - e1) / (eps - e2);
    ClosedFormCoefs out;
    out.coef_log_eta2 = 0.5 * (h11 + h22) * (f1(T1) - f1(T0)) -
                        0.5 * (h11 - h22) * (f2(T1) - f2(T0)) - h12 * (f3(T1) - f3(T0));
    out.coef_log_eta1k = 0.5 * (h11 + h22) * (f1(T2) - f1(T0)) -
                         0.5 * (h11 - h22) * (f2(T2) - f2(T0)) - h12 * (f3(T2) - f3(T0));
    // crude bound for the O(1) remainder of the expansion
    out.remainder_bound =
        H.spectral_norm() * (6.0 + 2.0 * std::abs(std::log(eps)) + 2.0 * std::log(2.0 + std::abs(k)));
    return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_slope: bad input");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
}

Lemma41Result lemma41_extract(const AnisoTensor& H, const CornerDomain& dom, bool numeric) {
    if (dom.mode != CornerDomain::Mode::single)
        throw std::invalid_argument("lemma41_extract needs single mode");
    Lemma41Result res;
    const double hnorm = std::max(H.spectral_norm(), 1e-300);
    res.cond1_value = H.m11 + H.m22;
    res.cond2_value = dom.k * H.m11 + H.m12;
    res.cond1_ok = std::abs(res.cond1_value) <= 1e-12 * hnorm;
    res.cond2_ok = std::abs(res.cond2_value) <= 1e-12 * hnorm * std::max(1.0, std::abs(dom.k));
    res.bounded = res.cond1_ok && res.cond2_ok;
    if (!numeric) return res;
    res.numeric_run = true;

    // path 1: eta1 = eps/2 fixed, eta2 in [-1e-2, -1e-5]
    const int per_decade = 12, decades = 3;
    std::vector<double> xs, ys;
    for (int i = 0; i <= per_decade * decades; ++i) {
        const double e2 = -1e-2 * std::pow(10.0, -static_cast<double>(i) / per_decade);
        const double val = corner_integral_quadrature(H, dom, {0.5 * dom.epsilon, e2});
        xs.push_back(std::log(1.0 / std::abs(e2)));
        ys.push_back(val);
    }
    res.slope_path1 = fit_slope(xs, ys);
    res.total_variation_path1 = 0.0;
    for (std::size_t i = 0; i + 1 < ys.size(); ++i)
        res.total_variation_path1 += std::abs(ys[i + 1] - ys[i]);

    // path 2: eta2 = -rho * eta1, eta1 -> +0
    const double rho = 1e-3;
    xs.clear();
    ys.clear();
    for (int i = 0; i <= per_decade * decades; ++i) {
        const double e1 = 1e-2 * std::pow(10.0, -static_cast<double>(i) / per_decade);
        const double val = corner_integral_quadrature(H, dom, {e1, -rho * e1});
        xs.push_back(std::log(1.0 / e1));
        ys.push_back(val);
    }
    res.slope_path2 = fit_slope(xs, ys);
    const double thresh = 0.05 * M_PI * hnorm;
    res.bounded_numeric =
        std::abs(res.slope_path1) < thresh && std::abs(res.slope_path2) < thresh;
    return res;
}

Lemma42Result lemma42_extract(const AnisoTensor& H, const CornerDomain& dom) {
    if (dom.mode != CornerDomain::Mode::double_corner)
        throw std::invalid_argument("lemma42_extract needs double mode");
    if (std::abs(dom.k) < 1e-12)
        throw std::invalid_argument("theta = pi/2 excluded (k = 0)");
    Lemma42Result res;
    const double hnorm = std::max(H.spectral_norm(), 1e-300);
    // conditions at the origin corner and, after y = A u + z1 with
    // A = diag(-1, 1), at the second corner (H -> [[h11,-h12],[-h12,h22]])
    res.residuals = {H.m11 + H.m22, dom.k * H.m11 + H.m12, dom.k * H.m11 - H.m12};
    const double tol = 1e-12 * hnorm * std::max(1.0, std::abs(dom.k));
    res.bounded = std::abs(res.residuals[0]) <= tol && std::abs(res.residuals[1]) <= tol &&
                  std::abs(res.residuals[2]) <= tol;
    res.h_zero = H.spectral_norm() <= 1e-14;
    return res;
}

std::string Lemma42Result::to_json() const {
    std::ostringstream os;
    os << "{\"residuals\":[" << fmt_g17(residuals[0]) << "," << fmt_g17(residuals[1]) << ","
       << fmt_g17(residuals[2]) << "],\"bounded\":" << (bounded ? "true" : "false")
       << ",\"h_zero\":" << (h_zero ? "true" : "false") << "}";
    return os.str();
}

}  // namespace eit
