#pragma once

#include <array>
#include <string>
#include <vector>

#include "eitcorner/conductivity.hpp"

namespace eit {

// Derived quantities of the corner transformation chain for a background
// tensor frozen at an exposed corner with interior angle theta.
struct CornerReduction {
    double psi = 0.0;       // rotation angle of the eigenframe, in (0, 2*pi]
    double d1 = 0.0, d2 = 0.0;
    double d = 0.0;         // |D^{-1/2} R_psi e1|
    double varphi = 0.0;    // angle of D^{-1/2} R_psi e1
    double a = 0.0, b = 0.0;
    double k = 0.0;         // cot(theta)
    double k_tilde = 0.0;   // cot of the transformed corner angle
    double p = 0.0, q_det = 0.0;
    double alpha = 0.0;     // atan2(q, p), in (-pi, pi]
    double theta = 0.0;
};

CornerReduction corner_reduction(const AnisoTensor& gamma0_at_corner, double theta);

// p*sin(2*phi) + q*cos(2*phi) == sqrt(p^2+q^2)*sin(2*phi+alpha)
double determinant_condition(const CornerReduction& red, double phi);

// 2x2 coefficient matrix over (h1, h2); its determinant equals
// determinant_condition for every phi.
std::array<std::array<double, 2>, 2> condition_system(const CornerReduction& red, double phi);

struct TrapezoidAngleCheck {
    double value = 0.0;           // <gamma0^{-1} e1, (cot theta, 1)>
    double mirrored_value = 0.0;  // same with cot(pi - theta)
    bool pass = false;
};
TrapezoidAngleCheck trapezoid_angle_condition(const AnisoTensor& gamma0_cell, double theta);

struct CornerDomain {
    enum class Mode { single, double_corner };
    Mode mode = Mode::single;
    double epsilon = 0.0;  // trapezoid size
    double k = 0.0;        // slant parameter (cot of the corner angle)
    double z1 = 0.0;       // second-corner abscissa (double mode)

    static CornerDomain single(double epsilon, double k);
    static CornerDomain double_corner(double epsilon, double theta, double z1);
    bool contains(Vec2 y, double tol = 0.0) const;
};

struct QuadratureOptions {
    double rel_tol = 1e-8;
    std::size_t max_evals = 10000000;
};

// I(eta) = ∫_T <H grad log|y-eta|, grad log|y-eta|> dy by adaptive
// tensorized Gauss-Legendre with subdivision driven by the distance to eta.
double corner_integral_quadrature(const AnisoTensor& H, const CornerDomain& dom, Vec2 eta,
                                  const QuadratureOptions& opt = {});

struct ClosedFormCoefs {
    double coef_log_eta2 = 0.0;   // multiplier of log(1/|eta2|)
    double coef_log_eta1k = 0.0;  // multiplier of log|eta1 - k*eta2|
    double remainder_bound = 0.0; // crude bound for the O(1) part
};
// Bracketed coefficients of the corner-integral expansion on the
// bottom-approach region (single mode, eta2 < 0).
ClosedFormCoefs corner_integral_closed_form(const AnisoTensor& H, const CornerDomain& dom,
                                            Vec2 eta);

struct Lemma41Result {
    double cond1_value = 0.0;  // h11 + h22
    double cond2_value = 0.0;  // k*h11 + h12
    bool cond1_ok = false, cond2_ok = false;
    bool bounded = false;  // closed-form verdict
    // numeric log-fit protocol (12 points/decade over 3 decades)
    bool numeric_run = false;
    double slope_path1 = 0.0;  // fitted coefficient of log(1/|eta2|)
    double slope_path2 = 0.0;  // fitted coefficient of log(1/eta1)
    double total_variation_path1 = 0.0;
    bool bounded_numeric = false;
};
Lemma41Result lemma41_extract(const AnisoTensor& H, const CornerDomain& dom, bool numeric);

struct Lemma42Result {
    std::array<double, 3> residuals{};  // h11+h22, k h11 + h12, k h11 - h12
    bool bounded = false;               // all residuals vanish
    bool h_zero = false;
    std::string to_json() const;
};
Lemma42Result lemma42_extract(const AnisoTensor& H, const CornerDomain& dom);

// least-squares slope of y against x
double fit_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace eit
