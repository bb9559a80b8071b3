#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "eitcorner/decomposition.hpp"

namespace eit {

// Symmetric 2x2 tensor.
struct AnisoTensor {
    double m11 = 0.0, m12 = 0.0, m22 = 0.0;

    static AnisoTensor identity(double s = 1.0) { return {s, 0.0, s}; }
    static AnisoTensor diag(double a, double b) { return {a, 0.0, b}; }
    // R_phi^T diag(h1,h2) R_phi with the counterclockwise rotation R_phi
    static AnisoTensor rotated_diag(double h1, double h2, double phi);

    AnisoTensor operator+(const AnisoTensor& o) const {
        return {m11 + o.m11, m12 + o.m12, m22 + o.m22};
    }
    AnisoTensor operator-(const AnisoTensor& o) const {
        return {m11 - o.m11, m12 - o.m12, m22 - o.m22};
    }
    AnisoTensor operator*(double a) const { return {a * m11, a * m12, a * m22}; }

    Vec2 apply(Vec2 v) const { return {m11 * v.x + m12 * v.y, m12 * v.x + m22 * v.y}; }
    double trace() const { return m11 + m22; }
    double det() const { return m11 * m22 - m12 * m12; }
    std::pair<double, double> eigenvalues() const;  // ascending
    double min_eigenvalue() const { return eigenvalues().first; }
    double spectral_norm() const;
    AnisoTensor inverse() const;
    double quad(Vec2 v) const { return v.dot(apply(v)); }
};

struct PerturbationCell {
    double h1 = 0.0, h2 = 0.0;
    double phi = 2.0 * M_PI;  // stored in (0, 2*pi]
    AnisoTensor realize() const { return AnisoTensor::rotated_diag(h1, h2, phi); }
};

struct ConductivityField {
    std::shared_ptr<const Decomposition> decomposition;
    std::vector<AnisoTensor> cell_tensors;  // indexed by cell id
    double delta0 = 1e-3;

    static ConductivityField constant(std::shared_ptr<const Decomposition> d, AnisoTensor t,
                                      double delta0 = 1e-3);
    AnisoTensor at(Vec2 p) const;  // tensor of the cell containing p
    std::string to_json() const;
};

enum class PerturbationMode { parallelogram, trapezoid };

struct Perturbation {
    std::shared_ptr<const Decomposition> decomposition;
    PerturbationMode mode = PerturbationMode::parallelogram;
    std::vector<PerturbationCell> cells;     // parallelogram mode (h1,h2,phi per cell)
    std::vector<AnisoTensor> cell_tensors;   // trapezoid mode

    static Perturbation zeros(std::shared_ptr<const Decomposition> d, PerturbationMode mode);
    std::string to_json() const;
};

// Per-cell tensors of a perturbation (paper's H field realization).
std::vector<AnisoTensor> realize(const Perturbation& p);
double sup_norm(const Perturbation& p);
AnisoTensor eval_perturbation(const Perturbation& p, Vec2 x);

struct AdmissibilityReport {
    bool pass = true;
    int worst_cell = -1;
    double min_eigenvalue = 0.0;
};
AdmissibilityReport admissibility_check(const ConductivityField& gamma);

// max over cells of the spectral norm of the difference (same decomposition)
double sup_distance(const ConductivityField& a, const ConductivityField& b);

struct ResampleResult {
    ConductivityField field;
    bool averaged = false;  // set when area-weighted averaging was needed
};

// Restriction of `gamma` onto decomposition B. Exact when every B-cell nests
// inside one A-cell; otherwise area-weighted averaging if permitted.
ResampleResult resample_onto(const ConductivityField& gamma,
                             std::shared_ptr<const Decomposition> target,
                             bool allow_averaging = false);

}  // namespace eit
