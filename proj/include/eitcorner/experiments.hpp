#pragma once

#include <string>
#include <vector>

#include "eitcorner/corner.hpp"
#include "eitcorner/inverse.hpp"

namespace eit {

struct SampleConfig {
    PerturbationMode mode = PerturbationMode::parallelogram;
    int n_samples = 50;
    std::uint64_t rng_seed = 1;
    // parallelogram mode: fixed frame angle and background grid
    double theta = M_PI_2;
    double r0 = 1.0 / std::sqrt(2.0);
    // trapezoid mode: fixed domain shift; theta is sampled
    double q = 0.3;
    int n_pairs = 1;
    double theta_lo = 0.35, theta_hi = 1.95;  // constructible range, pi/2 has measure zero
    AnisoTensor gamma0 = AnisoTensor::identity();
    double delta0 = 1e-3;
    double mesh_h = 0.2;
    int support_cells = 2;
    double sigma_rel_threshold = 1e-8;
};

struct SampleOutcome {
    int index = 0;
    double r = 0.0, theta = 0.0;
    std::vector<double> phis;
    bool det_flag = true;     // |sin(2 phi + alpha)| bounded away from 0 (parallelogram)
    bool trape_flag = true;   // assumption on the angle holds for every background cell
    bool irrational_flag = true;  // rationality heuristics clear (r/r0, q/r0)
    double det_min_abs = 0.0;
    double sigma_min = 0.0, sigma_max = 0.0;
    bool pass = false;
    std::string error;  // nonempty when the sample pipeline failed
};

struct MonteCarloResult {
    std::vector<SampleOutcome> outcomes;
    int passes = 0;
    int flag_failures = 0;
    int errors = 0;
    double fraction = 0.0;
    double ci_lo = 0.0, ci_hi = 0.0;  // 95% Wilson interval
    std::string to_csv() const;
    std::string summary_json() const;
};

MonteCarloResult run_monte_carlo(const SampleConfig& cfg);

struct AngleSweepRow {
    double phi = 0.0;
    double determinant = 0.0;
    double sigma_min = 0.0;
};
struct AngleSweepResult {
    std::vector<AngleSweepRow> rows;
    std::vector<double> roots;  // zeros of the determinant in (0, 2*pi]
    CornerReduction reduction;
    std::string to_csv() const;
};

// phi grid on (0, 2*pi]; sigma_min of a one-cell perturbation per phi when
// mesh_h > 0 (three fixed derivative solves combined by linearity).
AngleSweepResult angle_sweep(const AnisoTensor& gamma0, double theta, int n_grid,
                             double r0 = 1.0 / std::sqrt(2.0), double r_pert = 0.537,
                             double mesh_h = 0.0);

struct RatioSweepRow {
    double r = 0.0;
    bool shared_flag = false;
    double sigma_min = 0.0;
};
struct RatioSweepResult {
    std::vector<RatioSweepRow> rows;
    std::string to_csv() const;
};

RatioSweepResult ratio_sweep(const std::vector<double>& r_values, double r0,
                             const AnisoTensor& gamma0, double theta, double mesh_h,
                             std::uint64_t seed);

}  // namespace eit
