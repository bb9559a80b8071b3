#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "eitcorner/ndmap.hpp"
#include "eitcorner/rng.hpp"

namespace eit {

// Finite-dimensional perturbation space: one (h1,h2) pair per support cell in
// parallelogram mode, three tensor entries per cell in trapezoid mode.
struct PerturbationBasis {
    std::shared_ptr<const Decomposition> decomposition;
    PerturbationMode mode = PerturbationMode::parallelogram;
    struct Element {
        int cell = -1;
        int comp = 0;       // 0: h1/m11, 1: h2/m22, 2: m12 (trapezoid only)
        double phi = 2.0 * M_PI;
    };
    std::vector<Element> elements;
    std::vector<double> weights;  // cell areas (coefficient inner product)

    std::size_t size() const { return elements.size(); }
    Perturbation realize_coeffs(const std::vector<double>& c) const;
    double coeff_sup_norm(const std::vector<double>& c) const;  // = ||H||_inf
};

PerturbationBasis make_parallelogram_basis(std::shared_ptr<const Decomposition> d,
                                           const std::vector<int>& support_cells,
                                           const std::vector<double>& phis);
PerturbationBasis make_trapezoid_basis(std::shared_ptr<const Decomposition> d,
                                       const std::vector<int>& support_cells);

struct InjectivityCertificate {
    double sigma_min = 0.0;  // smallest singular value, coeff l2 -> HS data
    double sigma_max = 0.0;
    double c_gamma0 = 0.0;   // min ||F'(g0)[H]||_op over the box ||H||_inf = 1
    std::vector<double> sigma_min_direction;
    std::vector<double> box_min_direction;
    std::string basis_description;
    std::string norm_note;
    int n_coeffs = 0;
    std::string to_json() const;
};

// Jacobian of the discretized forward map at gamma0 over a perturbation basis.
class DerivativeMap {
   public:
    DerivativeMap(std::shared_ptr<const ForwardOperator> forward, PerturbationBasis basis);

    const PerturbationBasis& basis() const { return basis_; }
    const ForwardOperator& forward() const { return *forward_; }
    // weighted-representation columns (L_D^T dΛ_k L_N^{-T}), stacked
    const Eigen::MatrixXd& stacked() const { return stacked_; }
    // weighted representation of Σ c_k dΛ_k as a matrix
    Eigen::MatrixXd weighted_matrix(const std::vector<double>& c) const;
    double op_norm_at(const std::vector<double>& c) const;

    InjectivityCertificate certificate(std::uint64_t seed = 1) const;

   private:
    std::shared_ptr<const ForwardOperator> forward_;
    PerturbationBasis basis_;
    std::vector<Eigen::MatrixXd> weighted_cols_;  // per element
    Eigen::MatrixXd stacked_;
};

// Mesh-independent measurements: zero-mean cosine current patterns on the
// sigma arclength; D[i][j] = <f_i, u_j|sigma>.
struct MeasurementSetup {
    int n_patterns = 8;
    std::vector<NeumannData> patterns(const Mesh& mesh, const FemOperator& op) const;
    Eigen::MatrixXd data_matrix(const Mesh& mesh, const FemOperator& op) const;
};

enum class Scheme { landweber, levenberg_marquardt };

struct IterationConfig {
    Scheme scheme = Scheme::landweber;
    double mu = 1.0;             // Landweber step
    double lambda0 = 1e-3;       // LM damping
    double lm_decrease = 0.5, lm_increase = 4.0;
    int max_iters = 100;
    double tol_residual = 1e-12;
    double tol_step = 1e-14;
    bool project = true;
    double delta0 = 1e-3;
};

struct IterationTrace {
    struct Step {
        double residual = 0.0;
        double error_sup = 0.0;  // sup-distance to ground truth when known
        double step_norm = 0.0;
    };
    std::vector<Step> steps;
    bool diverged = false;
    bool non_admissible = false;
    std::string to_csv() const;
};

// Reconstruction in measurement space on a fixed inversion mesh.
class Reconstructor {
   public:
    Reconstructor(std::shared_ptr<const Mesh> mesh, ConductivityField gamma0,
                  PerturbationBasis basis, MeasurementSetup meas);

    // observed data from a (usually finer) data mesh
    static Eigen::MatrixXd synthesize_data(std::shared_ptr<const Mesh> data_mesh,
                                           const ConductivityField& gamma0,
                                           const PerturbationBasis& basis,
                                           const std::vector<double>& c_true,
                                           const MeasurementSetup& meas);

    Eigen::MatrixXd forward_data(const std::vector<double>& c) const;
    // pattern-space Jacobian at c: (n_patterns^2) x n_coeffs
    Eigen::MatrixXd jacobian(const std::vector<double>& c) const;

    std::pair<std::vector<double>, IterationTrace> run(
        const Eigen::MatrixXd& data, const IterationConfig& cfg, std::vector<double> init,
        const std::vector<double>* c_truth = nullptr) const;

    const PerturbationBasis& basis() const { return basis_; }

   private:
    std::vector<double> project_admissible(std::vector<double> c, double delta0) const;

    std::shared_ptr<const Mesh> mesh_;
    ConductivityField gamma0_;
    PerturbationBasis basis_;
    MeasurementSetup meas_;
    std::vector<AnisoTensor> gamma0_tri_;
    std::vector<AnisoTensor> gamma0_cellavg_;  // per support cell, for projection
};

struct LipschitzProbeReport {
    double max_ratio = 0.0;      // max ||tau-sigma||_inf / ||F(tau)-F(sigma)||_op
    double c_gamma0 = 0.0;       // from the certificate
    double c3 = 0.0, c4 = 0.0;   // probed constants
    double bound_de = 0.0;       // 1/(D*E) assembled per the stability proof
    bool bound_respected = true;
    int pairs = 0;
    std::vector<double> ratios;
    std::string to_json() const;
};

// Samples pairs in the delta-ball around gamma0 (including the box-min
// direction) and compares the empirical Lipschitz constant with 1/C_gamma0
// and the assembled 1/(D*E) bound.
LipschitzProbeReport lipschitz_probe(const DerivativeMap& dmap,
                                     const ConductivityField& gamma0, double delta, int n_pairs,
                                     std::uint64_t seed);

}  // namespace eit
