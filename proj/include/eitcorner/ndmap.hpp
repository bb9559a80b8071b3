#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "eitcorner/fem.hpp"

namespace eit {

// Discretized localized Neumann-to-Dirichlet map between the zero-mean sigma
// basis (Neumann side) and nodal traces on the sigma path (Dirichlet side),
// with the gram matrices defining the surrogate inner products.
struct LocNDMap {
    Eigen::MatrixXd matrix;          // (#sigma nodes) x (#basis)
    Eigen::MatrixXd gram_neumann;    // PD
    Eigen::MatrixXd gram_dirichlet;  // PD
    std::string to_csv() const;
    std::string descriptor_json() const;
};

// Largest generalized singular value between the weighted spaces.
double operator_norm(const Eigen::MatrixXd& map_matrix, const Eigen::MatrixXd& gram_neumann,
                     const Eigen::MatrixXd& gram_dirichlet);
// Hilbert-Schmidt norm in the same weighted spaces.
double hs_norm(const Eigen::MatrixXd& map_matrix, const Eigen::MatrixXd& gram_neumann,
               const Eigen::MatrixXd& gram_dirichlet);

// Forward operator at a fixed conductivity on a fixed mesh. Columns of the
// ND map and of the derivative are independent solves (parallelized, stored
// by index).
class ForwardOperator {
   public:
    ForwardOperator(std::shared_ptr<const Mesh> mesh, std::vector<AnisoTensor> tri_gamma,
                    bool fractional_grams = false);

    const Mesh& mesh() const { return *mesh_; }
    const FemOperator& fem() const { return fem_; }
    const SigmaBasis& basis() const { return basis_; }
    const Eigen::MatrixXd& gram_neumann() const { return gram_n_; }
    const Eigen::MatrixXd& gram_dirichlet() const { return gram_d_; }

    const LocNDMap& nd_map() const;
    // discretized F'(gamma)[H] for per-triangle H
    Eigen::MatrixXd frechet_apply(const std::vector<AnisoTensor>& tri_h) const;
    // duality pairing table <Λ f_i, f_j> (self-adjointness diagnostics)
    Eigen::MatrixXd pairing_table() const;

   private:
    void ensure_solved() const;

    std::shared_ptr<const Mesh> mesh_;
    FemOperator fem_;
    SigmaBasis basis_;
    Eigen::MatrixXd gram_n_, gram_d_;
    mutable std::vector<FemSolution> base_solutions_;
    mutable std::unique_ptr<LocNDMap> nd_;
};

struct Lemma21Report {
    double c1 = 0.0, c2 = 0.0, c3 = 0.0, c4 = 0.0;
    int pairs_used = 0;
    std::string to_json() const;
};

// Empirical maxima of the four operator bounds over sampled pairs; pairs with
// ||tau-sigma|| below 1e-14 are excluded from the difference ratios.
Lemma21Report lemma21_probe(std::shared_ptr<const Mesh> mesh,
                            const std::vector<std::pair<std::vector<AnisoTensor>,
                                                        std::vector<AnisoTensor>>>& gamma_pairs,
                            const std::vector<std::vector<AnisoTensor>>& h_samples);

// sup-norm of a piecewise constant tensor field given per triangle
double tri_field_sup_norm(const std::vector<AnisoTensor>& tri);

}  // namespace eit
