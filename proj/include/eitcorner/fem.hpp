#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "eitcorner/conductivity.hpp"
#include "eitcorner/mesh.hpp"

namespace eit {

// Neumann datum as nodal values of a piecewise linear density on the
// boundary (entries off the boundary are ignored).
struct NeumannData {
    std::vector<double> values;  // length = #mesh nodes
};

struct FemSolution {
    std::vector<double> u;
    double multiplier = 0.0;
    double residual_norm = 0.0;
};

// P1 gradient of a nodal field on triangle t.
Vec2 tri_gradient(const Mesh& m, const std::vector<double>& u, std::size_t t);

// Per-triangle tensors of gamma0 (+ optional perturbation), evaluated at
// centroids; exact for piecewise constant fields on respected interfaces.
std::vector<AnisoTensor> tensors_on_mesh(const Mesh& m, const ConductivityField& gamma,
                                         const Perturbation* pert = nullptr);
std::vector<AnisoTensor> perturbation_on_mesh(const Mesh& m, const Perturbation& pert);

// Assembled and factorized zero-boundary-mean Neumann operator for a fixed
// (mesh, tensor) pair; each solve reuses the factorization.
class FemOperator {
   public:
    FemOperator(const Mesh& mesh, std::vector<AnisoTensor> tri_tensors);

    const Mesh& mesh() const { return *mesh_; }
    const std::vector<AnisoTensor>& tensors() const { return tensors_; }

    FemSolution solve_neumann(const NeumannData& f) const;
    // flux given per boundary edge (constant on each edge)
    FemSolution solve_neumann_edge(const std::vector<double>& edge_flux) const;
    // derivative problem: RHS assembled from -H grad(u)
    FemSolution solve_adjoint_source(const std::vector<AnisoTensor>& h_tri,
                                     const FemSolution& u) const;

    double boundary_integral(const std::vector<double>& boundary_values) const;
    double boundary_pairing(const std::vector<double>& a, const std::vector<double>& b) const;
    double energy(const FemSolution& u) const;  // ∫ γ ∇u·∇u
    // residual of the discrete weak form against every basis function
    double galerkin_residual(const FemSolution& u, const NeumannData& f) const;

    const Eigen::SparseMatrix<double>& boundary_mass() const { return bmass_; }
    const std::vector<double>& boundary_weight() const { return bweight_; }

   private:
    FemSolution solve_bordered(const Eigen::VectorXd& rhs) const;

    const Mesh* mesh_;
    std::vector<AnisoTensor> tensors_;
    Eigen::SparseMatrix<double> stiffness_;  // n x n
    Eigen::SparseMatrix<double> bordered_;   // (n+1) x (n+1)
    Eigen::SparseMatrix<double> bmass_;      // boundary mass, n x n
    std::vector<double> bweight_;            // ∫ φ_i ds over ∂Ω
    std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>> lu_;
};

// Zero-mean hat basis on the interior sigma nodes (projected, last dropped).
struct SigmaBasis {
    std::vector<int> path;            // sigma nodes in order, endpoints included
    std::vector<int> interior_nodes;  // path without endpoints
    std::vector<NeumannData> functions;

    std::size_t size() const { return functions.size(); }
};

SigmaBasis build_sigma_basis(const Mesh& mesh, const FemOperator& op);

// Restriction of nodal values to the sigma path.
std::vector<double> boundary_trace_on_sigma(const FemSolution& sol, const Mesh& mesh);
std::vector<double> boundary_trace_on_sigma(const std::vector<double>& nodal, const Mesh& mesh);

}  // namespace eit
