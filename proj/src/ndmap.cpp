#include "eitcorner/ndmap.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <sstream>

#include "eitcorner/io_util.hpp"
#include "eitcorner/threading.hpp"

namespace eit {

namespace {

Eigen::MatrixXd sigma_l2_gram(const Mesh& mesh) {
    // P1 mass over the sigma edges, restricted to the path nodes
    const auto& path = mesh.sigma_path;
    std::vector<int> pos(mesh.nodes.size(), -1);
    for (std::size_t i = 0; i < path.size(); ++i) pos[static_cast<std::size_t>(path[i])] = static_cast<int>(i);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(path.size()),
                                              static_cast<Eigen::Index>(path.size()));
    for (const auto& e : mesh.boundary_edges) {
        if (!e.on_sigma) continue;
        const int ia = pos[static_cast<std::size_t>(e.a)], ib = pos[static_cast<std::size_t>(e.b)];
        if (ia < 0 || ib < 0) continue;
        const double len = (mesh.nodes[static_cast<std::size_t>(e.b)] -
                            mesh.nodes[static_cast<std::size_t>(e.a)]).norm();
        g(ia, ia) += len / 3.0;
        g(ib, ib) += len / 3.0;
        g(ia, ib) += len / 6.0;
        g(ib, ia) += len / 6.0;
    }
    return g;
}

Eigen::MatrixXd sigma_stiffness_1d(const Mesh& mesh) {
    const auto& path = mesh.sigma_path;
    std::vector<int> pos(mesh.nodes.size(), -1);
    for (std::size_t i = 0; i < path.size(); ++i) pos[static_cast<std::size_t>(path[i])] = static_cast<int>(i);
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(path.size()),
                                              static_cast<Eigen::Index>(path.size()));
    for (const auto& e : mesh.boundary_edges) {
        if (!e.on_sigma) continue;
        const int ia = pos[static_cast<std::size_t>(e.a)], ib = pos[static_cast<std::size_t>(e.b)];
        if (ia < 0 || ib < 0) continue;
        const double len = (mesh.nodes[static_cast<std::size_t>(e.b)] -
                            mesh.nodes[static_cast<std::size_t>(e.a)]).norm();
        g(ia, ia) += 1.0 / len;
        g(ib, ib) += 1.0 / len;
        g(ia, ib) -= 1.0 / len;
        g(ib, ia) -= 1.0 / len;
    }
    return g;
}

// (M^{1/2} (I + M^{-1/2} S M^{-1/2})^{p} M^{1/2}) for p = ±1/2: surrogate
// fractional Sobolev gram on the sigma polyline.
Eigen::MatrixXd fractional_gram(const Eigen::MatrixXd& M, const Eigen::MatrixXd& S, double p) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(M);
    const Eigen::MatrixXd Mh = em.operatorSqrt();
    const Eigen::MatrixXd Mih = em.operatorInverseSqrt();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ew(
        Eigen::MatrixXd(Mih * S * Mih));
    Eigen::VectorXd lam = ew.eigenvalues();
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        lam(i) = std::pow(1.0 + std::max(lam(i), 0.0), p);
    return Mh * ew.eigenvectors() * lam.asDiagonal() * ew.eigenvectors().transpose() * Mh;
}

}  // namespace

namespace {

// weighted representation M = L_D^T A L_N^{-T} with G = L L^T
Eigen::MatrixXd weighted_rep(const Eigen::MatrixXd& A, const Eigen::MatrixXd& gn,
                             const Eigen::MatrixXd& gd) {
    const Eigen::LLT<Eigen::MatrixXd> ln(gn), ld(gd);
    if (ln.info() != Eigen::Success || ld.info() != Eigen::Success)
        throw std::invalid_argument("gram matrices must be positive definite");
    const Eigen::MatrixXd lnU = ln.matrixU();
    const Eigen::MatrixXd ldU = ld.matrixU();
    Eigen::MatrixXd M = ldU * A;
    M = lnU.transpose().triangularView<Eigen::Lower>().solve(M.transpose()).transpose();
    return M;
}

}  // namespace

double operator_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& gn,
                     const Eigen::MatrixXd& gd) {
    const Eigen::MatrixXd M = weighted_rep(A, gn, gd);
    if (M.size() == 0) return 0.0;
    Eigen::BDCSVD<Eigen::MatrixXd> svd(M);
    return svd.singularValues()(0);
}

double hs_norm(const Eigen::MatrixXd& A, const Eigen::MatrixXd& gn, const Eigen::MatrixXd& gd) {
    return weighted_rep(A, gn, gd).norm();
}

ForwardOperator::ForwardOperator(std::shared_ptr<const Mesh> mesh,
                                 std::vector<AnisoTensor> tri_gamma, bool fractional_grams)
    : mesh_(std::move(mesh)), fem_(*mesh_, std::move(tri_gamma)), basis_(build_sigma_basis(*mesh_, fem_)) {
    const std::size_t nb = basis_.size();
    gram_n_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
    if (fractional_grams) {
        const Eigen::MatrixXd M = sigma_l2_gram(*mesh_);
        const Eigen::MatrixXd S = sigma_stiffness_1d(*mesh_);
        gram_d_ = fractional_gram(M, S, +0.5);
        const Eigen::MatrixXd gminus = fractional_gram(M, S, -0.5);
        // basis values at path nodes
        Eigen::MatrixXd B = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(basis_.path.size()),
                                                  static_cast<Eigen::Index>(nb));
        for (std::size_t j = 0; j < nb; ++j)
            for (std::size_t i = 0; i < basis_.path.size(); ++i)
                B(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    basis_.functions[j].values[static_cast<std::size_t>(basis_.path[i])];
        gram_n_ = B.transpose() * gminus * B;
    } else {
        gram_d_ = sigma_l2_gram(*mesh_);
        for (std::size_t i = 0; i < nb; ++i)
            for (std::size_t j = i; j < nb; ++j) {
                const double v =
                    fem_.boundary_pairing(basis_.functions[i].values, basis_.functions[j].values);
                gram_n_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
                gram_n_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = v;
            }
    }
    // keep the grams numerically PD
    gram_n_ = 0.5 * (gram_n_ + gram_n_.transpose());
    gram_d_ = 0.5 * (gram_d_ + gram_d_.transpose());
}

void ForwardOperator::ensure_solved() const {
    if (!base_solutions_.empty()) return;
    base_solutions_.resize(basis_.size());
    parallel_for(basis_.size(), [&](std::size_t j) {
        base_solutions_[j] = fem_.solve_neumann(basis_.functions[j]);
    });
}

const LocNDMap& ForwardOperator::nd_map() const {
    if (nd_) return *nd_;
    ensure_solved();
    auto nd = std::make_unique<LocNDMap>();
    nd->matrix.resize(static_cast<Eigen::Index>(basis_.path.size()),
                      static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t j = 0; j < basis_.size(); ++j) {
        const auto tr = boundary_trace_on_sigma(base_solutions_[j], *mesh_);
        for (std::size_t i = 0; i < tr.size(); ++i)
            nd->matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = tr[i];
    }
    nd->gram_neumann = gram_n_;
    nd->gram_dirichlet = gram_d_;
    nd_ = std::move(nd);
    return *nd_;
}

Eigen::MatrixXd ForwardOperator::frechet_apply(const std::vector<AnisoTensor>& tri_h) const {
    ensure_solved();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(basis_.path.size()),
                        static_cast<Eigen::Index>(basis_.size()));
    std::vector<std::vector<double>> cols(basis_.size());
    parallel_for(basis_.size(), [&](std::size_t j) {
        const FemSolution up = fem_.solve_adjoint_source(tri_h, base_solutions_[j]);
        cols[j] = boundary_trace_on_sigma(up, *mesh_);
    });
    for (std::size_t j = 0; j < basis_.size(); ++j)
        for (std::size_t i = 0; i < cols[j].size(); ++i)
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = cols[j][i];
    return out;
}

Eigen::MatrixXd ForwardOperator::pairing_table() const {
    ensure_solved();
    const std::size_t nb = basis_.size();
    Eigen::MatrixXd S(static_cast<Eigen::Index>(nb), static_cast<Eigen::Index>(nb));
    for (std::size_t i = 0; i < nb; ++i)
        for (std::size_t j = 0; j < nb; ++j)
            S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                fem_.boundary_pairing(base_solutions_[i].u, basis_.functions[j].values);
    return S;
}

double tri_field_sup_norm(const std::vector<AnisoTensor>& tri) {
    double m = 0.0;
    for (const AnisoTensor& t : tri) m = std::max(m, t.spectral_norm());
    return m;
}

Lemma21Report lemma21_probe(
    std::shared_ptr<const Mesh> mesh,
    const std::vector<std::pair<std::vector<AnisoTensor>, std::vector<AnisoTensor>>>& gamma_pairs,
    const std::vector<std::vector<AnisoTensor>>& h_samples) {
    Lemma21Report rep;
    for (const auto& [tau_tri, sigma_tri] : gamma_pairs) {
        ForwardOperator ftau(mesh, tau_tri);
        ForwardOperator fsig(mesh, sigma_tri);
        const auto& nd_tau = ftau.nd_map();
        const auto& nd_sig = fsig.nd_map();
        const auto& gn = nd_tau.gram_neumann;
        const auto& gd = nd_tau.gram_dirichlet;
        rep.c1 = std::max(rep.c1, operator_norm(nd_tau.matrix, gn, gd));
        rep.c1 = std::max(rep.c1, operator_norm(nd_sig.matrix, gn, gd));
        std::vector<AnisoTensor> diff(tau_tri.size());
        for (std::size_t t = 0; t < tau_tri.size(); ++t) diff[t] = tau_tri[t] - sigma_tri[t];
        const double dist = tri_field_sup_norm(diff);
        if (dist < 1e-14) continue;  // 0/0 ratios excluded
        ++rep.pairs_used;
        const Eigen::MatrixXd fd = nd_tau.matrix - nd_sig.matrix;
        rep.c2 = std::max(rep.c2, operator_norm(fd, gn, gd) / dist);
        const Eigen::MatrixXd lin = fsig.frechet_apply(diff);
        rep.c3 = std::max(rep.c3, operator_norm(fd - lin, gn, gd) / (dist * dist));
        for (const auto& h : h_samples) {
            const double hn = tri_field_sup_norm(h);
            if (hn < 1e-14) continue;
            const Eigen::MatrixXd dtau = ftau.frechet_apply(h);
            const Eigen::MatrixXd dsig = fsig.frechet_apply(h);
            rep.c4 = std::max(rep.c4, operator_norm(dtau - dsig, gn, gd) / (hn * dist));
        }
    }
    return rep;
}

std::string LocNDMap::to_csv() const {
    std::ostringstream os;
    os << "row";
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) os << ",b" << j;
    os << "\n";
    for (Eigen::Index i = 0; i < matrix.rows(); ++i) {
        os << i;
        for (Eigen::Index j = 0; j < matrix.cols(); ++j) os << "," << fmt_g17(matrix(i, j));
        os << "\n";
    }
    return os.str();
}

std::string LocNDMap::descriptor_json() const {
    std::ostringstream os;
    os << "{\"rows\":" << matrix.rows() << ",\"cols\":" << matrix.cols()
       << ",\"basis\":\"zero-mean sigma hats (projected, last dropped)\""
       << ",\"dirichlet\":\"nodal trace on the sigma path\"}";
    return os.str();
}

std::string Lemma21Report::to_json() const {
    std::ostringstream os;
    os << "{\"C1\":" << fmt_g17(c1) << ",\"C2\":" << fmt_g17(c2) << ",\"C3\":" << fmt_g17(c3)
       << ",\"C4\":" << fmt_g17(c4) << ",\"pairs_used\":" << pairs_used << "}";
    return os.str();
}

}  // namespace eit
