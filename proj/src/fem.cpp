#include "eitcorner/fem.hpp"

#include <cmath>
#include <stdexcept>

namespace eit {

Vec2 tri_gradient(const Mesh& m, const std::vector<double>& u, std::size_t t) {
    const auto& tri = m.triangles[t];
    const Vec2 a = m.nodes[static_cast<std::size_t>(tri.v[0])];
    const Vec2 b = m.nodes[static_cast<std::size_t>(tri.v[1])];
    const Vec2 c = m.nodes[static_cast<std::size_t>(tri.v[2])];
    const double inv2A = 1.0 / (2.0 * m.tri_area(t));
    auto cw = [](Vec2 v) { return Vec2{v.y, -v.x}; };
    const Vec2 ga = cw(b - c) * inv2A;
    const Vec2 gb = cw(c - a) * inv2A;
    const Vec2 gc = cw(a - b) * inv2A;
    return u[static_cast<std::size_t>(tri.v[0])] * ga + u[static_cast<std::size_t>(tri.v[1])] * gb +
           u[static_cast<std::size_t>(tri.v[2])] * gc;
}

std::vector<AnisoTensor> tensors_on_mesh(const Mesh& m, const ConductivityField& gamma,
                                         const Perturbation* pert) {
    std::vector<AnisoTensor> out(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const Vec2 ctr = (1.0 / 3.0) * (m.nodes[static_cast<std::size_t>(m.triangles[t].v[0])] +
                                        m.nodes[static_cast<std::size_t>(m.triangles[t].v[1])] +
                                        m.nodes[static_cast<std::size_t>(m.triangles[t].v[2])]);
        AnisoTensor g = gamma.at(ctr);
        if (pert) g = g + eval_perturbation(*pert, ctr);
        out[t] = g;
    }
    return out;
}

std::vector<AnisoTensor> perturbation_on_mesh(const Mesh& m, const Perturbation& pert) {
    std::vector<AnisoTensor> out(m.triangles.size());
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const Vec2 ctr = (1.0 / 3.0) * (m.nodes[static_cast<std::size_t>(m.triangles[t].v[0])] +
                                        m.nodes[static_cast<std::size_t>(m.triangles[t].v[1])] +
                                        m.nodes[static_cast<std::size_t>(m.triangles[t].v[2])]);
        out[t] = eval_perturbation(pert, ctr);
    }
    return out;
}

namespace {

std::array<Vec2, 3> basis_gradients(const Mesh& m, std::size_t t) {
    const auto& tri = m.triangles[t];
    const Vec2 a = m.nodes[static_cast<std::size_t>(tri.v[0])];
    const Vec2 b = m.nodes[static_cast<std::size_t>(tri.v[1])];
    const Vec2 c = m.nodes[static_cast<std::size_t>(tri.v[2])];
    const double inv2A = 1.0 / (2.0 * m.tri_area(t));
    auto cw = [](Vec2 v) { return Vec2{v.y, -v.x}; };
    return {cw(b - c) * inv2A, cw(c - a) * inv2A, cw(a - b) * inv2A};
}

}  // namespace

FemOperator::FemOperator(const Mesh& mesh, std::vector<AnisoTensor> tri_tensors)
    : mesh_(&mesh), tensors_(std::move(tri_tensors)) {
    if (tensors_.size() != mesh.triangles.size())
        throw std::invalid_argument("tensor count != triangle count");
    const int n = static_cast<int>(mesh.nodes.size());

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.triangles.size() * 9);
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const double A = mesh.tri_area(t);
        if (A <= 0.0) throw std::runtime_error("non-positive triangle area");
        const auto g = basis_gradients(mesh, t);
        const auto& tri = mesh.triangles[t];
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                trips.emplace_back(tri.v[static_cast<std::size_t>(i)],
                                   tri.v[static_cast<std::size_t>(j)],
                                   A * g[static_cast<std::size_t>(i)].dot(
                                           tensors_[t].apply(g[static_cast<std::size_t>(j)])));
    }
    stiffness_.resize(n, n);
    stiffness_.setFromTriplets(trips.begin(), trips.end());

    // boundary mass and weight
    std::vector<Eigen::Triplet<double>> btrips;
    bweight_.assign(static_cast<std::size_t>(n), 0.0);
    for (const auto& e : mesh.boundary_edges) {
        const double len = (mesh.nodes[static_cast<std::size_t>(e.b)] -
                            mesh.nodes[static_cast<std::size_t>(e.a)]).norm();
        btrips.emplace_back(e.a, e.a, len / 3.0);
        btrips.emplace_back(e.b, e.b, len / 3.0);
        btrips.emplace_back(e.a, e.b, len / 6.0);
        btrips.emplace_back(e.b, e.a, len / 6.0);
        bweight_[static_cast<std::size_t>(e.a)] += 0.5 * len;
        bweight_[static_cast<std::size_t>(e.b)] += 0.5 * len;
    }
    bmass_.resize(n, n);
    bmass_.setFromTriplets(btrips.begin(), btrips.end());

    std::vector<Eigen::Triplet<double>> atrips = trips;
    for (int i = 0; i < n; ++i) {
        const double c = bweight_[static_cast<std::size_t>(i)];
        if (c != 0.0) {
            atrips.emplace_back(i, n, c);
            atrips.emplace_back(n, i, c);
        }
    }
    bordered_.resize(n + 1, n + 1);
    bordered_.setFromTriplets(atrips.begin(), atrips.end());
    lu_ = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
    lu_->compute(bordered_);
    if (lu_->info() != Eigen::Success)
        throw std::runtime_error("singular saddle system (non-positive conductivity?)");
}

double FemOperator::boundary_integral(const std::vector<double>& v) const {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += bweight_[i] * v[i];
    return s;
}

double FemOperator::boundary_pairing(const std::vector<double>& a,
                                     const std::vector<double>& b) const {
    Eigen::Map<const Eigen::VectorXd> va(a.data(), static_cast<Eigen::Index>(a.size()));
    Eigen::Map<const Eigen::VectorXd> vb(b.data(), static_cast<Eigen::Index>(b.size()));
    return va.dot(bmass_ * vb);
}

FemSolution FemOperator::solve_bordered(const Eigen::VectorXd& rhs) const {
    const int n = static_cast<int>(mesh_->nodes.size());
    Eigen::VectorXd full(n + 1);
    full.head(n) = rhs;
    full(n) = 0.0;
    const Eigen::VectorXd x = lu_->solve(full);
    if (lu_->info() != Eigen::Success) throw std::runtime_error("saddle solve failed");
    FemSolution sol;
    sol.u.assign(x.data(), x.data() + n);
    sol.multiplier = x(n);
    const Eigen::VectorXd res = bordered_ * x - full;
    sol.residual_norm = res.norm() / std::max(1.0, full.norm());
    return sol;
}

FemSolution FemOperator::solve_neumann(const NeumannData& f) const {
    const int n = static_cast<int>(mesh_->nodes.size());
    if (f.values.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("NeumannData length mismatch");
    const double compat = boundary_integral(f.values);
    double scale = 0.0;
    for (double v : f.values) scale = std::max(scale, std::abs(v));
    if (std::abs(compat) > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("incompatible Neumann datum: <f,1> != 0");
    Eigen::Map<const Eigen::VectorXd> fv(f.values.data(), n);
    return solve_bordered(bmass_ * fv);
}

FemSolution FemOperator::solve_neumann_edge(const std::vector<double>& edge_flux) const {
    if (edge_flux.size() != mesh_->boundary_edges.size())
        throw std::invalid_argument("one flux value per boundary edge required");
    const int n = static_cast<int>(mesh_->nodes.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    double compat = 0.0, scale = 0.0;
    for (std::size_t e = 0; e < edge_flux.size(); ++e) {
        const auto& be = mesh_->boundary_edges[e];
        const double len = (mesh_->nodes[static_cast<std::size_t>(be.b)] -
                            mesh_->nodes[static_cast<std::size_t>(be.a)]).norm();
        rhs(be.a) += 0.5 * len * edge_flux[e];
        rhs(be.b) += 0.5 * len * edge_flux[e];
        compat += len * edge_flux[e];
        scale = std::max(scale, std::abs(edge_flux[e]));
    }
    if (std::abs(compat) > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("incompatible Neumann datum: <f,1> != 0");
    return solve_bordered(rhs);
}

FemSolution FemOperator::solve_adjoint_source(const std::vector<AnisoTensor>& h_tri,
                                              const FemSolution& u) const {
    const int n = static_cast<int>(mesh_->nodes.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
    for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
        const AnisoTensor& H = h_tri[t];
        if (H.m11 == 0.0 && H.m12 == 0.0 && H.m22 == 0.0) continue;
        const double A = mesh_->tri_area(t);
        const Vec2 flow = H.apply(tri_gradient(*mesh_, u.u, t));
        const auto g = basis_gradients(*mesh_, t);
        const auto& tri = mesh_->triangles[t];
        for (int i = 0; i < 3; ++i)
            rhs(tri.v[static_cast<std::size_t>(i)]) -=
                A * flow.dot(g[static_cast<std::size_t>(i)]);
    }
    return solve_bordered(rhs);
}

double FemOperator::energy(const FemSolution& u) const {
    double e = 0.0;
    for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
        const Vec2 gu = tri_gradient(*mesh_, u.u, t);
        e += mesh_->tri_area(t) * gu.dot(tensors_[t].apply(gu));
    }
    return e;
}

double FemOperator::galerkin_residual(const FemSolution& u, const NeumannData& f) const {
    const int n = static_cast<int>(mesh_->nodes.size());
    Eigen::Map<const Eigen::VectorXd> uv(u.u.data(), n);
    Eigen::Map<const Eigen::VectorXd> fv(f.values.data(), n);
    Eigen::VectorXd cw(n);
    for (int i = 0; i < n; ++i) cw(i) = bweight_[static_cast<std::size_t>(i)];
    const Eigen::VectorXd r = stiffness_ * uv + u.multiplier * cw - bmass_ * fv;
    return r.norm();
}

SigmaBasis build_sigma_basis(const Mesh& mesh, const FemOperator& op) {
    SigmaBasis basis;
    basis.path = mesh.sigma_path;
    if (basis.path.size() < 4)
        throw std::runtime_error("sigma path too short for a zero-mean basis");
    basis.interior_nodes.assign(basis.path.begin() + 1, basis.path.end() - 1);

    const std::vector<double>& w = op.boundary_weight();
    double mass_total = 0.0;
    for (int nd : basis.interior_nodes) mass_total += w[static_cast<std::size_t>(nd)];

    const std::size_t n = mesh.nodes.size();
    // f_j = hat_j - (m_j / M) * sum_k hat_k, last one dropped for independence
    for (std::size_t j = 0; j + 1 < basis.interior_nodes.size(); ++j) {
        NeumannData f;
        f.values.assign(n, 0.0);
        const int nj = basis.interior_nodes[j];
        const double mj = w[static_cast<std::size_t>(nj)];
        f.values[static_cast<std::size_t>(nj)] += 1.0;
        for (int nk : basis.interior_nodes)
            f.values[static_cast<std::size_t>(nk)] -= mj / mass_total;
        basis.functions.push_back(std::move(f));
    }
    return basis;
}

std::vector<double> boundary_trace_on_sigma(const FemSolution& sol, const Mesh& mesh) {
    return boundary_trace_on_sigma(sol.u, mesh);
}

std::vector<double> boundary_trace_on_sigma(const std::vector<double>& nodal, const Mesh& mesh) {
    std::vector<double> out;
    out.reserve(mesh.sigma_path.size());
    for (int ndi : mesh.sigma_path) out.push_back(nodal[static_cast<std::size_t>(ndi)]);
    return out;
}

}  // namespace eit
