#include <cmath>
#include <memory>

#include "doctest.h"
#include "eitcorner/fem.hpp"
#include "eitcorner/rng.hpp"
#include "oracles.hpp"

using namespace eit;

namespace {

std::shared_ptr<Mesh> square_mesh(double h, double r = 1.0) {
    const Decomposition d = build_parallelogram_decomposition(r, M_PI_2);
    return std::make_shared<Mesh>(triangulate(d, h));
}

// per-edge constant flux of a linear potential u = g . x for conductivity gamma
std::vector<double> linear_flux(const Mesh& m, const AnisoTensor& gamma, Vec2 g) {
    std::vector<double> flux(m.boundary_edges.size());
    const Vec2 q = gamma.apply(g);
    // interior on the left of boundary edges? orientation is unknown, so use
    // the outward normal from the edge midpoint vs the mesh centroid
    Vec2 ctr{};
    for (const Vec2& p : m.nodes) ctr = ctr + p;
    ctr = (1.0 / static_cast<double>(m.nodes.size())) * ctr;
    for (std::size_t e = 0; e < flux.size(); ++e) {
        const Vec2 a = m.nodes[static_cast<std::size_t>(m.boundary_edges[e].a)];
        const Vec2 b = m.nodes[static_cast<std::size_t>(m.boundary_edges[e].b)];
        Vec2 n{(b - a).y, -(b - a).x};
        n = (1.0 / n.norm()) * n;
        if (n.dot(0.5 * (a + b) - ctr) < 0) n = -n;
        flux[e] = n.dot(q);
    }
    return flux;
}

double boundary_mean_shift(const FemOperator& op, const Mesh& m, Vec2 g) {
    // mean of g.x over the boundary
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        num += op.boundary_weight()[i] * g.dot(m.nodes[i]);
        den += op.boundary_weight()[i];
    }
    return num / den;
}

}  // namespace

TEST_CASE("triangulate: counts, conformity, refinement") {
    const Decomposition one = build_parallelogram_decomposition(1.0, M_PI_2);
    const Mesh m1 = triangulate(one, 0.5);
    CHECK(m1.triangles.size() >= 8);
    double area = 0.0;
    for (std::size_t t = 0; t < m1.triangles.size(); ++t) {
        CHECK(m1.triangles[t].cell_id == 0);
        area += m1.tri_area(t);
    }
    CHECK(area == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m1.min_angle >= 20.0 * M_PI / 180.0);

    const Decomposition four = build_parallelogram_decomposition(0.5, M_PI_2);
    const Mesh m4 = triangulate(four, 0.21);
    for (std::size_t t = 0; t < m4.triangles.size(); ++t) {
        // no triangle crosses an interior cell edge: all three vertices and
        // the centroid must be in the attributed cell
        const Cell& c = four.cells[static_cast<std::size_t>(m4.triangles[t].cell_id)];
        for (int k = 0; k < 3; ++k)
            CHECK(c.contains(m4.nodes[static_cast<std::size_t>(m4.triangles[t].v[static_cast<std::size_t>(k)])], 1e-9));
    }

    const Mesh mh = triangulate(four, 0.2);
    const Mesh mh2 = triangulate(four, 0.1);
    CHECK(mh2.h <= mh.h / 2.0 * 1.5);
    CHECK(mh2.h >= mh.h / 2.0 / 1.5);

    // trapezoid-domain mesh: conformity across the slanted interfaces
    const TrapezoidDomain dom = build_trapezoid_domain(1, M_PI / 3.0, 0.3);
    const Decomposition trap = build_trapezoid_decomposition(dom, 0.37);
    const Mesh mt = triangulate(trap, 0.15);
    double at = 0.0;
    for (std::size_t t = 0; t < mt.triangles.size(); ++t) {
        at += mt.tri_area(t);
        const Cell& c = trap.cells[static_cast<std::size_t>(mt.triangles[t].cell_id)];
        for (int k = 0; k < 3; ++k)
            CHECK(c.contains(mt.nodes[static_cast<std::size_t>(mt.triangles[t].v[static_cast<std::size_t>(k)])], 1e-9));
    }
    CHECK(at == doctest::Approx(dom.area()).epsilon(1e-10));
    CHECK(!mt.sigma_path.empty());
}

TEST_CASE("solve_neumann: exact linear solutions") {
    auto mesh = square_mesh(0.23);
    SUBCASE("identity conductivity") {
        FemOperator op(*mesh, std::vector<AnisoTensor>(mesh->triangles.size(),
                                                       AnisoTensor::identity()));
        const FemSolution sol = op.solve_neumann_edge(linear_flux(*mesh, AnisoTensor::identity(), {1, 0}));
        const double shift = boundary_mean_shift(op, *mesh, {1, 0});
        for (std::size_t i = 0; i < mesh->nodes.size(); ++i)
            CHECK(sol.u[i] == doctest::Approx(mesh->nodes[i].x - shift).epsilon(1e-10));
        // mean-zero constraint
        double bint = 0.0;
        for (std::size_t i = 0; i < sol.u.size(); ++i) bint += op.boundary_weight()[i] * sol.u[i];
        CHECK(std::abs(bint) < 1e-10);
    }
    SUBCASE("diagonal anisotropic conductivity") {
        const AnisoTensor g = AnisoTensor::diag(3.0, 0.5);
        FemOperator op(*mesh, std::vector<AnisoTensor>(mesh->triangles.size(), g));
        const FemSolution sol = op.solve_neumann_edge(linear_flux(*mesh, g, {1, 0}));
        const double shift = boundary_mean_shift(op, *mesh, {1, 0});
        for (std::size_t i = 0; i < mesh->nodes.size(); ++i)
            CHECK(sol.u[i] == doctest::Approx(mesh->nodes[i].x - shift).epsilon(1e-10));
    }
    SUBCASE("incompatible datum rejected") {
        FemOperator op(*mesh, std::vector<AnisoTensor>(mesh->triangles.size(),
                                                       AnisoTensor::identity()));
        NeumannData f;
        f.values.assign(mesh->nodes.size(), 0.0);
        for (const auto& e : mesh->boundary_edges) {
            f.values[static_cast<std::size_t>(e.a)] = 1.0;
            f.values[static_cast<std::size_t>(e.b)] = 1.0;
        }
        CHECK_THROWS_AS(op.solve_neumann(f), std::invalid_argument);
    }
}

TEST_CASE("weak form identities: energy, Galerkin residual") {
    const Decomposition d = build_parallelogram_decomposition(0.5, M_PI / 3.0);
    auto mesh = std::make_shared<Mesh>(triangulate(d, 0.17));
    auto gdec = std::make_shared<Decomposition>(d);
    ConductivityField gamma = ConductivityField::constant(gdec, AnisoTensor{2.0, 0.4, 1.0});
    gamma.cell_tensors[0] = AnisoTensor{1.0, -0.2, 3.0};
    FemOperator op(*mesh, tensors_on_mesh(*mesh, gamma));
    const SigmaBasis basis = build_sigma_basis(*mesh, op);
    REQUIRE(basis.size() >= 3);
    const FemSolution sol = op.solve_neumann(basis.functions[1]);
    // energy identity
    const double lhs = op.energy(sol);
    const double rhs = op.boundary_pairing(basis.functions[1].values, sol.u);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-8));
    CHECK(op.galerkin_residual(sol, basis.functions[1]) < 1e-9);
    double bint = 0.0;
    for (std::size_t i = 0; i < sol.u.size(); ++i) bint += op.boundary_weight()[i] * sol.u[i];
    CHECK(std::abs(bint) < 1e-10);
}

TEST_CASE("solve_adjoint_source") {
    auto mesh = square_mesh(0.2, 0.5);
    const std::vector<AnisoTensor> id(mesh->triangles.size(), AnisoTensor::identity());
    FemOperator op(*mesh, id);
    const SigmaBasis basis = build_sigma_basis(*mesh, op);
    const FemSolution u = op.solve_neumann(basis.functions[0]);

    SUBCASE("H = 0 gives zero") {
        const std::vector<AnisoTensor> zero(mesh->triangles.size(), AnisoTensor{});
        const FemSolution up = op.solve_adjoint_source(zero, u);
        for (double v : up.u) CHECK(std::abs(v) < 1e-12);
    }
    SUBCASE("H = gamma gives -u exactly in the discrete space") {
        const FemSolution up = op.solve_adjoint_source(id, u);
        for (std::size_t i = 0; i < u.u.size(); ++i)
            CHECK(up.u[i] == doctest::Approx(-u.u[i]).epsilon(1e-10));
    }
    SUBCASE("single-cell H obeys the discrete stability bound") {
        std::vector<AnisoTensor> h(mesh->triangles.size(), AnisoTensor{});
        const Decomposition d = build_parallelogram_decomposition(0.5, M_PI_2);
        for (std::size_t t = 0; t < mesh->triangles.size(); ++t)
            if (mesh->triangles[t].cell_id == 3) h[t] = AnisoTensor{0.7, 0.1, 0.4};
        const FemSolution up = op.solve_adjoint_source(h, u);
        bool nonzero = false;
        for (double v : up.u)
            if (std::abs(v) > 1e-12) nonzero = true;
        CHECK(nonzero);
        const double hn = AnisoTensor{0.7, 0.1, 0.4}.spectral_norm();
        CHECK(std::sqrt(op.energy(up)) <= hn * std::sqrt(op.energy(u)) + 1e-12);
    }
}

TEST_CASE("boundary trace on sigma") {
    auto mesh = square_mesh(0.26);
    FemOperator op(*mesh, std::vector<AnisoTensor>(mesh->triangles.size(),
                                                   AnisoTensor::identity()));
    SUBCASE("constant vector restricts to a constant trace") {
        const std::vector<double> c(mesh->nodes.size(), 3.25);
        for (double v : boundary_trace_on_sigma(c, *mesh)) CHECK(v == doctest::Approx(3.25));
    }
    SUBCASE("linear solution trace equals x1 - mean at sigma nodes") {
        const FemSolution sol =
            op.solve_neumann_edge(linear_flux(*mesh, AnisoTensor::identity(), {1, 0}));
        const double shift = boundary_mean_shift(op, *mesh, {1, 0});
        const auto tr = boundary_trace_on_sigma(sol, *mesh);
        for (std::size_t i = 0; i < mesh->sigma_path.size(); ++i)
            CHECK(tr[i] == doctest::Approx(
                               mesh->nodes[static_cast<std::size_t>(mesh->sigma_path[i])].x -
                               shift).epsilon(1e-9));
    }
    SUBCASE("random vector: trace equals direct nodal lookup") {
        Rng rng(5);
        std::vector<double> v(mesh->nodes.size());
        for (double& x : v) x = rng.uniform(-1, 1);
        const auto tr = boundary_trace_on_sigma(v, *mesh);
        for (std::size_t i = 0; i < mesh->sigma_path.size(); ++i)
            CHECK(tr[i] == v[static_cast<std::size_t>(mesh->sigma_path[i])]);
    }
}

TEST_CASE("H1 convergence at rate >= 0.9 for a manufactured harmonic solution") {
    // u = x^2 - y^2 is harmonic; flux taken as the edge-midpoint value
    auto exact_grad = [](Vec2 p) { return Vec2{2.0 * p.x, -2.0 * p.y}; };
    std::vector<double> hs, errs;
    for (double h : {0.2, 0.1, 0.05, 0.025}) {
        auto mesh = square_mesh(h);
        FemOperator op(*mesh, std::vector<AnisoTensor>(mesh->triangles.size(),
                                                       AnisoTensor::identity()));
        std::vector<double> flux(mesh->boundary_edges.size());
        Vec2 ctr{0.5, 0.5};
        for (std::size_t e = 0; e < flux.size(); ++e) {
            const Vec2 a = mesh->nodes[static_cast<std::size_t>(mesh->boundary_edges[e].a)];
            const Vec2 b = mesh->nodes[static_cast<std::size_t>(mesh->boundary_edges[e].b)];
            Vec2 n{(b - a).y, -(b - a).x};
            n = (1.0 / n.norm()) * n;
            if (n.dot(0.5 * (a + b) - ctr) < 0) n = -n;
            flux[e] = n.dot(exact_grad(0.5 * (a + b)));
        }
        // enforce the discrete compatibility exactly
        double compat = 0.0, per = 0.0;
        for (std::size_t e = 0; e < flux.size(); ++e) {
            const double len = (mesh->nodes[static_cast<std::size_t>(mesh->boundary_edges[e].b)] -
                                mesh->nodes[static_cast<std::size_t>(mesh->boundary_edges[e].a)]).norm();
            compat += len * flux[e];
            per += len;
        }
        for (double& f : flux) f -= compat / per;
        const FemSolution sol = op.solve_neumann_edge(flux);
        double err2 = 0.0;
        for (std::size_t t = 0; t < mesh->triangles.size(); ++t) {
            const Vec2 gh = tri_gradient(*mesh, sol.u, t);
            const Vec2 a = mesh->nodes[static_cast<std::size_t>(mesh->triangles[t].v[0])];
            const Vec2 b = mesh->nodes[static_cast<std::size_t>(mesh->triangles[t].v[1])];
            const Vec2 c = mesh->nodes[static_cast<std::size_t>(mesh->triangles[t].v[2])];
            err2 += oracle::tri_quad(a, b, c, [&](Vec2 p) {
                const Vec2 diff = exact_grad(p) - gh;
                return diff.norm2();
            });
        }
        hs.push_back(mesh->h);
        errs.push_back(std::sqrt(err2));
    }
    // least-squares slope in log-log
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        lx.push_back(std::log(hs[i]));
        ly.push_back(std::log(errs[i]));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) { mx += lx[i]; my += ly[i]; }
    mx /= static_cast<double>(lx.size());
    my /= static_cast<double>(lx.size());
    double num = 0, den = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        num += (lx[i] - mx) * (ly[i] - my);
        den += (lx[i] - mx) * (lx[i] - mx);
    }
    CHECK(num / den >= 0.9);
}

TEST_CASE("mesh grading flag refines near cell corners") {
    const Decomposition d = build_parallelogram_decomposition(0.5, M_PI_2);
    MeshOptions plain, graded;
    plain.target_h = graded.target_h = 0.25;
    graded.corner_grading = true;
    const Mesh m0 = triangulate(d, plain);
    const Mesh m1 = triangulate(d, graded);
    CHECK(m1.nodes.size() > m0.nodes.size());
    // smallest element near the center corner shrinks by ~ratio^levels
    double dmin0 = 1e300, dmin1 = 1e300;
    auto smallest_near = [&](const Mesh& m, Vec2 p) {
        double best = 1e300;
        for (std::size_t t = 0; t < m.triangles.size(); ++t) {
            const Vec2 a = m.nodes[static_cast<std::size_t>(m.triangles[t].v[0])];
            if ((a - p).norm() < 0.3) best = std::min(best, std::sqrt(m.tri_area(t)));
        }
        return best;
    };
    dmin0 = smallest_near(m0, {0.5, 0.5});
    dmin1 = smallest_near(m1, {0.5, 0.5});
    CHECK(dmin1 < 0.5 * dmin0);
}

TEST_CASE("mesh ASCII export") {
    auto mesh = square_mesh(0.5);
    const std::string txt = mesh->to_ascii();
    CHECK(txt.find("$nodes") == 0);
    CHECK(txt.find("$triangles") != std::string::npos);
    CHECK(txt.find("$boundary") != std::string::npos);
}
