#include <Eigen/Dense>
#include <memory>

#include "doctest.h"
#include "eitcorner/conductivity.hpp"
#include "eitcorner/rng.hpp"

using namespace eit;

TEST_CASE("realize: rotation parametrization") {
    // rotation invariance of the identity
    const AnisoTensor t1 = AnisoTensor::rotated_diag(1.0, 1.0, 0.7);
    CHECK(t1.m11 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(t1.m12 == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(t1.m22 == doctest::Approx(1.0).epsilon(1e-15));

    const AnisoTensor t2 = AnisoTensor::rotated_diag(1.0, -1.0, M_PI / 4.0);
    CHECK(t2.m11 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(t2.m12 == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(t2.m22 == doctest::Approx(0.0).epsilon(1e-14));

    const AnisoTensor t3 = AnisoTensor::rotated_diag(2.0, 0.0, 2.0 * M_PI);
    CHECK(t3.m11 == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(t3.m22 == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(t3.spectral_norm() == doctest::Approx(2.0));
}

TEST_CASE("realize: eigenvalue round trip and trace identity") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const double h1 = rng.uniform(-3.0, 3.0);
        const double h2 = rng.uniform(-3.0, 3.0);
        const double phi = rng.uniform_left_open(0.0, 2.0 * M_PI);
        const AnisoTensor t = AnisoTensor::rotated_diag(h1, h2, phi);
        // reconstruction residual of the parametrization
        const PerturbationCell pc{h1, h2, phi};
        const AnisoTensor t2 = pc.realize();
        CHECK((t - t2).spectral_norm() < 1e-14);
        // eigenvalues recover {h1, h2}
        const auto [lo, hi] = t.eigenvalues();
        CHECK(lo == doctest::Approx(std::min(h1, h2)).epsilon(1e-12));
        CHECK(hi == doctest::Approx(std::max(h1, h2)).epsilon(1e-12));
        // trace identity (Remark on the trace condition)
        CHECK(t.trace() == doctest::Approx(h1 + h2).epsilon(1e-13));
        // spectral norm equals max |h_i|
        CHECK(t.spectral_norm() ==
              doctest::Approx(std::max(std::abs(h1), std::abs(h2))).epsilon(1e-12));
    }
}

TEST_CASE("admissibility check") {
    auto d = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.5, M_PI_2));
    ConductivityField f = ConductivityField::constant(d, AnisoTensor::identity(), 0.5);
    CHECK(admissibility_check(f).pass);

    f.cell_tensors[1] = AnisoTensor{0.1, 0.0, 3.0};
    const auto rep = admissibility_check(f);
    CHECK(!rep.pass);
    CHECK(rep.worst_cell == 1);
    CHECK(rep.min_eigenvalue == doctest::Approx(0.1));

    ConductivityField g = ConductivityField::constant(d, AnisoTensor{2.0, 1.0, 2.0}, 0.9);
    CHECK(admissibility_check(g).pass);  // eigenvalues 1 and 3
    CHECK(g.cell_tensors[0].min_eigenvalue() == doctest::Approx(1.0));
}

TEST_CASE("sup distance: examples and metric property") {
    auto d = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.5, M_PI_2));
    const ConductivityField a = ConductivityField::constant(d, AnisoTensor::identity());
    ConductivityField b = a;
    CHECK(sup_distance(a, b) == 0.0);

    b.cell_tensors[2] = b.cell_tensors[2] + AnisoTensor{0.3, 0.0, 0.1};
    CHECK(sup_distance(a, b) == doctest::Approx(0.3));

    ConductivityField c = a;
    c.cell_tensors[0] = c.cell_tensors[0] + AnisoTensor{0.0, 1.0, 0.0};
    CHECK(sup_distance(a, c) == doctest::Approx(1.0));  // swap matrix has norm 1

    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        auto rnd = [&]() {
            ConductivityField f = a;
            for (auto& t : f.cell_tensors)
                t = AnisoTensor{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
            return f;
        };
        const ConductivityField x = rnd(), y = rnd(), z = rnd();
        CHECK(sup_distance(x, z) <= sup_distance(x, y) + sup_distance(y, z) + 1e-12);
    }
}

TEST_CASE("resample: nesting and averaging") {
    auto coarse = std::make_shared<Decomposition>(build_parallelogram_decomposition(1.0, M_PI_2));
    auto fine = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.5, M_PI_2));
    const ConductivityField f1 = ConductivityField::constant(coarse, AnisoTensor{2, 0.5, 3});

    const ResampleResult r1 = resample_onto(f1, fine);
    CHECK(!r1.averaged);
    for (const auto& t : r1.field.cell_tensors) CHECK((t - AnisoTensor{2, 0.5, 3}).spectral_norm() == 0.0);

    // nested halving: exact restriction
    ConductivityField f2 = ConductivityField::constant(fine, AnisoTensor::identity());
    f2.cell_tensors[0] = AnisoTensor{4, 0, 1};
    auto quarter = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.25, M_PI_2));
    const ResampleResult r2 = resample_onto(f2, quarter);
    CHECK(!r2.averaged);
    CHECK(r2.field.at(Vec2{0.1, 0.1}).m11 == doctest::Approx(4.0));
    CHECK(r2.field.at(Vec2{0.9, 0.9}).m11 == doctest::Approx(1.0));

    // offset grids need averaging permission
    auto offset = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.4, M_PI_2));
    CHECK_THROWS_AS(resample_onto(f2, offset), std::invalid_argument);
    const ResampleResult r3 = resample_onto(f2, offset, true);
    CHECK(r3.averaged);
    // cell [0,0.4]^2 intersects the strong cell [0,0.5]^2 fully
    CHECK(r3.field.at(Vec2{0.2, 0.2}).m11 == doctest::Approx(4.0));
    // cell [0.4,0.8]x[0,0.4]: 1/4 of area in the strong cell
    const double expect = (0.1 * 0.4 * 4.0 + 0.3 * 0.4 * 1.0) / (0.4 * 0.4);
    CHECK(r3.field.at(Vec2{0.6, 0.2}).m11 == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("perturbation sup norm identity in parallelogram mode") {
    auto d = std::make_shared<Decomposition>(build_parallelogram_decomposition(0.5, M_PI_2));
    Perturbation p = Perturbation::zeros(d, PerturbationMode::parallelogram);
    p.cells[1] = {0.7, -1.2, 2.1};
    p.cells[3] = {0.4, 0.2, 5.0};
    CHECK(sup_norm(p) == doctest::Approx(1.2).epsilon(1e-13));
}
