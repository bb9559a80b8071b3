#include "eitcorner/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "eitcorner/io_util.hpp"
#include "eitcorner/mesh.hpp"

namespace eit {

namespace {

// support cells closest to the domain interior (deterministic order)
std::vector<int> pick_interior_cells(const Decomposition& d, int count) {
    Vec2 center{};
    double areasum = 0.0;
    for (const Cell& c : d.cells) {
        const double a = c.area();
        center = center + a * c.centroid();
        areasum += a;
    }
    center = (1.0 / areasum) * center;
    std::vector<std::pair<double, int>> ranked;
    for (const Cell& c : d.cells) ranked.push_back({(c.centroid() - center).norm(), c.id});
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    for (int i = 0; i < count && i < static_cast<int>(ranked.size()); ++i)
        out.push_back(ranked[static_cast<std::size_t>(i)].second);
    std::sort(out.begin(), out.end());
    return out;
}

void wilson_interval(int k, int n, double& lo, double& hi) {
    if (n == 0) {
        lo = hi = 0.0;
        return;
    }
    const double z = 1.959963984540054;
    const double p = static_cast<double>(k) / n;
    const double denom = 1.0 + z * z / n;
    const double center = (p + z * z / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom;
    lo = std::max(0.0, center - half);
    hi = std::min(1.0, center + half);
}

SampleOutcome run_parallelogram_sample(const SampleConfig& cfg, int index) {
    SampleOutcome out;
    out.index = index;
    Rng rng = Rng::for_sample(cfg.rng_seed, static_cast<std::uint64_t>(index));
    out.r = rng.uniform_left_open(0.0, 1.0);
    out.theta = cfg.theta;

    auto bg = std::make_shared<Decomposition>(
        build_parallelogram_decomposition(cfg.r0, cfg.theta));
    auto pert = std::make_shared<Decomposition>(
        build_parallelogram_decomposition(out.r, cfg.theta));

    const std::vector<int> support = pick_interior_cells(*pert, cfg.support_cells);
    // Theorem 1.1 samples the angle vector lazily: only angles actually
    // assigned to realized cells are drawn.
    for (std::size_t i = 0; i < support.size(); ++i)
        out.phis.push_back(rng.uniform_left_open(0.0, 2.0 * M_PI));

    // sufficient-condition flags
    const ConductivityField gamma0 = ConductivityField::constant(bg, cfg.gamma0, cfg.delta0);
    out.det_min_abs = 1e300;
    for (double phi : out.phis) {
        for (const Cell& c : bg->cells) {
            const CornerReduction red =
                corner_reduction(gamma0.cell_tensors[static_cast<std::size_t>(c.id)], cfg.theta);
            out.det_min_abs = std::min(out.det_min_abs,
                                       std::abs(determinant_condition(red, phi)));
        }
    }
    out.det_flag = out.det_min_abs > 1e-12;
    const SharedCornerReport rep = shared_corner_test(*bg, *pert);
    out.irrational_flag = !rep.rational_flag;

    MeshOptions mo;
    mo.target_h = cfg.mesh_h;
    mo.constraint = bg.get();
    auto mesh = std::make_shared<Mesh>(triangulate(*pert, mo));
    auto fwd = std::make_shared<ForwardOperator>(mesh, tensors_on_mesh(*mesh, gamma0));
    std::vector<double> phis = out.phis;
    DerivativeMap dmap(fwd, make_parallelogram_basis(pert, support, phis));
    const InjectivityCertificate cert = dmap.certificate(cfg.rng_seed);
    out.sigma_min = cert.sigma_min;
    out.sigma_max = cert.sigma_max;
    out.pass = out.sigma_min > cfg.sigma_rel_threshold * out.sigma_max && out.det_flag &&
               out.irrational_flag;
    return out;
}

SampleOutcome run_trapezoid_sample(const SampleConfig& cfg, int index) {
    SampleOutcome out;
    out.index = index;
    Rng rng = Rng::for_sample(cfg.rng_seed, static_cast<std::uint64_t>(index));
    out.r = rng.uniform_left_open(0.0, 1.0);
    out.theta = rng.uniform(cfg.theta_lo, cfg.theta_hi);

    const TrapezoidDomain dom = build_trapezoid_domain(cfg.n_pairs, out.theta, cfg.q);
    auto bg = std::make_shared<Decomposition>(build_lateral_decomposition(dom, cfg.r0));
    auto pert = std::make_shared<Decomposition>(build_trapezoid_decomposition(dom, out.r));

    const ConductivityField gamma0 = ConductivityField::constant(bg, cfg.gamma0, cfg.delta0);
    out.trape_flag = true;
    for (const Cell& c : bg->cells) {
        const TrapezoidAngleCheck chk = trapezoid_angle_condition(
            gamma0.cell_tensors[static_cast<std::size_t>(c.id)], out.theta);
        if (!chk.pass) out.trape_flag = false;
    }
    out.irrational_flag = !rational_within(out.r / cfg.r0, 64, 1e-9).has_value() &&
                          !rational_within(cfg.q / cfg.r0, 64, 1e-9).has_value();

    const std::vector<int> support = pick_interior_cells(*pert, 1);
    MeshOptions mo;
    mo.target_h = cfg.mesh_h;
    mo.constraint = bg.get();
    auto mesh = std::make_shared<Mesh>(triangulate(*pert, mo));
    auto fwd = std::make_shared<ForwardOperator>(mesh, tensors_on_mesh(*mesh, gamma0));
    DerivativeMap dmap(fwd, make_trapezoid_basis(pert, support));
    const InjectivityCertificate cert = dmap.certificate(cfg.rng_seed);
    out.sigma_min = cert.sigma_min;
    out.sigma_max = cert.sigma_max;
    out.pass = out.sigma_min > cfg.sigma_rel_threshold * out.sigma_max && out.trape_flag &&
               out.irrational_flag;
    return out;
}

}  // namespace

MonteCarloResult run_monte_carlo(const SampleConfig& cfg) {
    if (cfg.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
    MonteCarloResult res;
    res.outcomes.resize(static_cast<std::size_t>(cfg.n_samples));
    for (int i = 0; i < cfg.n_samples; ++i) {
        SampleOutcome& out = res.outcomes[static_cast<std::size_t>(i)];
        try {
            out = (cfg.mode == PerturbationMode::parallelogram)
                      ? run_parallelogram_sample(cfg, i)
                      : run_trapezoid_sample(cfg, i);
        } catch (const std::exception& ex) {
            out.index = i;
            out.error = ex.what();
            out.pass = false;
        }
    }
    for (const SampleOutcome& o : res.outcomes) {
        if (!o.error.empty()) ++res.errors;
        if (o.pass) ++res.passes;
        if (o.error.empty() && !(o.det_flag && o.trape_flag && o.irrational_flag))
            ++res.flag_failures;
    }
    res.fraction = static_cast<double>(res.passes) / cfg.n_samples;
    wilson_interval(res.passes, cfg.n_samples, res.ci_lo, res.ci_hi);
    return res;
}

std::string MonteCarloResult::to_csv() const {
    CsvWriter csv({"index", "r", "theta", "phis", "det_flag", "trape_flag", "irrational_flag",
                   "det_min_abs", "sigma_min", "sigma_max", "pass", "error"});
    for (const SampleOutcome& o : outcomes) {
        std::ostringstream phis;
        for (std::size_t i = 0; i < o.phis.size(); ++i) {
            if (i) phis << ";";
            phis << fmt_g17(o.phis[i]);
        }
        csv.add_row({std::to_string(o.index), fmt_g17(o.r), fmt_g17(o.theta), phis.str(),
                     o.det_flag ? "1" : "0", o.trape_flag ? "1" : "0",
                     o.irrational_flag ? "1" : "0", fmt_g17(o.det_min_abs), fmt_g17(o.sigma_min),
                     fmt_g17(o.sigma_max), o.pass ? "1" : "0", o.error});
    }
    return csv.str();
}

std::string MonteCarloResult::summary_json() const {
    std::ostringstream os;
    os << "{\"n\":" << outcomes.size() << ",\"passes\":" << passes
       << ",\"flag_failures\":" << flag_failures << ",\"errors\":" << errors
       << ",\"fraction\":" << fmt_g17(fraction) << ",\"ci95\":[" << fmt_g17(ci_lo) << ","
       << fmt_g17(ci_hi) << "]}";
    return os.str();
}

AngleSweepResult angle_sweep(const AnisoTensor& gamma0, double theta, int n_grid, double r0,
                             double r_pert, double mesh_h) {
    if (n_grid < 8) throw std::invalid_argument("n_grid must be >= 8");
    AngleSweepResult res;
    res.reduction = corner_reduction(gamma0, theta);

    // optional sigma_min of a one-cell perturbation: three fixed derivative
    // solves (E11, E22, sym E12), combined per phi by linearity
    std::shared_ptr<ForwardOperator> fwd;
    std::shared_ptr<Decomposition> pert;
    std::vector<Eigen::MatrixXd> dl(3);
    int cell_id = -1;
    if (mesh_h > 0.0) {
        auto bg = std::make_shared<Decomposition>(build_parallelogram_decomposition(r0, theta));
        pert = std::make_shared<Decomposition>(build_parallelogram_decomposition(r_pert, theta));
        cell_id = pick_interior_cells(*pert, 1)[0];
        MeshOptions mo;
        mo.target_h = mesh_h;
        mo.constraint = bg.get();
        auto mesh = std::make_shared<Mesh>(triangulate(*pert, mo));
        const ConductivityField g0 = ConductivityField::constant(bg, gamma0);
        fwd = std::make_shared<ForwardOperator>(mesh, tensors_on_mesh(*mesh, g0));
        Perturbation base = Perturbation::zeros(pert, PerturbationMode::trapezoid);
        for (int comp = 0; comp < 3; ++comp) {
            Perturbation p = base;
            auto& t = p.cell_tensors[static_cast<std::size_t>(cell_id)];
            if (comp == 0) t.m11 = 1.0;
            else if (comp == 1) t.m22 = 1.0;
            else t.m12 = 1.0;
            dl[static_cast<std::size_t>(comp)] =
                fwd->frechet_apply(perturbation_on_mesh(*mesh, p));
        }
    }

    auto sigma_min_at = [&](double phi) {
        if (!fwd) return 0.0;
        // columns for unit h1 and unit h2 at angle phi
        const double c = std::cos(phi), s = std::sin(phi);
        const Eigen::MatrixXd col1 = c * c * dl[0] + s * s * dl[1] - c * s * dl[2];
        const Eigen::MatrixXd col2 = s * s * dl[0] + c * c * dl[1] + c * s * dl[2];
        const Eigen::LLT<Eigen::MatrixXd> ln(fwd->gram_neumann()), ld(fwd->gram_dirichlet());
        auto weight = [&](const Eigen::MatrixXd& m) {
            Eigen::MatrixXd w = Eigen::MatrixXd(ld.matrixU()) * m;
            return Eigen::MatrixXd(Eigen::MatrixXd(ln.matrixU())
                                       .transpose()
                                       .triangularView<Eigen::Lower>()
                                       .solve(w.transpose())
                                       .transpose());
        };
        const Eigen::MatrixXd w1 = weight(col1), w2 = weight(col2);
        Eigen::MatrixXd J(w1.size(), 2);
        J.col(0) = Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size());
        J.col(1) = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
        Eigen::BDCSVD<Eigen::MatrixXd> svd(J);
        return svd.singularValues()(svd.singularValues().size() - 1);
    };

    for (int i = 1; i <= n_grid; ++i) {
        AngleSweepRow row;
        row.phi = 2.0 * M_PI * i / n_grid;
        row.determinant = determinant_condition(res.reduction, row.phi);
        row.sigma_min = sigma_min_at(row.phi);
        res.rows.push_back(row);
    }
    // root bracketing by sign change + bisection to 1e-10
    auto det_at = [&](double phi) { return determinant_condition(res.reduction, phi); };
    const double amp = std::hypot(res.reduction.p, res.reduction.q_det);
    if (amp > 1e-14) {
        for (int i = 0; i < n_grid; ++i) {
            double a = 2.0 * M_PI * i / n_grid;
            double b = 2.0 * M_PI * (i + 1) / n_grid;
            if (i == 0) a = 1e-12;  // interval (0, 2*pi]
            double fa = det_at(a), fb = det_at(b);
            if (std::abs(fa) < 1e-14 * amp) continue;  // root counted at the left edge
            if (fa * fb > 0.0 && std::abs(fb) > 1e-14 * amp) continue;
            for (int it = 0; it < 200 && b - a > 1e-12; ++it) {
                const double mfd = 0.5 * (a + b);
                const double fm = det_at(mfd);
                if (fa * fm <= 0.0) { b = mfd; fb = fm; }
                else { a = mfd; fa = fm; }
            }
            res.roots.push_back(0.5 * (a + b));
        }
    }
    return res;
}

std::string AngleSweepResult::to_csv() const {
    CsvWriter csv({"phi", "determinant", "sigma_min"});
    for (const auto& r : rows)
        csv.add_row({fmt_g17(r.phi), fmt_g17(r.determinant), fmt_g17(r.sigma_min)});
    return csv.str();
}

RatioSweepResult ratio_sweep(const std::vector<double>& r_values, double r0,
                             const AnisoTensor& gamma0, double theta, double mesh_h,
                             std::uint64_t seed) {
    RatioSweepResult res;
    auto bg = std::make_shared<Decomposition>(build_parallelogram_decomposition(r0, theta));
    const ConductivityField g0 = ConductivityField::constant(bg, gamma0);
    for (std::size_t i = 0; i < r_values.size(); ++i) {
        RatioSweepRow row;
        row.r = r_values[i];
        row.shared_flag = rational_within(row.r / r0, 64, 1e-9).has_value();
        if (mesh_h > 0.0) {
            Rng rng = Rng::for_sample(seed, i);
            auto pert = std::make_shared<Decomposition>(
                build_parallelogram_decomposition(row.r, theta));
            const std::vector<int> support = pick_interior_cells(*pert, 1);
            const std::vector<double> phis = {rng.uniform_left_open(0.0, 2.0 * M_PI)};
            MeshOptions mo;
            mo.target_h = mesh_h;
            mo.constraint = bg.get();
            auto mesh = std::make_shared<Mesh>(triangulate(*pert, mo));
            auto fwd = std::make_shared<ForwardOperator>(mesh, tensors_on_mesh(*mesh, g0));
            DerivativeMap dmap(fwd, make_parallelogram_basis(pert, support, phis));
            row.sigma_min = dmap.certificate(seed).sigma_min;
        }
        res.rows.push_back(row);
    }
    return res;
}

std::string RatioSweepResult::to_csv() const {
    CsvWriter csv({"r", "shared_flag", "sigma_min"});
    for (const auto& r : rows)
        csv.add_row({fmt_g17(r.r), r.shared_flag ? "1" : "0", fmt_g17(r.sigma_min)});
    return csv.str();
}

}  // namespace eit
