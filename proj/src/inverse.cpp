#include "eitcorner/inverse.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>

#include "eitcorner/io_util.hpp"
#include "eitcorner/threading.hpp"

namespace eit {

Perturbation PerturbationBasis::realize_coeffs(const std::vector<double>& c) const {
    if (c.size() != elements.size()) throw std::invalid_argument("coefficient size mismatch");
    Perturbation p = Perturbation::zeros(decomposition, mode);
    for (std::size_t k = 0; k < elements.size(); ++k) {
        const Element& e = elements[k];
        if (mode == PerturbationMode::parallelogram) {
            auto& cell = p.cells[static_cast<std::size_t>(e.cell)];
            cell.phi = e.phi;
            (e.comp == 0 ? cell.h1 : cell.h2) += c[k];
        } else {
            auto& t = p.cell_tensors[static_cast<std::size_t>(e.cell)];
            if (e.comp == 0) t.m11 += c[k];
            else if (e.comp == 1) t.m22 += c[k];
            else t.m12 += c[k];
        }
    }
    return p;
}

double PerturbationBasis::coeff_sup_norm(const std::vector<double>& c) const {
    return sup_norm(realize_coeffs(c));
}

PerturbationBasis make_parallelogram_basis(std::shared_ptr<const Decomposition> d,
                                           const std::vector<int>& support_cells,
                                           const std::vector<double>& phis) {
    if (support_cells.empty()) throw std::invalid_argument("empty perturbation basis");
    if (support_cells.size() != phis.size())
        throw std::invalid_argument("one phi per support cell required");
    PerturbationBasis b;
    b.decomposition = std::move(d);
    b.mode = PerturbationMode::parallelogram;
    for (std::size_t i = 0; i < support_cells.size(); ++i) {
        const double area =
            b.decomposition->cells[static_cast<std::size_t>(support_cells[i])].area();
        for (int comp = 0; comp < 2; ++comp) {
            b.elements.push_back({support_cells[i], comp, phis[i]});
            b.weights.push_back(area);
        }
    }
    return b;
}

PerturbationBasis make_trapezoid_basis(std::shared_ptr<const Decomposition> d,
                                       const std::vector<int>& support_cells) {
    if (support_cells.empty()) throw std::invalid_argument("empty perturbation basis");
    PerturbationBasis b;
    b.decomposition = std::move(d);
    b.mode = PerturbationMode::trapezoid;
    for (int cell : support_cells) {
        const double area = b.decomposition->cells[static_cast<std::size_t>(cell)].area();
        for (int comp = 0; comp < 3; ++comp) {
            b.elements.push_back({cell, comp, 2.0 * M_PI});
            b.weights.push_back(area);
        }
    }
    return b;
}

// ---------------------------------------------------------------------------
// DerivativeMap / certificate
// ---------------------------------------------------------------------------

DerivativeMap::DerivativeMap(std::shared_ptr<const ForwardOperator> forward,
                             PerturbationBasis basis)
    : forward_(std::move(forward)), basis_(std::move(basis)) {
    if (basis_.size() == 0) throw std::invalid_argument("empty perturbation basis");
    const Eigen::LLT<Eigen::MatrixXd> ln(forward_->gram_neumann());
    const Eigen::LLT<Eigen::MatrixXd> ld(forward_->gram_dirichlet());
    if (ln.info() != Eigen::Success || ld.info() != Eigen::Success)
        throw std::runtime_error("rank-deficient gram matrices");
    const Eigen::MatrixXd lnU = ln.matrixU();
    const Eigen::MatrixXd ldU = ld.matrixU();

    weighted_cols_.resize(basis_.size());
    const Mesh& mesh = forward_->mesh();
    for (std::size_t k = 0; k < basis_.size(); ++k) {
        std::vector<double> c(basis_.size(), 0.0);
        c[k] = 1.0;
        const Perturbation p = basis_.realize_coeffs(c);
        const std::vector<AnisoTensor> h_tri = perturbation_on_mesh(mesh, p);
        const Eigen::MatrixXd dlam = forward_->frechet_apply(h_tri);
        // weighted representation: L_D^T dΛ L_N^{-T}
        Eigen::MatrixXd m = ldU * dlam;
        m = lnU.transpose()
                .triangularView<Eigen::Lower>()
                .solve(m.transpose())
                .transpose();
        weighted_cols_[k] = m;
    }
    const Eigen::Index rows = weighted_cols_[0].size();
    stacked_.resize(rows, static_cast<Eigen::Index>(basis_.size()));
    for (std::size_t k = 0; k < basis_.size(); ++k)
        stacked_.col(static_cast<Eigen::Index>(k)) =
            Eigen::Map<const Eigen::VectorXd>(weighted_cols_[k].data(), rows);
}

Eigen::MatrixXd DerivativeMap::weighted_matrix(const std::vector<double>& c) const {
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(weighted_cols_[0].rows(), weighted_cols_[0].cols());
    for (std::size_t k = 0; k < basis_.size(); ++k) m += c[k] * weighted_cols_[k];
    return m;
}

double DerivativeMap::op_norm_at(const std::vector<double>& c) const {
    const Eigen::MatrixXd m = weighted_matrix(c);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

namespace {

// minimize the convex function f over a face of the unit box by cyclic
// coordinate descent with golden-section line search
double face_minimize(const std::function<double(const std::vector<double>&)>& f,
                     std::vector<double>& c, int fixed) {
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double best = f(c);
    for (int sweep = 0; sweep < 6; ++sweep) {
        double improved = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (static_cast<int>(i) == fixed) continue;
            double lo = -1.0, hi = 1.0;
            double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
            auto eval = [&](double x) {
                const double keep = c[i];
                c[i] = x;
                const double v = f(c);
                c[i] = keep;
                return v;
            };
            double f1 = eval(x1), f2 = eval(x2);
            for (int it = 0; it < 40; ++it) {
                if (f1 < f2) {
                    hi = x2; x2 = x1; f2 = f1;
                    x1 = hi - gr * (hi - lo);
                    f1 = eval(x1);
                } else {
                    lo = x1; x1 = x2; f1 = f2;
                    x2 = lo + gr * (hi - lo);
                    f2 = eval(x2);
                }
            }
            const double xbest = 0.5 * (lo + hi);
            const double fb = eval(xbest);
            if (fb < best - 1e-15) {
                improved += best - fb;
                best = fb;
                c[i] = xbest;
            }
        }
        if (improved < 1e-13 * std::max(best, 1e-30)) break;
    }
    return best;
}

}  // namespace

InjectivityCertificate DerivativeMap::certificate(std::uint64_t seed) const {
    InjectivityCertificate cert;
    cert.n_coeffs = static_cast<int>(basis_.size());
    Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked_, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    cert.sigma_max = sv(0);
    cert.sigma_min = sv(sv.size() - 1);
    const Eigen::VectorXd vmin = svd.matrixV().col(sv.size() - 1);
    cert.sigma_min_direction.assign(vmin.data(), vmin.data() + vmin.size());

    // box minimization of the operator norm over ||c||_inf = 1
    auto fn = [&](const std::vector<double>& c) { return op_norm_at(c); };
    const std::size_t n = basis_.size();
    double best = 1e300;
    std::vector<double> best_c;
    Rng rng(seed);
    std::vector<std::vector<double>> results(2 * n);
    std::vector<double> values(2 * n, 0.0);
    parallel_for(2 * n, [&](std::size_t fi) {
        const int coord = static_cast<int>(fi / 2);
        const double sign = (fi % 2 == 0) ? 1.0 : -1.0;
        Rng local = Rng::for_sample(seed, fi);
        double face_best = 1e300;
        std::vector<double> face_c;
        for (int start = 0; start < 3; ++start) {
            std::vector<double> c(n, 0.0);
            c[static_cast<std::size_t>(coord)] = sign;
            if (start == 1) {
                // start at the scaled Euclidean minimizer
                double mx = 0.0;
                for (std::size_t i = 0; i < n; ++i)
                    mx = std::max(mx, std::abs(cert.sigma_min_direction[i]));
                if (mx > 0)
                    for (std::size_t i = 0; i < n; ++i)
                        c[i] = std::clamp(cert.sigma_min_direction[i] / mx, -1.0, 1.0);
                c[static_cast<std::size_t>(coord)] = sign;
            } else if (start == 2) {
                for (std::size_t i = 0; i < n; ++i) c[i] = local.uniform(-1.0, 1.0);
                c[static_cast<std::size_t>(coord)] = sign;
            }
            const double v = face_minimize(fn, c, coord);
            if (v < face_best) {
                face_best = v;
                face_c = c;
            }
        }
        values[fi] = face_best;
        results[fi] = face_c;
    });
    for (std::size_t fi = 0; fi < 2 * n; ++fi) {
        if (values[fi] < best) {
            best = values[fi];
            best_c = results[fi];
        }
    }
    cert.c_gamma0 = best;
    cert.box_min_direction = best_c;
    std::ostringstream bd;
    bd << (basis_.mode == PerturbationMode::parallelogram
               ? "per-cell (h1,h2) at fixed phi_c"
               : "per-cell symmetric tensor entries")
       << ", " << basis_.size() << " coefficients";
    cert.basis_description = bd.str();
    cert.norm_note =
        "sigma_min: coefficient l2 -> Hilbert-Schmidt data norm; box minimum over ||H||_inf=1 "
        "lies in [sigma_min, sigma_min*sqrt(n)] for the same data norm; c_gamma0 uses the "
        "operator data norm on the box (the stability constant's norm pair)";
    return cert;
}

std::string InjectivityCertificate::to_json() const {
    std::ostringstream os;
    os << "{\"sigma_min\":" << fmt_g17(sigma_min) << ",\"sigma_max\":" << fmt_g17(sigma_max)
       << ",\"c_gamma0\":" << fmt_g17(c_gamma0) << ",\"n_coeffs\":" << n_coeffs
       << ",\"basis\":\"" << basis_description << "\",\"norm_note\":\"" << norm_note << "\"}";
    return os.str();
}

// ---------------------------------------------------------------------------
// Measurements / reconstruction
// ---------------------------------------------------------------------------

std::vector<NeumannData> MeasurementSetup::patterns(const Mesh& mesh,
                                                    const FemOperator& op) const {
    const auto& path = mesh.sigma_path;
    if (path.size() < 3) throw std::runtime_error("sigma path too short");
    std::vector<double> arc(path.size(), 0.0);
    for (std::size_t i = 1; i < path.size(); ++i)
        arc[i] = arc[i - 1] + (mesh.nodes[static_cast<std::size_t>(path[i])] -
                               mesh.nodes[static_cast<std::size_t>(path[i - 1])]).norm();
    const double L = arc.back();
    const std::vector<double>& w = op.boundary_weight();
    std::vector<NeumannData> out;
    for (int j = 1; j <= n_patterns; ++j) {
        NeumannData f;
        f.values.assign(mesh.nodes.size(), 0.0);
        for (std::size_t i = 0; i < path.size(); ++i)
            f.values[static_cast<std::size_t>(path[i])] = std::cos(j * M_PI * arc[i] / L);
        // exact discrete zero mean, support kept inside the closed sigma arc
        double num = 0.0, den = 0.0;
        for (std::size_t i = 1; i + 1 < path.size(); ++i) {
            num += w[static_cast<std::size_t>(path[i])] *
                   f.values[static_cast<std::size_t>(path[i])];
            den += w[static_cast<std::size_t>(path[i])];
        }
        num += w[static_cast<std::size_t>(path.front())] *
               f.values[static_cast<std::size_t>(path.front())];
        num += w[static_cast<std::size_t>(path.back())] *
               f.values[static_cast<std::size_t>(path.back())];
        const double shift = num / den;
        for (std::size_t i = 1; i + 1 < path.size(); ++i)
            f.values[static_cast<std::size_t>(path[i])] -= shift;
        // endpoints untouched carry their cosine values; rebalance on them is
        // not allowed (support), so push the residue onto the interior nodes
        const double resid = op.boundary_integral(f.values);
        if (std::abs(resid) > 1e-13) {
            for (std::size_t i = 1; i + 1 < path.size(); ++i)
                f.values[static_cast<std::size_t>(path[i])] -=
                    resid / den * 1.0;
        }
        out.push_back(std::move(f));
    }
    return out;
}

Eigen::MatrixXd MeasurementSetup::data_matrix(const Mesh& mesh, const FemOperator& op) const {
    const std::vector<NeumannData> f = patterns(mesh, op);
    std::vector<FemSolution> sols(f.size());
    parallel_for(f.size(), [&](std::size_t j) { sols[j] = op.solve_neumann(f[j]); });
    Eigen::MatrixXd d(n_patterns, n_patterns);
    for (int i = 0; i < n_patterns; ++i)
        for (int j = 0; j < n_patterns; ++j)
            d(i, j) = op.boundary_pairing(f[static_cast<std::size_t>(i)].values,
                                          sols[static_cast<std::size_t>(j)].u);
    return d;
}

Reconstructor::Reconstructor(std::shared_ptr<const Mesh> mesh, ConductivityField gamma0,
                             PerturbationBasis basis, MeasurementSetup meas)
    : mesh_(std::move(mesh)), gamma0_(std::move(gamma0)), basis_(std::move(basis)), meas_(meas) {
    gamma0_tri_ = tensors_on_mesh(*mesh_, gamma0_);
    // area-averaged background per support cell (for the projection)
    std::set<int> cells;
    for (const auto& e : basis_.elements) cells.insert(e.cell);
    gamma0_cellavg_.assign(basis_.decomposition->cells.size(), AnisoTensor{});
    const ResampleResult rs = resample_onto(gamma0_, basis_.decomposition, true);
    gamma0_cellavg_ = rs.field.cell_tensors;
}

Eigen::MatrixXd Reconstructor::synthesize_data(std::shared_ptr<const Mesh> data_mesh,
                                               const ConductivityField& gamma0,
                                               const PerturbationBasis& basis,
                                               const std::vector<double>& c_true,
                                               const MeasurementSetup& meas) {
    const Perturbation p = basis.realize_coeffs(c_true);
    const std::vector<AnisoTensor> tri = tensors_on_mesh(*data_mesh, gamma0, &p);
    FemOperator op(*data_mesh, tri);
    return meas.data_matrix(*data_mesh, op);
}

Eigen::MatrixXd Reconstructor::forward_data(const std::vector<double>& c) const {
    const Perturbation p = basis_.realize_coeffs(c);
    std::vector<AnisoTensor> tri = gamma0_tri_;
    for (std::size_t t = 0; t < tri.size(); ++t) {
        const Vec2 ctr = (1.0 / 3.0) * (mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[0])] +
                                        mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[1])] +
                                        mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[2])]);
        tri[t] = tri[t] + eval_perturbation(p, ctr);
    }
    FemOperator op(*mesh_, tri);
    return meas_.data_matrix(*mesh_, op);
}

Eigen::MatrixXd Reconstructor::jacobian(const std::vector<double>& c) const {
    const Perturbation p = basis_.realize_coeffs(c);
    std::vector<AnisoTensor> tri = gamma0_tri_;
    for (std::size_t t = 0; t < tri.size(); ++t) {
        const Vec2 ctr = (1.0 / 3.0) * (mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[0])] +
                                        mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[1])] +
                                        mesh_->nodes[static_cast<std::size_t>(mesh_->triangles[t].v[2])]);
        tri[t] = tri[t] + eval_perturbation(p, ctr);
    }
    FemOperator op(*mesh_, tri);
    const std::vector<NeumannData> f = meas_.patterns(*mesh_, op);
    std::vector<FemSolution> base(f.size());
    parallel_for(f.size(), [&](std::size_t j) { base[j] = op.solve_neumann(f[j]); });

    const int np = meas_.n_patterns;
    Eigen::MatrixXd jac(np * np, static_cast<Eigen::Index>(basis_.size()));
    std::vector<Eigen::VectorXd> cols(basis_.size());
    parallel_for(basis_.size(), [&](std::size_t k) {
        std::vector<double> unit(basis_.size(), 0.0);
        unit[k] = 1.0;
        const Perturbation hb = basis_.realize_coeffs(unit);
        const std::vector<AnisoTensor> h_tri = perturbation_on_mesh(*mesh_, hb);
        Eigen::VectorXd col(np * np);
        for (int j = 0; j < np; ++j) {
            const FemSolution up = op.solve_adjoint_source(h_tri, base[static_cast<std::size_t>(j)]);
            for (int i = 0; i < np; ++i)
                col(i * np + j) =
                    op.boundary_pairing(f[static_cast<std::size_t>(i)].values, up.u);
        }
        cols[k] = col;
    });
    for (std::size_t k = 0; k < basis_.size(); ++k) jac.col(static_cast<Eigen::Index>(k)) = cols[k];
    return jac;
}

std::vector<double> Reconstructor::project_admissible(std::vector<double> c,
                                                      double delta0) const {
    const Perturbation p = basis_.realize_coeffs(c);
    const std::vector<AnisoTensor> h = realize(p);
    bool changed = false;
    std::vector<AnisoTensor> clipped(h.size());
    for (std::size_t i = 0; i < h.size(); ++i) {
        const AnisoTensor g = gamma0_cellavg_[i] + h[i];
        const auto [lo, hi] = g.eigenvalues();
        if (lo >= delta0) {
            clipped[i] = h[i];
            continue;
        }
        changed = true;
        // clip eigenvalues of gamma0+H at delta0, keep the eigenframe
        const double tr2 = 0.5 * (g.m11 + g.m22);
        const double dd = std::sqrt(0.25 * (g.m11 - g.m22) * (g.m11 - g.m22) + g.m12 * g.m12);
        Vec2 v = (dd > 1e-15) ? Vec2{g.m12, lo - g.m11} : Vec2{1.0, 0.0};
        (void)tr2;
        if (v.norm() < 1e-15) v = {1.0, 0.0};
        v = (1.0 / v.norm()) * v;
        const double lo_c = std::max(lo, delta0), hi_c = std::max(hi, delta0);
        AnisoTensor gc;
        gc.m11 = lo_c * v.x * v.x + hi_c * v.y * v.y;
        gc.m22 = lo_c * v.y * v.y + hi_c * v.x * v.x;
        gc.m12 = (lo_c - hi_c) * v.x * v.y;
        clipped[i] = gc - gamma0_cellavg_[i];
    }
    if (!changed) return c;
    std::vector<double> out(c.size(), 0.0);
    for (std::size_t k = 0; k < basis_.elements.size(); ++k) {
        const auto& e = basis_.elements[k];
        const AnisoTensor& hc = clipped[static_cast<std::size_t>(e.cell)];
        if (basis_.mode == PerturbationMode::trapezoid) {
            out[k] = (e.comp == 0) ? hc.m11 : (e.comp == 1 ? hc.m22 : hc.m12);
        } else {
            // re-express in the fixed phi_c frame, dropping the off-diagonal
            const double cphi = std::cos(e.phi), sphi = std::sin(e.phi);
            const double h1 = cphi * cphi * hc.m11 - 2 * cphi * sphi * hc.m12 + sphi * sphi * hc.m22;
            const double h2 = sphi * sphi * hc.m11 + 2 * cphi * sphi * hc.m12 + cphi * cphi * hc.m22;
            out[k] = (e.comp == 0) ? h1 : h2;
        }
    }
    return out;
}

std::pair<std::vector<double>, IterationTrace> Reconstructor::run(
    const Eigen::MatrixXd& data, const IterationConfig& cfg, std::vector<double> c,
    const std::vector<double>* c_truth) const {
    IterationTrace trace;
    const Eigen::Map<const Eigen::VectorXd> dvec(data.data(), data.size());
    Eigen::VectorXd w(static_cast<Eigen::Index>(basis_.weights.size()));
    for (std::size_t i = 0; i < basis_.weights.size(); ++i)
        w(static_cast<Eigen::Index>(i)) = basis_.weights[i];

    double lambda = cfg.lambda0;
    double min_res = 1e300;
    for (int it = 0; it < cfg.max_iters; ++it) {
        const Eigen::MatrixXd Fc = forward_data(c);
        const Eigen::Map<const Eigen::VectorXd> fvec(Fc.data(), Fc.size());
        const Eigen::VectorXd r = fvec - dvec;
        const double res = r.norm();
        min_res = std::min(min_res, res);

        IterationTrace::Step step;
        step.residual = res;
        if (c_truth) {
            std::vector<double> diff(c.size());
            for (std::size_t i = 0; i < c.size(); ++i) diff[i] = c[i] - (*c_truth)[i];
            step.error_sup = basis_.coeff_sup_norm(diff);
        }

        if (res > 10.0 * min_res && it > 0) {
            trace.diverged = true;
            trace.steps.push_back(step);
            break;
        }
        if (res <= cfg.tol_residual) {
            trace.steps.push_back(step);
            break;
        }

        const Eigen::MatrixXd J = jacobian(c);
        Eigen::VectorXd delta;
        if (cfg.scheme == Scheme::landweber) {
            const Eigen::VectorXd g = J.transpose() * r;  // F'* r in the weighted metric
            delta = -cfg.mu * (g.array() / w.array()).matrix();
        } else {
            // damped Gauss-Newton with the area metric as damping
            for (int attempt = 0;; ++attempt) {
                Eigen::MatrixXd nrm = J.transpose() * J;
                nrm.diagonal() += lambda * w;
                const Eigen::LDLT<Eigen::MatrixXd> ldlt(nrm);
                if (ldlt.info() != Eigen::Success)
                    throw std::runtime_error("LM normal equations singular");
                delta = ldlt.solve(-J.transpose() * r);
                std::vector<double> trial = c;
                for (std::size_t i = 0; i < c.size(); ++i)
                    trial[i] += delta(static_cast<Eigen::Index>(i));
                if (cfg.project) trial = project_admissible(trial, cfg.delta0);
                const Eigen::MatrixXd Ft = forward_data(trial);
                const Eigen::Map<const Eigen::VectorXd> ftv(Ft.data(), Ft.size());
                if ((ftv - dvec).norm() <= res || attempt >= 25) {
                    lambda = std::max(lambda * cfg.lm_decrease, 1e-14);
                    break;
                }
                lambda *= cfg.lm_increase;
            }
        }
        std::vector<double> c_next = c;
        for (std::size_t i = 0; i < c.size(); ++i) c_next[i] += delta(static_cast<Eigen::Index>(i));
        if (cfg.project) c_next = project_admissible(c_next, cfg.delta0);

        Eigen::VectorXd actual(static_cast<Eigen::Index>(c.size()));
        for (std::size_t i = 0; i < c.size(); ++i)
            actual(static_cast<Eigen::Index>(i)) = c_next[i] - c[i];
        step.step_norm = actual.norm();
        trace.steps.push_back(step);
        c = std::move(c_next);
        if (step.step_norm <= cfg.tol_step) break;
    }
    if (!cfg.project) {
        // flag non-admissible iterates instead of fixing them
        const Perturbation p = basis_.realize_coeffs(c);
        const std::vector<AnisoTensor> h = realize(p);
        for (std::size_t i = 0; i < h.size(); ++i)
            if ((gamma0_cellavg_[i] + h[i]).min_eigenvalue() < cfg.delta0)
                trace.non_admissible = true;
    }
    return {c, trace};
}

std::string IterationTrace::to_csv() const {
    CsvWriter csv({"iter", "residual", "error", "step"});
    for (std::size_t i = 0; i < steps.size(); ++i)
        csv.add_row({std::to_string(i), fmt_g17(steps[i].residual), fmt_g17(steps[i].error_sup),
                     fmt_g17(steps[i].step_norm)});
    return csv.str();
}

// ---------------------------------------------------------------------------
// Lipschitz probe
// ---------------------------------------------------------------------------

LipschitzProbeReport lipschitz_probe(const DerivativeMap& dmap, const ConductivityField& gamma0,
                                     double delta, int n_pairs, std::uint64_t seed) {
    LipschitzProbeReport rep;
    rep.pairs = n_pairs;
    if (n_pairs <= 0) return rep;
    const InjectivityCertificate cert = dmap.certificate(seed);
    rep.c_gamma0 = cert.c_gamma0;

    const auto& basis = dmap.basis();
    const auto& fwd = dmap.forward();
    const std::size_t n = basis.size();
    std::shared_ptr<const Mesh> mesh(&fwd.mesh(), [](const Mesh*) {});
    const std::vector<AnisoTensor> g0_tri = tensors_on_mesh(fwd.mesh(), gamma0);

    auto nd_of = [&](const std::vector<double>& c) {
        const Perturbation p = basis.realize_coeffs(c);
        std::vector<AnisoTensor> tri = g0_tri;
        for (std::size_t t = 0; t < tri.size(); ++t) {
            const Vec2 ctr =
                (1.0 / 3.0) * (fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[0])] +
                               fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[1])] +
                               fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[2])]);
            tri[t] = tri[t] + eval_perturbation(p, ctr);
        }
        ForwardOperator f(mesh, tri);
        return f.nd_map().matrix;
    };

    Rng rng(seed);
    double c3 = 0.0, c4 = 0.0;
    for (int j = 0; j < n_pairs; ++j) {
        std::vector<double> ct(n), cs(n);
        if (j == 0 && !cert.box_min_direction.empty()) {
            // pair along the worst (box-minimizing) direction
            for (std::size_t i = 0; i < n; ++i) {
                ct[i] = delta * cert.box_min_direction[i];
                cs[i] = -delta * cert.box_min_direction[i];
            }
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                ct[i] = rng.uniform(-delta, delta);
                cs[i] = rng.uniform(-delta, delta);
            }
        }
        std::vector<double> diff(n);
        for (std::size_t i = 0; i < n; ++i) diff[i] = ct[i] - cs[i];
        const double dist = basis.coeff_sup_norm(diff);
        if (dist < 1e-15) continue;
        const Eigen::MatrixXd nd_t = nd_of(ct), nd_s = nd_of(cs);
        const Eigen::MatrixXd fd = nd_t - nd_s;
        const double dF = operator_norm(fd, fwd.gram_neumann(), fwd.gram_dirichlet());
        rep.ratios.push_back(dist / dF);
        rep.max_ratio = std::max(rep.max_ratio, dist / dF);
        // probe C3 (Taylor remainder) and C4 (derivative Lipschitz) on the pair
        const Perturbation pdiff = basis.realize_coeffs(diff);
        const Eigen::MatrixXd lin =
            fwd.frechet_apply(perturbation_on_mesh(fwd.mesh(), pdiff));
        c3 = std::max(c3, operator_norm(fd - lin, fwd.gram_neumann(), fwd.gram_dirichlet()) /
                              (dist * dist));
        // directional estimate of ||F'(tau)-F'(gamma0)|| / ||tau-gamma0||
        const double dist0 = basis.coeff_sup_norm(ct);
        if (dist0 > 1e-15) {
            std::vector<AnisoTensor> tri_t = g0_tri;
            const Perturbation pt = basis.realize_coeffs(ct);
            for (std::size_t t = 0; t < tri_t.size(); ++t) {
                const Vec2 ctr = (1.0 / 3.0) *
                                 (fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[0])] +
                                  fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[1])] +
                                  fwd.mesh().nodes[static_cast<std::size_t>(fwd.mesh().triangles[t].v[2])]);
                tri_t[t] = tri_t[t] + eval_perturbation(pt, ctr);
            }
            ForwardOperator ft(mesh, tri_t);
            const Eigen::MatrixXd da = ft.frechet_apply(perturbation_on_mesh(fwd.mesh(), pdiff));
            const Eigen::MatrixXd db = fwd.frechet_apply(perturbation_on_mesh(fwd.mesh(), pdiff));
            c4 = std::max(c4, operator_norm(da - db, fwd.gram_neumann(), fwd.gram_dirichlet()) /
                                  (dist * dist0));
        }
    }
    rep.c3 = c3;
    rep.c4 = c4;
    // D = C_{gamma0} - C4 (delta + eps), E = 1 - 2 C3 delta / D, eps = 0 here
    const double D = rep.c_gamma0 - rep.c4 * delta;
    if (D > 0.0) {
        const double E = 1.0 - 2.0 * rep.c3 * delta / D;
        if (E > 0.0) rep.bound_de = 1.0 / (D * E);
    }
    if (rep.bound_de > 0.0)
        for (double r : rep.ratios)
            if (r > rep.bound_de) rep.bound_respected = false;
    return rep;
}

std::string LipschitzProbeReport::to_json() const {
    std::ostringstream os;
    os << "{\"max_ratio\":" << fmt_g17(max_ratio) << ",\"c_gamma0\":" << fmt_g17(c_gamma0)
       << ",\"C3\":" << fmt_g17(c3) << ",\"C4\":" << fmt_g17(c4)
       << ",\"bound_1_over_DE\":" << fmt_g17(bound_de)
       << ",\"bound_respected\":" << (bound_respected ? "true" : "false") << ",\"pairs\":" << pairs
       << "}";
    return os.str();
}

}  // namespace eit
