#include "eitcorner/conductivity.hpp"

#include <cmath>
#include <sstream>

#include "eitcorner/io_util.hpp"

namespace eit {

AnisoTensor AnisoTensor::rotated_diag(double h1, double h2, double phi) {
    const double c = std::cos(phi), s = std::sin(phi);
    // R^T diag(h1,h2) R, R = [[c,-s],[s,c]]
    return {h1 * c * c + h2 * s * s, (h2 - h1) * c * s, h1 * s * s + h2 * c * c};
}

std::pair<double, double> AnisoTensor::eigenvalues() const {
    const double tr2 = 0.5 * (m11 + m22);
    const double disc = std::sqrt(0.25 * (m11 - m22) * (m11 - m22) + m12 * m12);
    return {tr2 - disc, tr2 + disc};
}

double AnisoTensor::spectral_norm() const {
    const auto [lo, hi] = eigenvalues();
    return std::max(std::abs(lo), std::abs(hi));
}

AnisoTensor AnisoTensor::inverse() const {
    const double dt = det();
    if (std::abs(dt) < 1e-300) throw std::runtime_error("singular tensor");
    return {m22 / dt, -m12 / dt, m11 / dt};
}

ConductivityField ConductivityField::constant(std::shared_ptr<const Decomposition> d,
                                              AnisoTensor t, double delta0) {
    ConductivityField f;
    f.decomposition = std::move(d);
    f.cell_tensors.assign(f.decomposition->cells.size(), t);
    f.delta0 = delta0;
    return f;
}

AnisoTensor ConductivityField::at(Vec2 p) const {
    const int id = decomposition->locate(p);
    if (id < 0) throw std::runtime_error("point outside the decomposition");
    return cell_tensors[static_cast<std::size_t>(id)];
}

Perturbation Perturbation::zeros(std::shared_ptr<const Decomposition> d, PerturbationMode mode) {
    Perturbation p;
    p.decomposition = std::move(d);
    p.mode = mode;
    if (mode == PerturbationMode::parallelogram)
        p.cells.assign(p.decomposition->cells.size(), PerturbationCell{});
    else
        p.cell_tensors.assign(p.decomposition->cells.size(), AnisoTensor{});
    return p;
}

std::vector<AnisoTensor> realize(const Perturbation& p) {
    if (p.mode == PerturbationMode::trapezoid) return p.cell_tensors;
    std::vector<AnisoTensor> out;
    out.reserve(p.cells.size());
    for (const PerturbationCell& c : p.cells) out.push_back(c.realize());
    return out;
}

double sup_norm(const Perturbation& p) {
    double m = 0.0;
    for (const AnisoTensor& t : realize(p)) m = std::max(m, t.spectral_norm());
    return m;
}

AnisoTensor eval_perturbation(const Perturbation& p, Vec2 x) {
    const int id = p.decomposition->locate(x);
    if (id < 0) return AnisoTensor{};
    if (p.mode == PerturbationMode::trapezoid)
        return p.cell_tensors[static_cast<std::size_t>(id)];
    return p.cells[static_cast<std::size_t>(id)].realize();
}

AdmissibilityReport admissibility_check(const ConductivityField& gamma) {
    AdmissibilityReport rep;
    rep.min_eigenvalue = 1e300;
    for (std::size_t i = 0; i < gamma.cell_tensors.size(); ++i) {
        const double e = gamma.cell_tensors[i].min_eigenvalue();
        if (e < rep.min_eigenvalue) {
            rep.min_eigenvalue = e;
            rep.worst_cell = static_cast<int>(i);
        }
    }
    rep.pass = rep.min_eigenvalue >= gamma.delta0;
    return rep;
}

double sup_distance(const ConductivityField& a, const ConductivityField& b) {
    if (a.decomposition.get() != b.decomposition.get() &&
        a.cell_tensors.size() != b.cell_tensors.size())
        throw std::invalid_argument("sup_distance: mismatched decompositions");
    double m = 0.0;
    for (std::size_t i = 0; i < a.cell_tensors.size(); ++i)
        m = std::max(m, (a.cell_tensors[i] - b.cell_tensors[i]).spectral_norm());
    return m;
}

ResampleResult resample_onto(const ConductivityField& gamma,
                             std::shared_ptr<const Decomposition> target,
                             bool allow_averaging) {
    const Decomposition& A = *gamma.decomposition;
    ResampleResult res;
    res.field.decomposition = target;
    res.field.delta0 = gamma.delta0;
    res.field.cell_tensors.resize(target->cells.size());
    for (const Cell& bc : target->cells) {
        // nesting test: all vertices and the centroid in one A-cell
        const int host = A.locate(bc.centroid());
        bool nested = host >= 0;
        if (nested) {
            const Cell& ac = A.cells[static_cast<std::size_t>(host)];
            for (const Vec2& v : bc.vertices)
                if (!ac.contains(v, 1e-9)) { nested = false; break; }
        }
        if (nested) {
            res.field.cell_tensors[static_cast<std::size_t>(bc.id)] =
                gamma.cell_tensors[static_cast<std::size_t>(host)];
            continue;
        }
        if (!allow_averaging)
            throw std::invalid_argument(
                "resample_onto: non-nested cells; averaging not permitted");
        res.averaged = true;
        AnisoTensor acc{};
        double wsum = 0.0;
        for (const Cell& ac : A.cells) {
            double w = 0.0;
            for (const Polygon& ap : ac.convex_parts)
                for (const Polygon& bp : bc.convex_parts) w += intersection_area_convex(bp, ap);
            if (w > 0.0) {
                acc = acc + gamma.cell_tensors[static_cast<std::size_t>(ac.id)] * w;
                wsum += w;
            }
        }
        if (wsum <= 0.0) throw std::runtime_error("resample_onto: cell not covered");
        res.field.cell_tensors[static_cast<std::size_t>(bc.id)] = acc * (1.0 / wsum);
    }
    return res;
}

std::string ConductivityField::to_json() const {
    std::ostringstream os;
    os << "{\"decomposition\":{\"kind\":\"" << decomp_kind_name(decomposition->kind)
       << "\",\"r\":" << fmt_g17(decomposition->r) << "},\"delta0\":" << fmt_g17(delta0)
       << ",\"cells\":{";
    for (std::size_t i = 0; i < cell_tensors.size(); ++i) {
        if (i) os << ",";
        os << "\"" << i << "\":{\"m11\":" << fmt_g17(cell_tensors[i].m11)
           << ",\"m12\":" << fmt_g17(cell_tensors[i].m12)
           << ",\"m22\":" << fmt_g17(cell_tensors[i].m22) << "}";
    }
    os << "}}";
    return os.str();
}

std::string Perturbation::to_json() const {
    std::ostringstream os;
    os << "{\"mode\":\"" << (mode == PerturbationMode::parallelogram ? "parallelogram" : "trapezoid")
       << "\",\"cells\":{";
    bool first = true;
    if (mode == PerturbationMode::parallelogram) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (cells[i].h1 == 0.0 && cells[i].h2 == 0.0) continue;
            if (!first) os << ",";
            first = false;
            os << "\"" << i << "\":{\"h1\":" << fmt_g17(cells[i].h1)
               << ",\"h2\":" << fmt_g17(cells[i].h2) << ",\"phi\":" << fmt_g17(cells[i].phi)
               << "}";
        }
    } else {
        for (std::size_t i = 0; i < cell_tensors.size(); ++i) {
            const AnisoTensor& t = cell_tensors[i];
            if (t.m11 == 0.0 && t.m12 == 0.0 && t.m22 == 0.0) continue;
            if (!first) os << ",";
            first = false;
            os << "\"" << i << "\":{\"m11\":" << fmt_g17(t.m11) << ",\"m12\":" << fmt_g17(t.m12)
               << ",\"m22\":" << fmt_g17(t.m22) << "}";
        }
    }
    os << "}}";
    return os.str();
}

}  // namespace eit
