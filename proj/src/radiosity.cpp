#include "mc2d/radiosity.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace mc2d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kNegInf = -1e300;

// Segment average of the albedo; composite Simpson fine enough for the
// oscillatory bands (period 0.05).
double average_albedo(const Scene& scene, const MeshSegment& seg,
                      const BoundaryPiece& piece) {
    const auto& mat = scene.materials[seg.material];
    if (mat.amp == 0.0) return mat.c0;
    int n = std::max(16, int(std::ceil(seg.length / mat.period * 16.0)));
    if (n % 2) ++n;
    double ds = (seg.s_hi - seg.s_lo) / n;
    double acc = mat.albedo(piece.point(seg.s_lo)) + mat.albedo(piece.point(seg.s_hi));
    for (int k = 1; k < n; ++k)
        acc += mat.albedo(piece.point(seg.s_lo + k * ds)) * (k % 2 ? 4.0 : 2.0);
    return std::clamp(acc * ds / 3.0 / (seg.s_hi - seg.s_lo), 0.0, 1.0);
}
} // namespace

std::vector<double> segment_albedos(const Scene& scene, const BoundaryMesh& mesh) {
    std::vector<double> a(mesh.size());
    for (int i = 0; i < mesh.size(); ++i)
        a[i] = average_albedo(scene, mesh.segments[i], scene.profile.pieces[mesh.segments[i].piece]);
    return a;
}

std::vector<double> segment_detector(const Scene& scene, const BoundaryMesh& mesh) {
    std::vector<double> g(mesh.size());
    for (int i = 0; i < mesh.size(); ++i)
        g[i] = scene.is_detector(mesh.segments[i].piece) ? 1.0 : 0.0;
    return g;
}

QAssembly assemble_Q(const Scene& scene, const BoundaryMesh& mesh, JacobianConvention conv) {
    const int n = mesh.size();
    QAssembly out;
    out.Q = Eigen::MatrixXd::Zero(n, n);
    out.visible.resize(n);
    std::vector<double> alpha = segment_albedos(scene, mesh);

    auto do_rows = [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const auto& si = mesh.segments[i];
            auto& vis = out.visible[i];
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const auto& sj = mesh.segments[j];
                if (!visible_points(scene.profile, si.mid, si.normal, sj.mid, sj.normal))
                    continue;
                vis.push_back(j);
                if (alpha[i] == 0.0) continue;  // visibility still needed for cells
                Vec2 vij = (sj.mid - si.mid).normalized();
                double kappa = eval_surface_kernel(si.normal, vij);
                double jac = surface_jacobian(si.mid, si.normal, sj.mid, sj.normal, conv);
                out.Q(i, j) = alpha[i] * kappa * jac * sj.length;
            }
        }
    };
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    if (n < 64 || workers == 1) {
        do_rows(0, n);
    } else {
        std::vector<std::thread> ts;
        int chunk = (n + int(workers) - 1) / int(workers);
        for (unsigned w = 0; w < workers; ++w) {
            int lo = int(w) * chunk, hi = std::min(n, lo + chunk);
            if (lo < hi) ts.emplace_back(do_rows, lo, hi);
        }
        for (auto& t : ts) t.join();
    }
    for (int i = 0; i < n; ++i)
        out.norm_inf = std::max(out.norm_inf, out.Q.row(i).sum());
    out.norm_flagged = out.norm_inf >= 1.0;
    return out;
}

std::vector<double> solve_phi(const Eigen::MatrixXd& Q, const std::vector<double>& rg,
                              SolveMethod method) {
    const int n = int(Q.rows());
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rg.data(), n);
    Eigen::VectorXd phi;
    if (method.kind == SolveMethod::Kind::Direct) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Q;
        phi = A.partialPivLu().solve(b);
        if (!phi.allFinite())
            throw std::runtime_error("solve_phi: singular system (I - Q)");
    } else {
        phi = b;
        Eigen::VectorXd term = b;
        for (int k = 0; k < method.neumann_terms; ++k) {
            term = Q * term;
            phi += term;
        }
    }
    // Contraction polish, final sweep in plain ascending order so that
    // phi_i - rg_i equals the ascending row sum bit-for-bit.
    phi = Q * phi + b;
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += Q(i, j) * phi[j];
        out[i] = s + rg[i];
    }
    // residual diagnostic against the pre-sweep iterate
    double num = 0.0, den = 1e-300;
    for (int i = 0; i < n; ++i) {
        num = std::max(num, std::abs(out[i] - phi[i]));
        den = std::max(den, std::abs(out[i]));
    }
    if (method.kind == SolveMethod::Kind::Direct && num > 1e-10 * den)
        throw std::runtime_error("solve_phi: residual " + std::to_string(num / den) +
                                 " exceeds 1e-10");
    return out;
}

SourceTable build_source_table(const BoundaryProfile& profile, const BoundaryMesh& mesh,
                               const std::vector<double>& phi, const SourceSpec& source,
                               double h) {
    SourceTable t;
    if (!source.present) return t;
    t.n = std::max(1, int(std::ceil((source.x_hi - source.x_lo) / h)));
    t.x_lo = source.x_lo;
    t.dx = (source.x_hi - source.x_lo) / t.n;
    t.cum_mass.resize(t.n);
    t.s_h.resize(t.n);
    t.phi_k.resize(t.n);
    double cum = 0.0;
    for (int k = 0; k < t.n; ++k) {
        double a = t.x_lo + k * t.dx, b = a + t.dx;
        double band = source.band_integral(a, b);
        t.s_h[k] = band / t.dx;
        Vec2 start{0.5 * (a + b), source.y_top};
        Hit hit = cast_to_boundary(profile, mesh, start, {0.0, -1.0});
        t.phi_k[k] = phi[hit.segment];
        cum += band * t.phi_k[k];
        t.cum_mass[k] = cum;
    }
    t.total = cum;
    return t;
}

double AdjointField::row_log_density(int i, double ang) const {
    const Row& r = rows[i];
    if (r.mass.empty()) return kNegInf;
    // reduce into the hemisphere window [hem_lo, hem_lo + 2 pi)
    double a = ang;
    while (a < r.hem_lo) a += 2.0 * kPi;
    while (a >= r.hem_lo + 2.0 * kPi) a -= 2.0 * kPi;
    if (a > r.hem_lo + kPi) return kNegInf;  // outward
    auto it = std::upper_bound(r.lo.begin(), r.lo.end(), a);
    if (it == r.lo.begin()) return kNegInf;
    int c = int(it - r.lo.begin()) - 1;
    if (a > r.hi[c] || r.mass[c] <= 0.0) return kNegInf;
    return std::log(r.mass[c] / (r.hi[c] - r.lo[c]));
}

AdjointField build_adjoint_field(const Scene& scene, const BoundaryMesh& mesh,
                                 JacobianConvention conv, SolveMethod method) {
    auto t_start = std::chrono::steady_clock::now();
    AdjointField f;
    f.mesh = &mesh;
    f.conv = conv;
    f.rbar = segment_detector(scene, mesh);
    f.alpha_h = segment_albedos(scene, mesh);

    QAssembly qa = assemble_Q(scene, mesh, conv);
    f.q_norm_inf = qa.norm_inf;
    f.q_norm_flagged = qa.norm_flagged;
    f.phi = solve_phi(qa.Q, f.rbar, method);

    const int n = mesh.size();
    f.rows.resize(n);
    for (int i = 0; i < n; ++i) {
        auto& row = f.rows[i];
        const auto& si = mesh.segments[i];
        row.hem_lo = angle_of(si.normal) + 0.5 * kPi;
        if (f.alpha_h[i] <= 0.0 || qa.visible[i].empty()) {
            row.term = f.rbar[i] > 0.0 ? 1.0 : 0.0;
            continue;
        }
        if (f.phi[i] <= 0.0) {
            ++f.zero_phi_scatter_rows;
            continue;
        }
        RowCells cells = build_direction_cells(scene.profile, mesh, i, qa.visible[i]);
        row.aperture = cells.aperture;
        row.cum.reserve(cells.cells.size());
        double cum = 0.0;
        for (const auto& c : cells.cells) {
            double m = qa.Q(i, c.target) * f.phi[c.target] / f.phi[i];
            row.target.push_back(c.target);
            row.lo.push_back(c.lo);
            row.hi.push_back(c.hi);
            row.mass.push_back(m);
            cum += m;
            row.cum.push_back(cum);
        }
        row.total = cum;
        row.term = std::clamp(f.rbar[i] / f.phi[i], 0.0, 1.0);
    }
    f.source = build_source_table(scene.profile, mesh, f.phi, scene.source, mesh.h);
    f.t0_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return f;
}

double eval_importance(const AdjointField& field, const Scene& scene, const PhasePoint& z,
                       Importance which) {
    if (which == Importance::Outgoing) {
        Hit h = cast_to_boundary(scene.profile, *field.mesh, z.x, z.v);
        return field.phi[h.segment];
    }
    // locate the boundary segment containing z.x
    const auto& pieces = scene.profile.pieces;
    double best_d = 1e300;
    int best_piece = -1;
    double best_s = 0.0;
    for (int pi = 0; pi < int(pieces.size()); ++pi) {
        const auto& p = pieces[pi];
        double s = 0.0, d = 1e300;
        switch (p.kind) {
        case BoundaryPiece::Kind::Line: {
            Vec2 ab = p.b - p.a;
            double u = std::clamp((z.x - p.a).dot(ab) / ab.norm2(), 0.0, 1.0);
            d = (z.x - (p.a + ab * u)).norm();
            s = u * p.length;
            break;
        }
        case BoundaryPiece::Kind::Arc: {
            double ang = angle_of(z.x - p.c);
            double lo = std::min(p.ang0, p.ang1), hi = std::max(p.ang0, p.ang1);
            while (ang < lo) ang += 2.0 * kPi;
            if (ang > hi) { d = 1e300; break; }
            d = std::abs((z.x - p.c).norm() - p.r);
            s = std::abs(ang - p.ang0) / std::abs(p.ang1 - p.ang0) * p.length;
            break;
        }
        case BoundaryPiece::Kind::Mountain: {
            double lo = std::min(p.x0, p.x1), hi = std::max(p.x0, p.x1);
            if (z.x.x < lo - 1e-9 || z.x.x > hi + 1e-9) break;
            d = std::abs(z.x.y - mountain_height(z.x.x));
            s = p.arclen_at_x(z.x.x);
            break;
        }
        }
        if (d < best_d) {
            best_d = d;
            best_piece = pi;
            best_s = s;
        }
    }
    if (best_piece < 0 || best_d > 1e-6)
        throw std::invalid_argument("eval_importance: point not on the boundary");
    return field.phi[field.mesh->segment_at(best_piece, best_s)];
}

SaiDraw sai_sample_direction(const AdjointField& field, const Scene& scene, int row,
                             Vec2 x_actual, Vec2 n_actual, RotationMode rot, Rng& rng) {
    SaiDraw out;
    const auto& r = field.rows[row];
    if (r.term > 0.0 && rng.uniform() < r.term) {
        out.terminated = true;
        return out;
    }
    if (r.mass.empty() || r.total <= 0.0) {
        out.failed = true;
        return out;
    }
    const Vec2 n_grid = field.mesh->segments[row].normal;
    for (int attempt = 0; attempt < 64; ++attempt) {
        double u = rng.uniform() * r.total;
        auto it = std::upper_bound(r.cum.begin(), r.cum.end(), u);
        int c = std::min(int(it - r.cum.begin()), int(r.cum.size()) - 1);
        double ang = rng.uniform(r.lo[c], r.hi[c]);
        Vec2 vg = unit_from_angle(ang);
        Vec2 v = rotate_frame(n_grid, n_actual, vg, rot);
        if (v.dot(n_actual) < 0.0) {
            out.v = v;
            out.v_grid = vg;
            out.log_density = std::log(r.mass[c] / (r.hi[c] - r.lo[c]));
            out.resamples = attempt;
            return out;
        }
    }
    out.failed = true;
    out.resamples = 64;
    return out;
}

SourceDraw sai_sample_source(const AdjointField& field, Rng& rng) {
    const auto& t = field.source;
    SourceDraw out;
    double u = rng.uniform() * t.total;
    auto it = std::upper_bound(t.cum_mass.begin(), t.cum_mass.end(), u);
    int k = std::min(int(it - t.cum_mass.begin()), t.n - 1);
    out.x = t.x_lo + (k + rng.uniform()) * t.dx;
    out.log_density = std::log(t.s_h[k] * t.phi_k[k] / t.total);
    return out;
}

double sai_source_log_density(const AdjointField& field, double x) {
    const auto& t = field.source;
    if (t.n == 0 || x <= t.x_lo || x >= t.x_lo + t.n * t.dx) return kNegInf;
    int k = std::clamp(int((x - t.x_lo) / t.dx), 0, t.n - 1);
    double d = t.s_h[k] * t.phi_k[k];
    return d > 0.0 ? std::log(d / t.total) : kNegInf;
}

void dump_adjoint_csv(const AdjointField& field, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "j,x,y,phi\n";
    f.precision(17);
    for (int j = 0; j < field.mesh->size(); ++j) {
        const auto& s = field.mesh->segments[j];
        f << j << ',' << s.mid.x << ',' << s.mid.y << ',' << field.phi[j] << '\n';
    }
}

} // namespace mc2d
