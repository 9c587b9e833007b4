#include "mc2d/chains.hpp"

#include <cmath>
#include <stdexcept>

namespace mc2d {

namespace {
constexpr double kNegInf = -1e300;

struct DetectorCone {
    double lo = 0.0, hi = 0.0;
    bool ok = false;
    double width() const { return hi - lo; }
    bool contains(double a) const { return ok && a >= lo && a <= hi; }
};

DetectorCone detector_cone(const Scene& scene, Vec2 p) {
    DetectorCone c;
    if (!scene.has_detector) return c;
    double a1 = angle_of(scene.detector_a - p);
    double a2 = angle_of(scene.detector_b - p);
    c.lo = std::min(a1, a2);
    c.hi = std::max(a1, a2);
    c.ok = (c.hi - c.lo) > 1e-14 && (c.hi - c.lo) < 3.141;
    return c;
}
} // namespace

void rn_apply_cast(WeightLedger& L, double od_total, double od_scatter) {
    L.lr_a_sb -= od_total - od_scatter;  // E_{sigma_a} leg
    if (L.h_tracked) L.lr_a_h -= od_total;
}

void rn_apply_boundary_scatter(WeightLedger& L, double alpha_true, double theta_true,
                               double log_kh) {
    if (alpha_true <= 0.0 || theta_true <= 0.0)
        throw std::logic_error("rn_apply_boundary_scatter: analog-impossible event");
    double la = std::log(alpha_true);
    L.lr_a_sb += la;  // gamma_{a,sb} = alpha / alpha^sb with alpha^sb = 1
    if (L.h_tracked) {
        if (log_kh <= kNegInf) L.h_support = false;
        else L.lr_a_h += la + std::log(theta_true) - log_kh;
    }
}

void rn_apply_volume_scatter(WeightLedger& L, double gamma_heu_sb) {
    if (gamma_heu_sb <= 0.0)
        throw std::logic_error("rn_apply_volume_scatter: zero heuristic density");
    L.lr_heu_sb += std::log(gamma_heu_sb);
}

void rn_apply_source_h(WeightLedger& L, double log_s_true, double log_rho_h) {
    if (!L.h_tracked) return;
    if (log_rho_h <= kNegInf) L.h_support = false;
    else L.lr_a_h += log_s_true - log_rho_h;
}

void rn_apply_termination_h(WeightLedger& L, double term_prob) {
    if (!L.h_tracked) return;
    if (term_prob <= 0.0) L.h_support = false;
    else L.lr_a_h -= std::log(term_prob);
}

double score_analog(const WeightLedger&, double gbar) { return gbar; }

double score_survival_biasing(const WeightLedger& L, double gbar) {
    return gbar > 0.0 ? gbar * std::exp(L.lr_a_sb) : 0.0;
}

double score_heuristic(const WeightLedger& L, double gbar) {
    return gbar > 0.0 ? gbar * std::exp(L.lr_a_heu()) : 0.0;
}

double score_sai(const WeightLedger& L, double qs, double gbar) {
    if (gbar <= 0.0) return 0.0;
    if (!L.h_valid()) {
        if (qs <= 0.0) return 0.0;  // outside the pure surface chain's support
        return gbar * std::exp(L.lr_a_heu() - std::log(qs));
    }
    double A = -L.lr_a_h;      // log dPh/dPa
    double B = -L.lr_a_heu();  // log dPheu/dPa
    double M = std::max(qs < 1.0 ? A : kNegInf, qs > 0.0 ? B : kNegInf);
    double den = 0.0;
    if (qs < 1.0) den += (1.0 - qs) * std::exp(A - M);
    if (qs > 0.0) den += qs * std::exp(B - M);
    return gbar * std::exp(-M - std::log(den));
}

namespace {

// Shared driver. The surface branch walks boundary-to-boundary with the
// adjoint tables; the volume-capable branch implements analog, survival
// biasing and the heuristic adjustment.
ShotResult volume_branch(const ChainSpec& spec, bool heuristic_aiming, Rng& rng,
                         WeightLedger& L, ShotCounters& cnt) {
    const Scene& sc = *spec.scene;
    const AdjointField* f = spec.field;
    const bool analog = spec.kind == ChainKind::Analog;
    const CrossSection cast_kind = analog ? CrossSection::Total : CrossSection::ScatterOnly;
    ShotResult out;

    PhasePoint z = sc.sample_source(rng);
    if (L.h_tracked)
        rn_apply_source_h(L, std::log(sc.eval_source(z.x)), sai_source_log_density(*f, z.x.x));

    Vec2 x = z.x, v = z.v;
    bool done = false;
    for (uint32_t step = 0; step < spec.collision_cap && !done; ++step) {
        Hit hit = f ? cast_to_boundary(sc.profile, *f->mesh, x, v)
                    : cast_to_boundary(sc.profile, x, v);
        CollisionSample col = sample_collision(sc.vol, x, v, hit.t, cast_kind, rng);
        ++L.tau;
        L.path_length += col.t;
        rn_apply_cast(L, optical_depth(sc.vol, x, col.x, CrossSection::Total),
                      optical_depth(sc.vol, x, col.x, CrossSection::ScatterOnly));

        if (col.interior) {
            L.had_volume_event = true;
            if (analog) {
                double sig = sc.vol.sigma(col.x);
                if (rng.uniform() * sig < sc.vol.sigma_a(col.x)) {
                    done = true;  // absorbed in the volume
                    continue;
                }
            }
            // direction change with optional detector aiming
            DetectorCone cone = detector_cone(sc, col.x);
            double q_heu = 1.0;
            if (cone.ok) {
                Vec2 vd = ((sc.detector_a + sc.detector_b) * 0.5 - col.x).normalized();
                double ratio = eval_phase(sc.vol.phase, v, vd) / phase_max(sc.vol.phase);
                q_heu = (spec.qv - 1.0) * ratio + 1.0;
            } else if (heuristic_aiming) {
                ++cnt.fv_fallbacks;
            }
            Vec2 v2;
            if (heuristic_aiming && cone.ok && rng.uniform() < 1.0 - q_heu)
                v2 = unit_from_angle(rng.uniform(cone.lo, cone.hi));
            else
                v2 = sample_phase(sc.vol.phase, v, rng);
            double p_val = eval_phase(sc.vol.phase, v, v2);
            double fv = cone.contains(angle_of(v2)) ? 1.0 / cone.width() : 0.0;
            rn_apply_volume_scatter(L, q_heu + (1.0 - q_heu) * fv / p_val);
            x = col.x;
            v = v2;
            continue;
        }

        // boundary event
        const auto& piece = sc.profile.pieces[hit.piece];
        Vec2 n_true = piece.normal(hit.s_local);
        if (sc.is_detector(hit.piece)) {
            L.hit_detector = true;
            out.hit_detector = true;
            if (L.h_valid()) rn_apply_termination_h(L, f->rows[hit.segment].term);
            out.xi = 1.0;  // gbar, rescored by the caller per chain kind
            done = true;
            continue;
        }
        double alpha = sc.albedo_at(hit.x, hit.piece);
        if (alpha <= 0.0 || (analog && rng.uniform() >= alpha)) {
            done = true;  // absorbing boundary / absorbed
            continue;
        }
        Vec2 v2 = sample_surface_kernel(n_true, rng);
        double log_kh = kNegInf;
        if (L.h_valid()) {
            Vec2 vg = spec.rotation == RotationMode::Exact
                          ? rotate_frame(n_true, f->mesh->segments[hit.segment].normal, v2,
                                         RotationMode::Exact)
                          : v2;
            log_kh = f->row_log_density(hit.segment, angle_of(vg));
        }
        rn_apply_boundary_scatter(L, alpha, eval_surface_kernel(n_true, v2), log_kh);
        x = hit.x;
        v = v2;
    }
    if (!done) {
        out.capped = true;
        ++cnt.cap_hits;
        out.xi = 0.0;
        out.hit_detector = false;
        L.hit_detector = false;
    }
    out.tau = L.tau;
    out.path_length = L.path_length;
    return out;
}

ShotResult surface_branch(const ChainSpec& spec, Rng& rng, WeightLedger& L,
                          ShotCounters& cnt) {
    const Scene& sc = *spec.scene;
    const AdjointField& f = *spec.field;
    ShotResult out;

    SourceDraw sd = sai_sample_source(f, rng);
    Vec2 x{sd.x, sc.source.y_top};
    Vec2 v{0.0, -1.0};
    rn_apply_source_h(L, std::log(sc.eval_source(x)), sd.log_density);

    bool done = false;
    for (uint32_t step = 0; step < spec.collision_cap && !done; ++step) {
        Hit hit = cast_to_boundary(sc.profile, *f.mesh, x, v);
        ++L.tau;
        L.path_length += hit.t;
        rn_apply_cast(L, optical_depth(sc.vol, x, hit.x, CrossSection::Total),
                      optical_depth(sc.vol, x, hit.x, CrossSection::ScatterOnly));

        const auto& piece = sc.profile.pieces[hit.piece];
        Vec2 n_true = piece.normal(hit.s_local);
        if (sc.is_detector(hit.piece)) {
            L.hit_detector = true;
            out.hit_detector = true;
            rn_apply_termination_h(L, f.rows[hit.segment].term);
            out.xi = 1.0;
            done = true;
            continue;
        }
        double alpha = sc.albedo_at(hit.x, hit.piece);
        if (alpha <= 0.0 || f.alpha_h[hit.segment] <= 0.0 || f.phi[hit.segment] <= 0.0) {
            ++cnt.strays;  // landed outside the surface chain's working set
            out.xi = 0.0;
            done = true;
            continue;
        }
        SaiDraw draw = sai_sample_direction(f, sc, hit.segment, hit.x, n_true,
                                            spec.rotation, rng);
        cnt.resamples += draw.resamples;
        if (draw.terminated) {
            // partial-detector row: die, score by the pointwise detector value
            L.hit_detector = sc.is_detector(hit.piece);
            out.xi = sc.eval_detector(hit.x, hit.piece);
            rn_apply_termination_h(L, f.rows[hit.segment].term);
            done = true;
            continue;
        }
        if (draw.failed) {
            ++cnt.sai_failures;
            out.xi = 0.0;
            done = true;
            continue;
        }
        rn_apply_boundary_scatter(L, alpha, eval_surface_kernel(n_true, draw.v),
                                  draw.log_density);
        x = hit.x;
        v = draw.v;
    }
    if (!done) {
        out.capped = true;
        ++cnt.cap_hits;
        out.xi = 0.0;
        out.hit_detector = false;
        L.hit_detector = false;
    }
    out.tau = L.tau;
    out.path_length = L.path_length;
    return out;
}

} // namespace

ShotResult run_chain(const ChainSpec& spec, Rng& rng, WeightLedger& L, ShotCounters& cnt) {
    if (!spec.scene) throw std::invalid_argument("run_chain: no scene");
    if (spec.kind == ChainKind::Sai && !spec.field)
        throw std::invalid_argument("run_chain: SAI requires an adjoint field");
    if (spec.kind == ChainKind::Sai && spec.qs <= 0.0 && spec.scene->vol.max_sigma_s() > 0.0)
        throw std::invalid_argument("run_chain: qs = 0 requires sigma = 0");
    if ((spec.kind == ChainKind::Heuristic || spec.kind == ChainKind::Sai) &&
        (spec.qv <= 0.0 || spec.qv > 1.0))
        throw std::invalid_argument("run_chain: qv must be in (0,1]");

    L = WeightLedger{};
    L.h_tracked = spec.field != nullptr;

    ShotResult res;
    double gbar;
    if (spec.kind == ChainKind::Sai && rng.uniform() < 1.0 - spec.qs) {
        res = surface_branch(spec, rng, L, cnt);
        gbar = res.xi;
        res.xi = score_sai(L, spec.qs, gbar);
        return res;
    }
    bool aiming = spec.kind == ChainKind::Heuristic || spec.kind == ChainKind::Sai;
    res = volume_branch(spec, aiming, rng, L, cnt);
    gbar = res.xi;
    switch (spec.kind) {
    case ChainKind::Analog: res.xi = score_analog(L, gbar); break;
    case ChainKind::SurvivalBiasing: res.xi = score_survival_biasing(L, gbar); break;
    case ChainKind::Heuristic: res.xi = score_heuristic(L, gbar); break;
    case ChainKind::Sai: res.xi = score_sai(L, spec.qs, gbar); break;
    }
    return res;
}

ShotResult run_analog(const Scene& scene, Rng& rng) {
    ChainSpec spec;
    spec.scene = &scene;
    spec.kind = ChainKind::Analog;
    WeightLedger L;
    ShotCounters c;
    return run_chain(spec, rng, L, c);
}

ShotResult run_survival_biasing(const Scene& scene, Rng& rng) {
    ChainSpec spec;
    spec.scene = &scene;
    spec.kind = ChainKind::SurvivalBiasing;
    WeightLedger L;
    ShotCounters c;
    return run_chain(spec, rng, L, c);
}

ShotResult run_heuristic(const Scene& scene, double qv, Rng& rng) {
    ChainSpec spec;
    spec.scene = &scene;
    spec.kind = ChainKind::Heuristic;
    spec.qv = qv;
    WeightLedger L;
    ShotCounters c;
    return run_chain(spec, rng, L, c);
}

ShotResult run_sai(const Scene& scene, const AdjointField& field, double qs, double qv,
                   Rng& rng) {
    ChainSpec spec;
    spec.scene = &scene;
    spec.field = &field;
    spec.kind = ChainKind::Sai;
    spec.qs = qs;
    spec.qv = qv;
    WeightLedger L;
    ShotCounters c;
    return run_chain(spec, rng, L, c);
}

} // namespace mc2d
