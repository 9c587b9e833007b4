#include "mc2d/medium.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mc2d {

namespace {
constexpr double kPi = 3.14159265358979323846;

// Breakpoints of the piecewise-constant cross section along x1 + u*(x2-x1),
// u in [0,1]. Returns sorted u values including 0 and 1.
void region_breakpoints(const VolumeCoefficients& vol, Vec2 x1, Vec2 d,
                        std::vector<double>& us) {
    us.clear();
    us.push_back(0.0);
    us.push_back(1.0);
    for (const auto& r : vol.regions) {
        for (int axis = 0; axis < 2; ++axis) {
            double o = axis ? x1.y : x1.x;
            double dd = axis ? d.y : d.x;
            if (std::abs(dd) < 1e-300) continue;
            for (double w : {axis ? r.lo.y : r.lo.x, axis ? r.hi.y : r.hi.x}) {
                double u = (w - o) / dd;
                if (u > 0.0 && u < 1.0) us.push_back(u);
            }
        }
    }
    std::sort(us.begin(), us.end());
    us.erase(std::unique(us.begin(), us.end()), us.end());
}

double pick(const VolumeCoefficients& vol, Vec2 p, CrossSection kind) {
    switch (kind) {
    case CrossSection::Total: return vol.sigma(p);
    case CrossSection::ScatterOnly: return vol.sigma_s(p);
    case CrossSection::AbsorbOnly: return vol.sigma_a(p);
    }
    return 0.0;
}
} // namespace

double VolumeCoefficients::sigma_a(Vec2 p) const {
    double v = bg_sigma_a;
    for (const auto& r : regions)
        if (r.contains(p)) v = r.sigma_a;
    return v;
}

double VolumeCoefficients::sigma_s(Vec2 p) const {
    double v = bg_sigma_s;
    for (const auto& r : regions)
        if (r.contains(p)) v = r.sigma_s;
    return v;
}

double VolumeCoefficients::max_sigma_s() const {
    double v = bg_sigma_s;
    for (const auto& r : regions) v = std::max(v, r.sigma_s);
    return v;
}

double optical_depth(const VolumeCoefficients& vol, Vec2 x1, Vec2 x2, CrossSection kind) {
    Vec2 d = x2 - x1;
    double len = d.norm();
    if (len == 0.0) return 0.0;
    if (vol.regions.empty()) {
        // homogeneous fast path
        return pick(vol, x1, kind) * len;
    }
    static thread_local std::vector<double> us;
    region_breakpoints(vol, x1, d, us);
    double depth = 0.0;
    for (size_t k = 0; k + 1 < us.size(); ++k) {
        double um = 0.5 * (us[k] + us[k + 1]);
        depth += pick(vol, x1 + d * um, kind) * (us[k + 1] - us[k]) * len;
    }
    return depth;
}

CollisionSample sample_collision(const VolumeCoefficients& vol, Vec2 x, Vec2 v,
                                 double tau_plus, CrossSection kind, Rng& rng) {
    CollisionSample out;
    double target = -std::log1p(-rng.uniform());  // exponential optical depth
    if (vol.regions.empty()) {
        double s = pick(vol, x, kind);
        double t = s > 0.0 ? target / s : 1e300;
        if (t < tau_plus) {
            out.interior = true;
            out.t = t;
            out.x = x + v * t;
        } else {
            out.t = tau_plus;
            out.x = x + v * tau_plus;
        }
        return out;
    }
    Vec2 d = v * tau_plus;
    static thread_local std::vector<double> us;
    region_breakpoints(vol, x, d, us);
    double depth = 0.0;
    for (size_t k = 0; k + 1 < us.size(); ++k) {
        double um = 0.5 * (us[k] + us[k + 1]);
        double s = pick(vol, x + d * um, kind);
        double seg = s * (us[k + 1] - us[k]) * tau_plus;
        if (depth + seg >= target && s > 0.0) {
            double t = (us[k] + (target - depth) / (s * tau_plus)) * tau_plus;
            out.interior = true;
            out.t = t;
            out.x = x + v * t;
            return out;
        }
        depth += seg;
    }
    out.t = tau_plus;
    out.x = x + v * tau_plus;
    return out;
}

double eval_phase(PhaseKind kind, Vec2 v, Vec2 vp) {
    if (kind == PhaseKind::Isotropic) return 1.0 / (2.0 * kPi);
    double c = v.dot(vp);
    return (1.0 + c * c) / (3.0 * kPi);
}

double phase_max(PhaseKind kind) {
    return kind == PhaseKind::Isotropic ? 1.0 / (2.0 * kPi) : 2.0 / (3.0 * kPi);
}

Vec2 sample_phase(PhaseKind kind, Vec2 v, Rng& rng) {
    if (kind == PhaseKind::Isotropic)
        return unit_from_angle(rng.uniform(0.0, 2.0 * kPi));
    // rejection from the uniform envelope: accept (1+cos^2)/2
    for (;;) {
        double phi = rng.uniform(0.0, 2.0 * kPi);
        double c = std::cos(phi);
        if (rng.uniform() * 2.0 <= 1.0 + c * c) return rotate(v, phi);
    }
}

double eval_surface_kernel(Vec2 normal, Vec2 vp) {
    double c = normal.dot(vp);
    return c < 0.0 ? -0.5 * c : 0.0;
}

Vec2 sample_surface_kernel(Vec2 normal, Rng& rng) {
    // cosine about the inward normal: angle from inward normal has density
    // cos(psi)/2 on (-pi/2, pi/2); invert sin(psi) = 2u - 1
    double psi = std::asin(2.0 * rng.uniform() - 1.0);
    Vec2 inward = -normal;
    return rotate(inward, psi);
}

double SourceSpec::density(double x) const {
    if (x <= x_lo || x >= x_hi) return 0.0;
    double norm = x_hi - x_lo;  // sin term integrates to zero on symmetric support
    if (profile == SourceProfile::Uniform) return 1.0 / norm;
    return (1.0 + 0.25 * std::sin(2.0 * kPi * x / 0.07)) / norm;
}

double SourceSpec::band_integral(double a, double b) const {
    a = std::clamp(a, x_lo, x_hi);
    b = std::clamp(b, x_lo, x_hi);
    if (b <= a) return 0.0;
    double norm = x_hi - x_lo;
    if (profile == SourceProfile::Uniform) return (b - a) / norm;
    double w = 2.0 * kPi / 0.07;
    double s = (b - a) + 0.25 * (std::cos(w * a) - std::cos(w * b)) / w;
    return s / norm;
}

double SourceSpec::sample_x(Rng& rng) const {
    if (profile == SourceProfile::Uniform) return rng.uniform(x_lo, x_hi);
    // rejection: density <= 1.25/norm
    for (;;) {
        double x = rng.uniform(x_lo, x_hi);
        double f = 1.0 + 0.25 * std::sin(2.0 * kPi * x / 0.07);
        if (rng.uniform() * 1.25 <= f) return x;
    }
}

PhasePoint Scene::sample_source(Rng& rng) const {
    PhasePoint z;
    z.x = {source.sample_x(rng), source.y_top};
    z.v = {0.0, -1.0};
    z.locus = Locus::GammaMinus;
    return z;
}

double Scene::eval_source(Vec2 p) const { return source.density(p.x); }

void Scene::validate() const {
    for (const auto& m : materials) {
        double lo = m.c0 - std::abs(m.amp), hi = m.c0 + std::abs(m.amp);
        if (lo < -1e-12 || hi > 1.0 + 1e-12)
            throw std::invalid_argument("material '" + m.name + "': albedo outside [0,1]");
        if (m.detector && (m.c0 != 0.0 || m.amp != 0.0))
            throw std::invalid_argument("material '" + m.name + "': detector must have albedo 0");
    }
    if (vol.bg_sigma_a < 0.0 || vol.bg_sigma_s < 0.0)
        throw std::invalid_argument("negative background cross section");
    for (const auto& r : vol.regions)
        if (r.sigma_a < 0.0 || r.sigma_s < 0.0)
            throw std::invalid_argument("negative region cross section");
    if (source.present && source.x_hi <= source.x_lo)
        throw std::invalid_argument("empty source support");
}

} // namespace mc2d
