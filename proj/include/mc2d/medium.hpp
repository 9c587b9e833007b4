#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mc2d/geometry.hpp"
#include "mc2d/rng.hpp"

namespace mc2d {

enum class PhaseKind : uint8_t { PaperSquare, Isotropic };
enum class CrossSection : uint8_t { Total, ScatterOnly, AbsorbOnly };

// Axis-aligned box with its own cross sections; later regions override
// earlier ones and the background.
struct BoxRegion {
    Vec2 lo, hi;
    double sigma_a = 0.0, sigma_s = 0.0;
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

struct VolumeCoefficients {
    double bg_sigma_a = 0.0;
    double bg_sigma_s = 0.0;
    std::vector<BoxRegion> regions;
    PhaseKind phase = PhaseKind::PaperSquare;

    double sigma_a(Vec2 p) const;
    double sigma_s(Vec2 p) const;
    double sigma(Vec2 p) const { return sigma_a(p) + sigma_s(p); }
    double max_sigma_s() const;
};

// -integral of the chosen cross section along the segment x1 -> x2
double optical_depth(const VolumeCoefficients& vol, Vec2 x1, Vec2 x2, CrossSection kind);
inline double optical_depth_factor(const VolumeCoefficients& vol, Vec2 x1, Vec2 x2,
                                   CrossSection kind) {
    return std::exp(-optical_depth(vol, x1, x2, kind));
}

struct CollisionSample {
    bool interior = false;
    double t = 0.0;   // distance traveled (equals tau_plus on boundary hit)
    Vec2 x;
};

// Free-path sampling along the ray up to the boundary at distance tau_plus.
// kind Total uses sigma (analog), ScatterOnly uses sigma_s (survival biasing).
CollisionSample sample_collision(const VolumeCoefficients& vol, Vec2 x, Vec2 v,
                                 double tau_plus, CrossSection kind, Rng& rng);

// Phase function: angular pdf p(v.v') with theta = sigma_s * p.
double eval_phase(PhaseKind kind, Vec2 v, Vec2 vp);
Vec2 sample_phase(PhaseKind kind, Vec2 v, Rng& rng);
double phase_max(PhaseKind kind);  // sup over outgoing directions of p

// Surface kernel: cosine density about the inward normal,
// kappa(x,v') = |nu_x . v'| / 2, normalized on the inward half circle.
double eval_surface_kernel(Vec2 normal, Vec2 vp);
Vec2 sample_surface_kernel(Vec2 normal, Rng& rng);

// Albedo as a function of the boundary x-coordinate:
// alpha(x) = c0 + amp * sin(2 pi x / period), clamped to [0,1] bands.
struct SurfaceMaterial {
    std::string name;
    double c0 = 0.0;
    double amp = 0.0;
    double period = 1.0;
    bool detector = false;

    double albedo(Vec2 p) const {
        if (amp == 0.0) return c0;
        return c0 + amp * std::sin(2.0 * 3.14159265358979323846 * p.x / period);
    }
};

enum class SourceProfile : uint8_t { Uniform, PaperSin };

// Mono-directional source on the top boundary, direction (0,-1), positional
// density on x in (x_lo, x_hi) normalized to one.
struct SourceSpec {
    double x_lo = -2.5, x_hi = 2.5;
    double y_top = 4.0;
    SourceProfile profile = SourceProfile::Uniform;
    bool present = true;

    double density(double x) const;            // normalized positional pdf
    double band_integral(double a, double b) const; // integral of the pdf
    double sample_x(Rng& rng) const;
};

struct Scene {
    std::string id;
    BoundaryProfile profile;
    std::vector<SurfaceMaterial> materials;
    VolumeCoefficients vol;
    SourceSpec source;
    double diameter = 2.0 * 3.14159265358979323846;
    // detector spatial support (for f_V aiming); endpoints on the boundary
    Vec2 detector_a, detector_b;
    bool has_detector = false;

    const SurfaceMaterial& material_of(int piece) const {
        return materials[profile.pieces[piece].material];
    }
    double albedo_at(Vec2 p, int piece) const { return material_of(piece).albedo(p); }
    bool is_detector(int piece) const { return material_of(piece).detector; }
    // gbar(z) = g0(x): indicator of the detector material
    double eval_detector(Vec2 /*p*/, int piece) const { return is_detector(piece) ? 1.0 : 0.0; }

    PhasePoint sample_source(Rng& rng) const;
    double eval_source(Vec2 p) const;  // positional density on the support

    void validate() const;  // normalization and range checks
};

} // namespace mc2d
