#pragma once

#include "mc2d/radiosity.hpp"

namespace mc2d {

enum class ChainKind : uint8_t { Analog, SurvivalBiasing, Heuristic, Sai };

// Per-path log Radon-Nikodym ledger across the tracked measure pairs.
// Factors are applied event by event; scores are assembled at the end.
struct WeightLedger {
    double lr_a_sb = 0.0;    // log |dPa / dPsb|
    double lr_heu_sb = 0.0;  // log |dPheu / dPsb|
    double lr_a_h = 0.0;     // log |dPa / dPh|, valid iff h_valid()
    bool h_support = true;   // false once the path leaves supp(dPh)
    bool h_tracked = false;  // a:h factors were accumulated (field present)
    bool had_volume_event = false;
    bool hit_detector = false;
    uint32_t tau = 0;
    double path_length = 0.0;

    double lr_a_heu() const { return lr_a_sb - lr_heu_sb; }
    double lr_sb_h() const { return lr_a_h - lr_a_sb; }
    bool h_valid() const { return h_tracked && h_support && !had_volume_event; }
};

// Event appliers (exact per-event multiplicative factors, in log space).
// Casts contribute the E_{sigma_a} leg to a:sb and the E_sigma leg to a:h
// (E^h == 1); boundary scatters contribute alpha to a:sb and
// alpha Theta / k_i to a:h; volume scatters contribute gamma_{heu,sb}.
void rn_apply_cast(WeightLedger& L, double od_total, double od_scatter);
void rn_apply_boundary_scatter(WeightLedger& L, double alpha_true, double theta_true,
                               double log_kh);
void rn_apply_volume_scatter(WeightLedger& L, double gamma_heu_sb);
void rn_apply_source_h(WeightLedger& L, double log_s_true, double log_rho_h);
void rn_apply_termination_h(WeightLedger& L, double term_prob);

double score_analog(const WeightLedger& L, double gbar);
double score_survival_biasing(const WeightLedger& L, double gbar);
double score_heuristic(const WeightLedger& L, double gbar);
// Mixture score: gbar * dPa / ((1-qs) dPh + qs dPheu), log-sum-exp in the
// denominator; the dPh term drops for paths with volume events.
double score_sai(const WeightLedger& L, double qs, double gbar);

struct ChainSpec {
    const Scene* scene = nullptr;
    const AdjointField* field = nullptr;  // required for Sai; optional tracking otherwise
    ChainKind kind = ChainKind::Analog;
    double qs = 0.9;
    double qv = 0.5;
    RotationMode rotation = RotationMode::Identity;
    uint32_t collision_cap = 10000;
};

struct ShotResult {
    double xi = 0.0;
    uint32_t tau = 0;
    bool hit_detector = false;
    bool capped = false;
    double path_length = 0.0;
};

struct ShotCounters {
    uint64_t cap_hits = 0;
    uint64_t resamples = 0;
    uint64_t sai_failures = 0;
    uint64_t fv_fallbacks = 0;
    uint64_t strays = 0;

    ShotCounters& operator+=(const ShotCounters& o) {
        cap_hits += o.cap_hits;
        resamples += o.resamples;
        sai_failures += o.sai_failures;
        fv_fallbacks += o.fv_fallbacks;
        strays += o.strays;
        return *this;
    }
};

ShotResult run_chain(const ChainSpec& spec, Rng& rng, WeightLedger& ledger,
                     ShotCounters& counters);

ShotResult run_analog(const Scene& scene, Rng& rng);
ShotResult run_survival_biasing(const Scene& scene, Rng& rng);
ShotResult run_heuristic(const Scene& scene, double qv, Rng& rng);
ShotResult run_sai(const Scene& scene, const AdjointField& field, double qs, double qv,
                   Rng& rng);

} // namespace mc2d
