#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mc2d/chains.hpp"

namespace mc2d {

// Numerically stable streaming mean/variance with exact pairwise merging.
struct RunningStats {
    uint64_t n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        double d = x - mean;
        mean += d / double(n);
        m2 += d * (x - mean);
    }
    void merge(const RunningStats& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        double d = o.mean - mean;
        uint64_t nn = n + o.n;
        mean += d * double(o.n) / double(nn);
        m2 += o.m2 + d * d * double(n) * double(o.n) / double(nn);
        n = nn;
    }
    double variance() const { return n > 1 ? m2 / double(n - 1) : 0.0; }
    double stderror() const { return n > 0 ? std::sqrt(variance() / double(n)) : 0.0; }
};

struct EstimateRecord {
    std::string scenario;
    ChainKind chain = ChainKind::Analog;
    uint64_t shots = 0;
    double mean = 0.0;
    double variance = 0.0;
    double stderror = 0.0;
    double wall_seconds = 0.0;
    double shots_per_sec = 0.0;
    double h = 0.0, qs = 0.0, qv = 0.0, mfp_mult = 0.0;
    double t0_seconds = 0.0;
    uint64_t seed = 0;
    uint64_t detector_hits = 0;
};

struct BatchResult {
    EstimateRecord record;
    std::vector<uint64_t> tau_hist;  // collision-count histogram, detector hits only
    ShotCounters counters;
    // pilot integral estimates for qs_opt1 (means over shots)
    double pilot_ib = 0.0;  // int_{B cap D} |dPa/dPh| dPa, B = supp(dPh)
    double pilot_iv = 0.0;  // int_{D \ B} |dPa/dPheu| dPa
    uint64_t volume_path_hits = 0;  // detector hits with a volume event (P[V cap D] est.)
    uint64_t volume_paths = 0;      // paths with any volume event (P[V] est.)
};

inline constexpr uint32_t kTauHistBins = 64;  // last bin collects overflow

// N shots sharded into fixed-size blocks, each with an RNG stream derived
// from (seed, shard index); shard results merge in index order so the
// outcome is independent of the number of worker threads.
BatchResult run_batch(const ChainSpec& spec, uint64_t shots, uint64_t seed,
                      int threads = 0, uint64_t shard_size = 1u << 16);

struct CostModel {
    double c = 0.017;  // measured deterministic-solve constant, T0 = c h^-2
    double t0_for(double h) const { return c / (h * h); }
};

// Speedup(xi1, xi2; eps, m) = (eps^2 T0_1 + m tau_1 Var_1) / (eps^2 T0_2 + m tau_2 Var_2).
// m == infinity drops the deterministic solve terms.
double speedup(const EstimateRecord& r1, const EstimateRecord& r2, double eps, double m);

// figure of merit used in result tables: 1 / (tau Var) for m = infinity,
// 1 / (T0/m + tau Var / eps^2) otherwise
double figure_of_merit(const EstimateRecord& r, double m, double eps);

// Closed-form importance-sampling calculus (xi = 1_D).
// E[xi~^2] for the piecewise-constant change of measure; variant with a
// zero-weight set C of probability pc.
double stealing_second_moment(double b, double pd, double pbd, double pb, double pc = 0.0);
// variance ratio Var[xi]/Var[xi~]
double vrr(double b, double pd, double pbd, double pb, double pc = 0.0);
// beta_opt = 1/(sqrt(gamma)(sqrt(gamma)+sqrt(a)))
double beta_opt(double gamma, double a);
double a_factor(double pd, double pbd, double gamma, double pc = 0.0);
// maximal variance reduction, exact and the large-a approximation
double vrr_max(double pd, double pbd, double gamma);
double vrr_max_approx(double pbd);

// q_s optimizers
double qs_opt1(double pilot_ib, double pilot_iv);
double qs_from_b(double b, double pd, double pbd);
double qs_opt2(double pd, double pbd);

// normalized histogram of collision counts conditioned on detector hits
std::vector<double> tau_conditional_hist(const std::vector<ShotResult>& shots);
std::vector<double> tau_conditional_hist(const std::vector<uint64_t>& hist);

// two-sample chi-square statistic with small-count pooling; returns the
// statistic and degrees of freedom
struct Chi2Result {
    double statistic = 0.0;
    int dof = 0;
};
Chi2Result chi2_two_sample(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b);
// Wilson-Hilferty approximation of the chi-square quantile
double chi2_quantile(double p, int dof);

// least-squares slope of log(y) vs log(x)
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace mc2d
