#include "mc2d/analytics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace mc2d {

namespace {
struct ShardAccum {
    RunningStats stats;
    std::vector<uint64_t> tau_hist = std::vector<uint64_t>(kTauHistBins, 0);
    ShotCounters counters;
    double ib_sum = 0.0, iv_sum = 0.0;
    uint64_t hits = 0;
    uint64_t volume_path_hits = 0;
    uint64_t volume_paths = 0;
};
} // namespace

BatchResult run_batch(const ChainSpec& spec, uint64_t shots, uint64_t seed,
                      int threads, uint64_t shard_size) {
    if (shots == 0) throw std::invalid_argument("run_batch: shots must be >= 1");
    if (threads <= 0) threads = int(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;

    const uint64_t nshards = (shots + shard_size - 1) / shard_size;
    std::vector<ShardAccum> acc(nshards);
    std::atomic<uint64_t> next{0};

    auto t_start = std::chrono::steady_clock::now();
    auto worker = [&]() {
        for (;;) {
            uint64_t s = next.fetch_add(1);
            if (s >= nshards) return;
            Rng rng(seed, s);
            ShardAccum& a = acc[s];
            uint64_t lo = s * shard_size;
            uint64_t hi = std::min(shots, lo + shard_size);
            WeightLedger L;
            for (uint64_t k = lo; k < hi; ++k) {
                ShotResult r = run_chain(spec, rng, L, a.counters);
                a.stats.add(r.xi);
                if (r.hit_detector) {
                    ++a.hits;
                    ++a.tau_hist[std::min<uint32_t>(r.tau, kTauHistBins - 1)];
                    // pilot integrals under the sampling measure
                    double lr_a_p = 0.0;
                    switch (spec.kind) {
                    case ChainKind::Analog: lr_a_p = 0.0; break;
                    case ChainKind::SurvivalBiasing: lr_a_p = L.lr_a_sb; break;
                    case ChainKind::Heuristic: lr_a_p = L.lr_a_heu(); break;
                    case ChainKind::Sai:
                        lr_a_p = r.xi > 0.0 ? std::log(r.xi) : 0.0;
                        break;
                    }
                    if (L.h_valid())
                        a.ib_sum += std::exp(L.lr_a_h + lr_a_p);
                    else
                        a.iv_sum += std::exp(L.lr_a_heu() + lr_a_p);
                    if (L.had_volume_event) ++a.volume_path_hits;
                }
                if (L.had_volume_event) ++a.volume_paths;
            }
        }
    };
    if (threads == 1 || nshards == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();

    BatchResult out;
    out.tau_hist.assign(kTauHistBins, 0);
    double ib = 0.0, iv = 0.0;
    for (const auto& a : acc) {  // deterministic shard-order merge
        out.record.detector_hits += a.hits;
        out.counters += a.counters;
        out.volume_path_hits += a.volume_path_hits;
        out.volume_paths += a.volume_paths;
        for (uint32_t k = 0; k < kTauHistBins; ++k) out.tau_hist[k] += a.tau_hist[k];
        ib += a.ib_sum;
        iv += a.iv_sum;
    }
    RunningStats total;
    for (const auto& a : acc) total.merge(a.stats);
    out.record.shots = total.n;
    out.record.mean = total.mean;
    out.record.variance = total.variance();
    out.record.stderror = total.stderror();
    out.record.wall_seconds = wall;
    out.record.shots_per_sec = wall > 0.0 ? double(shots) / wall : 0.0;
    out.record.chain = spec.kind;
    out.record.qs = spec.qs;
    out.record.qv = spec.qv;
    out.record.seed = seed;
    out.pilot_ib = ib / double(shots);
    out.pilot_iv = iv / double(shots);
    return out;
}

double speedup(const EstimateRecord& r1, const EstimateRecord& r2, double eps, double m) {
    if (eps <= 0.0) throw std::invalid_argument("speedup: eps must be positive");
    double num, den;
    if (std::isinf(m)) {
        num = r1.shots_per_sec > 0.0 ? r1.variance / r1.shots_per_sec : r1.variance;
        den = r2.shots_per_sec > 0.0 ? r2.variance / r2.shots_per_sec : r2.variance;
    } else {
        double tau1 = r1.shots_per_sec > 0.0 ? 1.0 / r1.shots_per_sec : 0.0;
        double tau2 = r2.shots_per_sec > 0.0 ? 1.0 / r2.shots_per_sec : 0.0;
        num = eps * eps * r1.t0_seconds + m * tau1 * r1.variance;
        den = eps * eps * r2.t0_seconds + m * tau2 * r2.variance;
    }
    if (den == 0.0) throw std::invalid_argument("speedup: zero denominator");
    return num / den;
}

double figure_of_merit(const EstimateRecord& r, double m, double eps) {
    double tau = r.shots_per_sec > 0.0 ? 1.0 / r.shots_per_sec : 0.0;
    if (std::isinf(m)) {
        double d = tau * r.variance;
        return d > 0.0 ? 1.0 / d : 0.0;
    }
    double d = r.t0_seconds / m + tau * r.variance / (eps * eps);
    return d > 0.0 ? 1.0 / d : 0.0;
}

double stealing_second_moment(double b, double pd, double pbd, double pb, double pc) {
    if (b <= 0.0 || b * pb >= 1.0)
        throw std::invalid_argument("stealing_second_moment: need 0 < b, b P[B] < 1");
    double hit_in_b = pd * pbd;
    double hit_off_b = pd * (1.0 - pbd);
    return hit_in_b / b + (1.0 - pb - pc) / (1.0 - b * pb) * hit_off_b;
}

double vrr(double b, double pd, double pbd, double pb, double pc) {
    double m2 = stealing_second_moment(b, pd, pbd, pb, pc);
    double var_tilde = m2 - pd * pd;
    double var = pd - pd * pd;
    if (var_tilde < 0.0) throw std::invalid_argument("vrr: nonphysical inputs");
    if (var_tilde == 0.0) return std::numeric_limits<double>::infinity();
    return var / var_tilde;
}

double a_factor(double pd, double pbd, double gamma, double pc) {
    return (1.0 - pc - gamma * pd) / pbd * (1.0 - pbd) / pd;
}

double beta_opt(double gamma, double a) {
    double sg = std::sqrt(gamma);
    return 1.0 / (sg * (sg + std::sqrt(a)));
}

double vrr_max(double pd, double pbd, double gamma) {
    double a = a_factor(pd, pbd, gamma);
    double s = std::sqrt(gamma) + std::sqrt(a);
    double den = pbd * s * s - 1.0;
    if (den <= 0.0) return std::numeric_limits<double>::infinity();
    return (1.0 - pd) / pd / den;
}

double vrr_max_approx(double pbd) { return 1.0 / (1.0 - pbd); }

double qs_opt1(double pilot_ib, double pilot_iv) {
    if (pilot_ib <= 0.0 && pilot_iv <= 0.0)
        throw std::invalid_argument("qs_opt1: both pilot integrals vanish");
    if (pilot_ib <= 0.0) return 1.0;
    if (pilot_iv <= 0.0) return 0.0;
    double alpha = pilot_iv / pilot_ib;
    double sa = std::sqrt(alpha);
    return sa / (1.0 + sa);
}

double qs_from_b(double b, double pd, double pbd) {
    double pb = pd * pbd;
    return std::clamp((1.0 - b * pb) / (1.0 - pb), 0.0, 1.0);
}

double qs_opt2(double pd, double pbd) {
    double gamma = pbd;  // B subset of D: P[B] = P[D] P[B|D]
    double a = a_factor(pd, pbd, gamma);
    double b = beta_opt(gamma, a) / pd;
    return qs_from_b(b, pd, pbd);
}

std::vector<double> tau_conditional_hist(const std::vector<uint64_t>& hist) {
    uint64_t total = 0;
    for (auto c : hist) total += c;
    if (total == 0) throw std::invalid_argument("tau_conditional_hist: no detector hits");
    std::vector<double> out(hist.size());
    for (size_t k = 0; k < hist.size(); ++k) out[k] = double(hist[k]) / double(total);
    return out;
}

std::vector<double> tau_conditional_hist(const std::vector<ShotResult>& shots) {
    std::vector<uint64_t> h(kTauHistBins, 0);
    for (const auto& s : shots)
        if (s.hit_detector) ++h[std::min<uint32_t>(s.tau, kTauHistBins - 1)];
    return tau_conditional_hist(h);
}

Chi2Result chi2_two_sample(const std::vector<uint64_t>& a, const std::vector<uint64_t>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("chi2_two_sample: size mismatch");
    // pool adjacent bins until each pooled bin has >= 5 combined counts
    std::vector<double> pa, pb;
    double ca = 0.0, cb = 0.0;
    for (size_t k = 0; k < a.size(); ++k) {
        ca += double(a[k]);
        cb += double(b[k]);
        if (ca + cb >= 5.0) {
            pa.push_back(ca);
            pb.push_back(cb);
            ca = cb = 0.0;
        }
    }
    if (ca + cb > 0.0) {
        if (pa.empty()) { pa.push_back(ca); pb.push_back(cb); }
        else { pa.back() += ca; pb.back() += cb; }
    }
    double na = 0.0, nb = 0.0;
    for (double v : pa) na += v;
    for (double v : pb) nb += v;
    Chi2Result r;
    if (pa.size() < 2 || na == 0.0 || nb == 0.0) return r;  // degenerate: statistic 0
    double k1 = std::sqrt(nb / na), k2 = std::sqrt(na / nb);
    for (size_t k = 0; k < pa.size(); ++k) {
        double d = k1 * pa[k] - k2 * pb[k];
        double tot = pa[k] + pb[k];
        if (tot > 0.0) r.statistic += d * d / tot;
    }
    r.dof = int(pa.size()) - 1;
    return r;
}

double chi2_quantile(double p, int dof) {
    if (dof <= 0) return 0.0;
    // Wilson-Hilferty: quantile of the standard normal via Acklam-lite
    auto norm_quantile = [](double q) {
        // rational approximation, adequate for test thresholds
        static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
        static const double bb[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                    -1.556989798598866e+02, 6.680131188771972e+01,
                                    -1.328068155288572e+01};
        static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00, 2.938163982698783e+00};
        static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
        double plow = 0.02425;
        if (q < plow) {
            double r = std::sqrt(-2.0 * std::log(q));
            return (((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
                   ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
        }
        if (q > 1.0 - plow) {
            double r = std::sqrt(-2.0 * std::log(1.0 - q));
            return -(((((c[0] * r + c[1]) * r + c[2]) * r + c[3]) * r + c[4]) * r + c[5]) /
                   ((((d[0] * r + d[1]) * r + d[2]) * r + d[3]) * r + 1.0);
        }
        double r = q - 0.5, t = r * r;
        return (((((a[0] * t + a[1]) * t + a[2]) * t + a[3]) * t + a[4]) * t + a[5]) * r /
               (((((bb[0] * t + bb[1]) * t + bb[2]) * t + bb[3]) * t + bb[4]) * t + 1.0);
    };
    double z = norm_quantile(p);
    double k = double(dof);
    double t = 1.0 - 2.0 / (9.0 * k) + z * std::sqrt(2.0 / (9.0 * k));
    return k * t * t * t;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = int(x.size());
    for (int k = 0; k < n; ++k) {
        double lx = std::log(x[k]), ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace mc2d
