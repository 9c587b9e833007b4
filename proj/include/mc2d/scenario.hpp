#pragma once

#include <map>
#include <memory>
#include <optional>

#include "mc2d/analytics.hpp"

namespace mc2d {

std::string chain_name(ChainKind k);
ChainKind chain_from_name(const std::string& s);

// Preset ids: "flat", "cos3", "circle"; anything else is read as a JSON
// scenario file. mfp_mult, when finite and positive, overrides the volume
// with sigma = 1/(mfp_mult * diameter), sigma_s = 2 sigma_a.
Scene load_scenario(const std::string& id_or_path,
                    double mfp_mult = std::numeric_limits<double>::quiet_NaN());

struct RunSpec {
    std::string scenario = "cos3";
    ChainKind chain = ChainKind::Analog;
    std::vector<double> h{0.05};
    std::vector<double> qs{0.9};
    std::vector<double> qv{0.5};
    std::vector<double> mfp_mult{std::numeric_limits<double>::quiet_NaN()};
    uint64_t shots = 100000;
    uint64_t seed = 1;
    int threads = 0;
    RotationMode rotation = RotationMode::Identity;
    JacobianConvention jacobian = JacobianConvention::Exact;
    uint32_t collision_cap = 10000;
};

struct ResultRow {
    EstimateRecord record;
    ShotCounters counters;
    std::string error;  // empty on success
    bool ok() const { return error.empty(); }
};

struct SweepResult {
    std::vector<ResultRow> rows;
    int radiosity_solves = 0;  // one per (scenario, h) with reuse across rows
    uint64_t total_shots = 0;
    uint64_t cap_hits = 0;
};

// Cartesian product of the swept parameters; one adjoint solve per h,
// shared by every row at that h. Row failures are recorded and the sweep
// continues.
SweepResult run_sweep(const RunSpec& spec);

// eps pinned for the amortized figure of merit column
inline constexpr double kFomEps = 1e-4;
inline constexpr double kFomReuse = 10.0;

enum class EmitFormat : uint8_t { Csv, Json };
void emit_results(const std::vector<ResultRow>& rows, EmitFormat format,
                  const std::string& path);

// adjoint/mesh dumps for a given scenario and h (plot support)
void emit_adjoint(const std::string& scenario, double h, JacobianConvention conv,
                  const std::string& path);
void emit_mesh(const std::string& scenario, double h, const std::string& path);

} // namespace mc2d
