#pragma once

#include <Eigen/Dense>

#include "mc2d/medium.hpp"

namespace mc2d {

struct QAssembly {
    Eigen::MatrixXd Q;
    std::vector<std::vector<int>> visible;  // per-row visible target lists
    double norm_inf = 0.0;
    bool norm_flagged = false;  // ||Q||_inf >= 1 (contraction assumption violated)
};

// Q_ij = alpha_h(i) kappa(x_i, v_ij) dnuN(x_i, x_j) |dX_j| for visible pairs.
QAssembly assemble_Q(const Scene& scene, const BoundaryMesh& mesh,
                     JacobianConvention conv = JacobianConvention::Exact);

std::vector<double> segment_albedos(const Scene& scene, const BoundaryMesh& mesh);  // R alpha
std::vector<double> segment_detector(const Scene& scene, const BoundaryMesh& mesh); // R gbar

struct SolveMethod {
    enum class Kind : uint8_t { Direct, Neumann } kind = Kind::Direct;
    int neumann_terms = 200;
    static SolveMethod direct() { return {}; }
    static SolveMethod neumann(int k) { return {Kind::Neumann, k}; }
};

// Solve phi = Q phi + rg. The returned vector satisfies the fixed-point
// equation row-wise in the exact summation order used here, so downstream
// row totals reproduce 1 - rg_i / phi_i to machine precision.
std::vector<double> solve_phi(const Eigen::MatrixXd& Q, const std::vector<double>& rg,
                              SolveMethod method = SolveMethod::direct());

struct SourceTable {
    double x_lo = 0.0, dx = 0.0;
    int n = 0;
    std::vector<double> cum_mass;  // cumulative s_h * dx * phi per bin
    std::vector<double> s_h;       // piecewise-constant source density
    std::vector<double> phi_k;     // importance of the bin's straight-down hit
    double total = 0.0;            // <s^h, psi_o^h>
};

SourceTable build_source_table(const BoundaryProfile& profile, const BoundaryMesh& mesh,
                               const std::vector<double>& phi, const SourceSpec& source,
                               double h);

struct AdjointField {
    const BoundaryMesh* mesh = nullptr;
    JacobianConvention conv = JacobianConvention::Exact;
    std::vector<double> phi;
    std::vector<double> rbar;     // R gbar per segment
    std::vector<double> alpha_h;  // R alpha per segment
    double q_norm_inf = 0.0;
    bool q_norm_flagged = false;
    int zero_phi_scatter_rows = 0;

    struct Row {
        double term = 0.0;        // termination probability rg_i / phi_i
        double total = 0.0;       // direction-pdf total = 1 - term
        double hem_lo = 0.0;      // hemisphere window start angle
        double aperture = 0.0;
        std::vector<double> cum, lo, hi, mass;
        std::vector<int> target;
    };
    std::vector<Row> rows;
    SourceTable source;
    double t0_seconds = 0.0;      // assembly + solve + tables wall time

    // log of the direction density k_i(v) at grid-frame angle `ang`
    double row_log_density(int i, double ang) const;
    double row_density_total(int i) const { return rows[i].total; }
};

// Full deterministic pass: assemble, solve, build sampling tables.
AdjointField build_adjoint_field(const Scene& scene, const BoundaryMesh& mesh,
                                 JacobianConvention conv = JacobianConvention::Exact,
                                 SolveMethod method = SolveMethod::direct());

enum class Importance : uint8_t { Incoming, Outgoing };

// Incoming: phi of the segment containing the boundary point.
// Outgoing: phi at the forward boundary hit of z.
double eval_importance(const AdjointField& field, const Scene& scene, const PhasePoint& z,
                       Importance which);

inline double deterministic_estimate(const AdjointField& field) { return field.source.total; }

struct SaiDraw {
    bool terminated = false;   // detector termination (row mass deficit)
    bool failed = false;       // resample cap exceeded
    Vec2 v;                    // direction at the actual point
    Vec2 v_grid;               // direction in the grid frame
    double log_density = 0.0;  // log k_i(v_grid)
    int resamples = 0;
};

SaiDraw sai_sample_direction(const AdjointField& field, const Scene& scene, int row,
                             Vec2 x_actual, Vec2 n_actual, RotationMode rot, Rng& rng);

struct SourceDraw {
    double x = 0.0;            // position on the top boundary
    double log_density = 0.0;  // log of s_h(x) phi_k / Z
};

SourceDraw sai_sample_source(const AdjointField& field, Rng& rng);
// density of the SAI source at position x (-inf if outside the table support)
double sai_source_log_density(const AdjointField& field, double x);

void dump_adjoint_csv(const AdjointField& field, const std::string& path);

} // namespace mc2d
