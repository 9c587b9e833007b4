#include "mc2d/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace mc2d {

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kCastStart = 1e-9;     // skip the starting boundary point
constexpr double kHitTol = 1e-12;       // surface-distance tolerance for marching
constexpr double kMountainSlopeMax = 1.1547005383792517; // max |d/dx cos^3 x|

double simpson(double (*f)(double), double a, double b, int n) {
    // n subintervals (even)
    if (n % 2) ++n;
    double h = (b - a) / n, s = f(a) + f(b);
    for (int k = 1; k < n; ++k) s += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
    return s * h / 3.0;
}

double mountain_speed(double x) {
    double d = mountain_slope(x);
    return std::sqrt(1.0 + d * d);
}
} // namespace

double mountain_height(double x) {
    double c = std::cos(x);
    return 1.0 + c * c * c;
}

double mountain_slope(double x) {
    double c = std::cos(x);
    return -3.0 * c * c * std::sin(x);
}

// ---------------------------------------------------------------------------
// BoundaryPiece

Vec2 BoundaryPiece::point(double s) const {
    switch (kind) {
    case Kind::Line: {
        double u = s / length;
        return a + (b - a) * u;
    }
    case Kind::Arc: {
        double ang = ang0 + (ang1 - ang0) * (s / length);
        return c + r * unit_from_angle(ang);
    }
    case Kind::Mountain: {
        double x = param_x(s);
        return {x, mountain_height(x)};
    }
    }
    return {};
}

Vec2 BoundaryPiece::normal(double s) const {
    switch (kind) {
    case Kind::Line: {
        Vec2 t = (b - a).normalized();
        return {t.y, -t.x}; // tangent rotated clockwise = outward
    }
    case Kind::Arc: {
        double ang = ang0 + (ang1 - ang0) * (s / length);
        Vec2 radial = unit_from_angle(ang);
        return ang1 > ang0 ? radial : -radial;
    }
    case Kind::Mountain: {
        double x = param_x(s);
        double d = mountain_slope(x);
        double inv = 1.0 / std::sqrt(1.0 + d * d);
        // interior is above the graph; outward points below
        double sign = (x1 > x0) ? 1.0 : -1.0;
        return Vec2{d * inv, -inv} * sign;
    }
    }
    return {};
}

double BoundaryPiece::arclen_at_x(double x) const {
    double lo = std::min(x0, x1), hi = std::max(x0, x1);
    x = std::clamp(x, lo, hi);
    int n = int(s_table.size()) - 1;
    double dx = (hi - lo) / n;
    int k = std::min(int((x - lo) / dx), n - 1);
    double xm = lo + k * dx;
    double s_from_lo = s_table[k] + simpson(&mountain_speed, xm, x, 4);
    return (x1 > x0) ? s_from_lo : (length - s_from_lo);
}

double BoundaryPiece::param_x(double s) const {
    double lo = std::min(x0, x1), hi = std::max(x0, x1);
    double target = (x1 > x0) ? s : (length - s);
    target = std::clamp(target, 0.0, length);
    int n = int(s_table.size()) - 1;
    auto it = std::upper_bound(s_table.begin(), s_table.end(), target);
    int k = std::clamp(int(it - s_table.begin()) - 1, 0, n - 1);
    double dx = (hi - lo) / n;
    double xa = lo + k * dx, xb = xa + dx;
    double sa = s_table[k];
    // Newton with bisection safeguard on s(x) - target
    double x = xa + (target - sa) / std::max(mountain_speed(xa), 1.0);
    x = std::clamp(x, xa, xb);
    double a = xa, b = xb;
    for (int it2 = 0; it2 < 60; ++it2) {
        double fx = sa + simpson(&mountain_speed, xa, x, 4) - target;
        if (std::abs(fx) < 1e-13) break;
        if (fx > 0) b = x; else a = x;
        double step = fx / mountain_speed(x);
        x -= step;
        if (x <= a || x >= b) x = 0.5 * (a + b);
    }
    return x;
}

// ---------------------------------------------------------------------------
// BoundaryProfile

void BoundaryProfile::finalize() {
    total_length = 0.0;
    bbox_lo = {1e300, 1e300};
    bbox_hi = {-1e300, -1e300};
    for (auto& p : pieces) {
        if (p.kind == BoundaryPiece::Kind::Line) {
            p.length = (p.b - p.a).norm();
        } else if (p.kind == BoundaryPiece::Kind::Arc) {
            p.length = p.r * std::abs(p.ang1 - p.ang0);
        } else {
            double lo = std::min(p.x0, p.x1), hi = std::max(p.x0, p.x1);
            int n = std::max(64, int(std::ceil((hi - lo) / 0.001)));
            p.s_table.assign(n + 1, 0.0);
            double dx = (hi - lo) / n;
            for (int k = 1; k <= n; ++k)
                p.s_table[k] = p.s_table[k - 1] +
                               simpson(&mountain_speed, lo + (k - 1) * dx, lo + k * dx, 4);
            p.length = p.s_table[n];
        }
        total_length += p.length;
        for (double s : {0.0, 0.5 * p.length, p.length}) {
            Vec2 q = p.point(s);
            bbox_lo.x = std::min(bbox_lo.x, q.x);
            bbox_lo.y = std::min(bbox_lo.y, q.y);
            bbox_hi.x = std::max(bbox_hi.x, q.x);
            bbox_hi.y = std::max(bbox_hi.y, q.y);
        }
    }
    if (kind == ProfileKind::Cos3) bbox_lo.y = 0.0;
}

bool BoundaryProfile::inside(Vec2 p) const {
    switch (kind) {
    case ProfileKind::Flat:
        return p.x > bbox_lo.x && p.x < bbox_hi.x && p.y > bbox_lo.y && p.y < bbox_hi.y;
    case ProfileKind::Cos3:
        return p.x > bbox_lo.x && p.x < bbox_hi.x && p.y < bbox_hi.y &&
               p.y > mountain_height(p.x);
    case ProfileKind::Circle: {
        const auto& arc = pieces.front();
        return (p - arc.c).norm() < arc.r;
    }
    case ProfileKind::Polygon: {
        // ray crossing count along +x
        int crossings = 0;
        for (const auto& e : pieces) {
            Vec2 a = e.a, b = e.b;
            if ((a.y > p.y) != (b.y > p.y)) {
                double xc = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if (xc > p.x) ++crossings;
            }
        }
        return crossings % 2 == 1;
    }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Factories

namespace {
// Split [lo,hi] at interior points, emit one line piece per band.
void add_line_bands(std::vector<BoundaryPiece>& out, Vec2 from, Vec2 to,
                    const std::vector<double>& splits, const std::vector<int>& materials,
                    bool split_on_x) {
    std::vector<double> cuts;
    double lo = split_on_x ? from.x : from.y;
    double hi = split_on_x ? to.x : to.y;
    bool fwd = hi > lo;
    cuts.push_back(lo);
    for (double c : splits) cuts.push_back(c);
    cuts.push_back(hi);
    if (fwd) std::sort(cuts.begin() + 1, cuts.end() - 1);
    else     std::sort(cuts.begin() + 1, cuts.end() - 1, std::greater<>());
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        BoundaryPiece p;
        p.kind = BoundaryPiece::Kind::Line;
        p.material = materials.at(k);
        double u0 = (cuts[k] - lo) / (hi - lo), u1 = (cuts[k + 1] - lo) / (hi - lo);
        p.a = from + (to - from) * u0;
        p.b = from + (to - from) * u1;
        out.push_back(p);
    }
}
} // namespace

BoundaryProfile make_flat_profile(const std::vector<double>& bottom_splits,
                                  const std::vector<double>& right_splits,
                                  const std::vector<int>& bottom_materials,
                                  const std::vector<int>& right_materials,
                                  int top_material, int left_material) {
    BoundaryProfile pr;
    pr.kind = ProfileKind::Flat;
    add_line_bands(pr.pieces, {-kPi, 2.0}, {kPi, 2.0}, bottom_splits, bottom_materials, true);
    add_line_bands(pr.pieces, {kPi, 2.0}, {kPi, 4.0}, right_splits, right_materials, false);
    add_line_bands(pr.pieces, {kPi, 4.0}, {-kPi, 4.0}, {}, {top_material}, true);
    add_line_bands(pr.pieces, {-kPi, 4.0}, {-kPi, 2.0}, {}, {left_material}, false);
    pr.finalize();
    return pr;
}

BoundaryProfile make_cos3_profile(const std::vector<double>& bottom_splits,
                                  const std::vector<double>& right_splits,
                                  const std::vector<int>& bottom_materials,
                                  const std::vector<int>& right_materials,
                                  int top_material, int left_material) {
    BoundaryProfile pr;
    pr.kind = ProfileKind::Cos3;
    std::vector<double> cuts{-kPi};
    for (double c : bottom_splits) cuts.push_back(c);
    cuts.push_back(kPi);
    std::sort(cuts.begin() + 1, cuts.end() - 1);
    for (size_t k = 0; k + 1 < cuts.size(); ++k) {
        BoundaryPiece p;
        p.kind = BoundaryPiece::Kind::Mountain;
        p.material = bottom_materials.at(k);
        p.x0 = cuts[k];
        p.x1 = cuts[k + 1];
        pr.pieces.push_back(p);
    }
    double y_right = mountain_height(kPi);
    add_line_bands(pr.pieces, {kPi, y_right}, {kPi, 4.0}, right_splits, right_materials, false);
    add_line_bands(pr.pieces, {kPi, 4.0}, {-kPi, 4.0}, {}, {top_material}, true);
    add_line_bands(pr.pieces, {-kPi, 4.0}, {-kPi, mountain_height(-kPi)}, {}, {left_material}, false);
    pr.finalize();
    return pr;
}

BoundaryProfile make_circle_profile(double radius,
                                    const std::vector<double>& angle_splits,
                                    const std::vector<int>& materials) {
    BoundaryProfile pr;
    pr.kind = ProfileKind::Circle;
    std::vector<double> cuts = angle_splits;
    if (cuts.empty()) cuts.push_back(-kPi);
    std::sort(cuts.begin(), cuts.end());
    for (size_t k = 0; k < cuts.size(); ++k) {
        BoundaryPiece p;
        p.kind = BoundaryPiece::Kind::Arc;
        p.material = materials.at(k);
        p.c = {0.0, 0.0};
        p.r = radius;
        p.ang0 = cuts[k];
        p.ang1 = (k + 1 < cuts.size()) ? cuts[k + 1] : cuts[0] + 2.0 * kPi;
        pr.pieces.push_back(p);
    }
    pr.finalize();
    return pr;
}

BoundaryProfile make_polygon_profile(const std::vector<Vec2>& vertices,
                                     const std::vector<int>& materials) {
    BoundaryProfile pr;
    pr.kind = ProfileKind::Polygon;
    for (size_t k = 0; k < vertices.size(); ++k) {
        BoundaryPiece p;
        p.kind = BoundaryPiece::Kind::Line;
        p.material = materials.at(k % materials.size());
        p.a = vertices[k];
        p.b = vertices[(k + 1) % vertices.size()];
        pr.pieces.push_back(p);
    }
    pr.finalize();
    return pr;
}

// ---------------------------------------------------------------------------
// Mesh

BoundaryMesh build_mesh(const BoundaryProfile& profile, double h) {
    if (h <= 0.0) throw std::invalid_argument("build_mesh: h must be positive");
    for (const auto& p : profile.pieces)
        if (p.length < 1e-12)
            throw std::invalid_argument("build_mesh: degenerate boundary piece");
    double min_piece = 1e300;
    for (const auto& p : profile.pieces) min_piece = std::min(min_piece, p.length);
    if (h > profile.total_length)
        throw std::invalid_argument("build_mesh: h exceeds boundary length");

    BoundaryMesh mesh;
    mesh.h = h;
    for (int pi = 0; pi < int(profile.pieces.size()); ++pi) {
        const auto& p = profile.pieces[pi];
        int n = std::max(1, int(std::ceil(p.length / h)));
        mesh.piece_first.push_back(int(mesh.segments.size()));
        mesh.piece_count.push_back(n);
        double ds = p.length / n;
        for (int k = 0; k < n; ++k) {
            MeshSegment s;
            s.piece = pi;
            s.material = p.material;
            s.s_lo = k * ds;
            s.s_hi = (k + 1) * ds;
            s.length = ds;
            double sm = (k + 0.5) * ds;
            s.mid = p.point(sm);
            s.normal = p.normal(sm);
            mesh.segments.push_back(s);
        }
    }
    return mesh;
}

int BoundaryMesh::segment_at(int piece, double s_local) const {
    int n = piece_count[piece];
    const auto& first_seg = segments[piece_first[piece]];
    double ds = first_seg.length;
    int k = std::clamp(int(s_local / ds), 0, n - 1);
    return piece_first[piece] + k;
}

// ---------------------------------------------------------------------------
// Ray casting

namespace {

// Ray vs line segment a->b; returns t or infinity.
double ray_line_segment(Vec2 p, Vec2 v, Vec2 a, Vec2 b, double& s_out) {
    Vec2 d = b - a;
    double denom = v.cross(d);
    if (std::abs(denom) < 1e-300) return 1e300;
    Vec2 w = a - p;
    double t = w.cross(d) / denom;
    double u = w.cross(v) / denom;
    if (t <= kCastStart || u < -1e-12 || u > 1.0 + 1e-12) return 1e300;
    s_out = std::clamp(u, 0.0, 1.0) * d.norm();
    return t;
}

double ray_arc(Vec2 p, Vec2 v, const BoundaryPiece& arc, double& s_out) {
    Vec2 w = p - arc.c;
    double bq = w.dot(v);
    double cq = w.norm2() - arc.r * arc.r;
    double disc = bq * bq - cq;
    if (disc < 0.0) return 1e300;
    double sq = std::sqrt(disc);
    for (double t : {-bq - sq, -bq + sq}) {
        if (t <= kCastStart) continue;
        Vec2 hit = p + v * t;
        double ang = angle_of(hit - arc.c);
        double lo = std::min(arc.ang0, arc.ang1), hi = std::max(arc.ang0, arc.ang1);
        while (ang < lo) ang += 2.0 * kPi;
        while (ang > hi && ang - 2.0 * kPi >= lo) ang -= 2.0 * kPi;
        if (ang >= lo - 1e-12 && ang <= hi + 1e-12) {
            double frac = std::clamp((ang - arc.ang0) / (arc.ang1 - arc.ang0), 0.0, 1.0);
            s_out = frac * arc.length;
            return t;
        }
    }
    return 1e300;
}

// First crossing of y(t) = m(x(t)) by Lipschitz marching plus bisection.
// Returns t or infinity; x_hit receives the crossing abscissa.
double ray_mountain(Vec2 p, Vec2 v, double t_max, double& x_hit) {
    if (p.y >= 2.0 && v.y >= 0.0) return 1e300; // above the peak going up
    const double L = std::abs(v.y) + kMountainSlopeMax * std::abs(v.x) + 1e-30;
    const double min_step = 1e-6;
    auto f = [&](double t) {
        return p.y + t * v.y - mountain_height(p.x + t * v.x);
    };
    double t = kCastStart;
    double ft = f(t);
    double fmax = ft;
    if (ft < -kHitTol) return 1e300; // started below the graph: not our piece
    for (int iter = 0; iter < 400000 && t < t_max; ++iter) {
        double step = std::max(ft / L, min_step);
        double tn = std::min(t + step, t_max);
        double fn = f(tn);
        if (fn < 0.0) {
            // bracket [t, tn]
            double a = t, b = tn;
            for (int k = 0; k < 80 && b - a > 1e-13 * (1.0 + b); ++k) {
                double m = 0.5 * (a + b);
                (f(m) >= 0.0 ? a : b) = m;
            }
            x_hit = p.x + b * v.x;
            return b;
        }
        if (fn < kHitTol && fmax > 1e-9) { // tangential touch
            x_hit = p.x + tn * v.x;
            return tn;
        }
        t = tn;
        ft = fn;
        fmax = std::max(fmax, fn);
        if (tn >= t_max) break;
    }
    return 1e300;
}

} // namespace

Hit cast_to_boundary(const BoundaryProfile& profile, Vec2 x, Vec2 v) {
    Hit best;
    best.t = 1e300;
    // Wall/arc pieces first: they bound the march interval for the mountain.
    for (int pi = 0; pi < int(profile.pieces.size()); ++pi) {
        const auto& p = profile.pieces[pi];
        double s = 0.0, t = 1e300;
        if (p.kind == BoundaryPiece::Kind::Line)
            t = ray_line_segment(x, v, p.a, p.b, s);
        else if (p.kind == BoundaryPiece::Kind::Arc)
            t = ray_arc(x, v, p, s);
        else
            continue;
        if (t < best.t) {
            best.t = t;
            best.piece = pi;
            best.s_local = s;
        }
    }
    for (int pi = 0; pi < int(profile.pieces.size()); ++pi) {
        const auto& p = profile.pieces[pi];
        if (p.kind != BoundaryPiece::Kind::Mountain) continue;
        double xh = 0.0;
        double t = ray_mountain(x, v, std::min(best.t, 1e30), xh);
        if (t < best.t) {
            double lo = std::min(p.x0, p.x1), hi = std::max(p.x0, p.x1);
            if (xh < lo - 1e-9 || xh > hi + 1e-9) continue; // other band's span
            best.t = t;
            best.piece = pi;
            best.s_local = p.arclen_at_x(xh);
        }
    }
    if (best.piece < 0)
        throw std::runtime_error("cast_to_boundary: ray escaped the closed domain");
    const auto& pc = profile.pieces[best.piece];
    best.s_local = std::clamp(best.s_local, 0.0, pc.length);
    best.x = pc.point(best.s_local);
    return best;
}

Hit cast_to_boundary(const BoundaryProfile& profile, const BoundaryMesh& mesh, Vec2 x, Vec2 v) {
    Hit h = cast_to_boundary(profile, x, v);
    h.segment = mesh.segment_at(h.piece, h.s_local);
    return h;
}

// ---------------------------------------------------------------------------
// Jacobian, visibility, cells

double surface_jacobian(Vec2 x_from, Vec2 n_from, Vec2 x_to, Vec2 n_to,
                        JacobianConvention conv) {
    Vec2 d = x_to - x_from;
    double r2 = d.norm2();
    if (r2 < 1e-28) throw std::invalid_argument("surface_jacobian: coincident points");
    if (conv == JacobianConvention::Exact) return std::abs(n_to.dot(-d)) / r2;
    return std::abs(n_from.dot(d)) / r2;
}

namespace {

// Chord a->b clear of the mountain graph: strict g(x) = line(x) - m(x) > 0
// on the open x-interval. Critical points located by slope sign scan.
bool chord_clears_mountain(Vec2 a, Vec2 b) {
    if (std::min(a.y, b.y) >= 2.0) return true; // whole chord above the peak
    double xa = a.x, xb = b.x;
    if (xa > xb) { std::swap(xa, xb); std::swap(a, b); }
    double span = xb - xa;
    if (span < 1e-14) return true; // vertical chord: handled by wall geometry
    double q = (b.y - a.y) / span;
    auto g = [&](double x) { return a.y + q * (x - xa) - mountain_height(x); };
    auto gp = [&](double x) { return q - mountain_slope(x); };
    int n = std::clamp(int(span / 0.01), 8, 700);
    double dx = span / n;
    double x_prev = xa, gp_prev = gp(xa);
    for (int k = 1; k <= n; ++k) {
        double x = xa + k * dx;
        double gpx = gp(x);
        if (gp_prev <= 0.0 && gpx >= 0.0) {
            // local minimum of g in [x_prev, x]
            double lo = x_prev, hi = x;
            for (int it = 0; it < 60 && hi - lo > 1e-12; ++it) {
                double m = 0.5 * (lo + hi);
                (gp(m) <= 0.0 ? lo : hi) = m;
            }
            double xm = 0.5 * (lo + hi);
            if (xm > xa + 1e-12 && xm < xb - 1e-12 && g(xm) <= 1e-12) return false;
        }
        gp_prev = gpx;
        x_prev = x;
    }
    // also guard interior samples directly (cheap safety net)
    for (int k = 1; k < n; ++k)
        if (g(xa + k * dx) <= 1e-12) return false;
    return true;
}

bool chord_clears_polygon(const BoundaryProfile& pr, Vec2 a, Vec2 b) {
    // proper crossings against any edge block the chord
    Vec2 v = (b - a);
    double len = v.norm();
    Vec2 u = v * (1.0 / len);
    for (const auto& e : pr.pieces) {
        double s = 0.0;
        double t = ray_line_segment(a, u, e.a, e.b, s);
        if (t > 1e-9 && t < len - 1e-9) return false;
    }
    return pr.inside(a + u * (0.5 * len));
}

} // namespace

bool visible_points(const BoundaryProfile& profile, Vec2 a, Vec2 na, Vec2 b, Vec2 nb) {
    Vec2 d = b - a;
    if (d.norm2() < 1e-28) return false;
    // chord must leave both endpoints into the interior
    if (na.dot(d) >= 0.0 || nb.dot(-d) >= 0.0) return false;
    switch (profile.kind) {
    case ProfileKind::Circle: return true;
    case ProfileKind::Flat: return true;     // convex box
    case ProfileKind::Cos3: return chord_clears_mountain(a, b);
    case ProfileKind::Polygon: return chord_clears_polygon(profile, a, b);
    }
    return false;
}

bool visible(const BoundaryProfile& profile, const BoundaryMesh& mesh, int i, int j) {
    if (i == j) return false;
    const auto& si = mesh.segments[i];
    const auto& sj = mesh.segments[j];
    return visible_points(profile, si.mid, si.normal, sj.mid, sj.normal);
}

int direction_cell(const BoundaryMesh& mesh, int i, Vec2 v,
                   const std::vector<int>& visible_targets) {
    Vec2 xi = mesh.segments[i].mid;
    int best = -1;
    double best_d2 = 1e300;
    for (int j : visible_targets) {
        Vec2 u = (mesh.segments[j].mid - xi).normalized();
        double d2 = (v - u).norm2();
        if (d2 < best_d2 - 1e-15 || (std::abs(d2 - best_d2) <= 1e-15 && j < best)) {
            best_d2 = d2;
            best = j;
        }
    }
    return best;
}

int RowCells::find(double ang) const {
    int lo = 0, hi = int(cells.size()) - 1;
    while (lo <= hi) {
        int m = (lo + hi) / 2;
        if (ang < cells[m].lo) hi = m - 1;
        else if (ang > cells[m].hi) lo = m + 1;
        else return m;
    }
    return -1;
}

RowCells build_direction_cells(const BoundaryProfile& profile, const BoundaryMesh& mesh,
                               int i, const std::vector<int>& visible_targets) {
    RowCells out;
    if (visible_targets.empty()) return out;
    const auto& si = mesh.segments[i];
    const double th_n = angle_of(si.normal);
    const double hem_lo = th_n + 0.5 * kPi;
    const double hem_hi = th_n + 1.5 * kPi;
    const int nseg = mesh.size();

    std::vector<bool> vis(nseg, false);
    for (int j : visible_targets) vis[j] = true;

    struct Tgt { double ang; int j; };
    std::vector<Tgt> tg;
    tg.reserve(visible_targets.size());
    for (int j : visible_targets) {
        double a = angle_of(mesh.segments[j].mid - si.mid);
        while (a < hem_lo) a += 2.0 * kPi;
        while (a > hem_hi) a -= 2.0 * kPi;
        a = std::clamp(a, hem_lo, hem_hi);
        tg.push_back({a, j});
    }
    std::sort(tg.begin(), tg.end(), [](const Tgt& a, const Tgt& b) { return a.ang < b.ang; });

    auto hits_visible = [&](double ang) {
        Hit h = cast_to_boundary(profile, si.mid, unit_from_angle(ang));
        return vis[mesh.segment_at(h.piece, h.s_local)];
    };
    // bisect the visible->occluded transition between two probe angles
    auto refine_edge = [&](double a_true, double a_false) {
        for (int k = 0; k < 48 && std::abs(a_false - a_true) > 1e-12; ++k) {
            double m = 0.5 * (a_true + a_false);
            (hits_visible(m) ? a_true : a_false) = m;
        }
        return 0.5 * (a_true + a_false);
    };
    auto adjacent_on_boundary = [&](int a, int b) {
        int d = std::abs(a - b);
        return d == 1 || d == nseg - 1;
    };
    // Left/right cell edge across a possibly occluded angular gap.
    // Probes interior points; if all hit visible segments the plain bisector
    // is used, otherwise the occlusion boundary is located by bisection.
    auto gap_edges = [&](double ang_a, double ang_b, double& edge_a, double& edge_b) {
        const int probes = std::clamp(int((ang_b - ang_a) / 0.002), 9, 200);
        double first_false = 0.0, last_false = 0.0;
        bool any_false = false;
        double prev_true_lo = ang_a;
        for (int k = 1; k <= probes; ++k) {
            double a = ang_a + (ang_b - ang_a) * k / (probes + 1);
            if (!hits_visible(a)) {
                if (!any_false) first_false = a;
                last_false = a;
                any_false = true;
            } else if (!any_false) {
                prev_true_lo = a;
            }
        }
        if (!any_false) {
            edge_a = edge_b = 0.5 * (ang_a + ang_b);
            return;
        }
        edge_a = refine_edge(prev_true_lo, first_false);
        double next_true_hi = ang_b;
        edge_b = refine_edge(next_true_hi, last_false);
    };

    const double eps = 1e-7;
    size_t m = tg.size();
    std::vector<double> lo(m), hi(m);
    // lower hemisphere end
    {
        double end = hem_lo + eps;
        if (tg[0].ang - hem_lo < 2.0 * eps || hits_visible(end)) lo[0] = hem_lo;
        else lo[0] = refine_edge(tg[0].ang, end);
    }
    // interior boundaries
    for (size_t k = 1; k < m; ++k) {
        if (adjacent_on_boundary(tg[k - 1].j, tg[k].j) ||
            tg[k].ang - tg[k - 1].ang < 2.0 * eps) {
            hi[k - 1] = lo[k] = 0.5 * (tg[k - 1].ang + tg[k].ang);
        } else {
            double ea, eb;
            gap_edges(tg[k - 1].ang, tg[k].ang, ea, eb);
            hi[k - 1] = ea;
            lo[k] = eb;
        }
    }
    // upper hemisphere end
    {
        double end = hem_hi - eps;
        if (hem_hi - tg[m - 1].ang < 2.0 * eps || hits_visible(end)) hi[m - 1] = hem_hi;
        else hi[m - 1] = refine_edge(tg[m - 1].ang, end);
    }
    out.cells.reserve(m);
    for (size_t k = 0; k < m; ++k) {
        DirectionCell c;
        c.target = tg[k].j;
        c.lo = lo[k];
        c.hi = hi[k];
        if (c.hi > c.lo) {
            out.aperture += c.hi - c.lo;
            out.cells.push_back(c);
        }
    }
    return out;
}

Vec2 rotate_frame(Vec2 n_grid, Vec2 n_actual, Vec2 v, RotationMode mode) {
    if (mode == RotationMode::Identity) return v;
    double c = n_grid.dot(n_actual);
    if (std::abs(v.dot(n_grid)) >= 1.0 - 1e-14 && c <= -1.0 + 1e-12)
        return v; // antipodal normals: rotation direction ambiguous
    double d = angle_of(n_actual) - angle_of(n_grid);
    return rotate(v, d);
}

void dump_mesh_csv(const BoundaryMesh& mesh, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "j,x,y,nx,ny,length,material\n";
    f.precision(17);
    for (int j = 0; j < mesh.size(); ++j) {
        const auto& s = mesh.segments[j];
        f << j << ',' << s.mid.x << ',' << s.mid.y << ',' << s.normal.x << ','
          << s.normal.y << ',' << s.length << ',' << s.material << '\n';
    }
}

} // namespace mc2d
