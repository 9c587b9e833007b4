#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mc2d/vec2.hpp"

namespace mc2d {

// Locus tag of a phase point: interior, or on the boundary moving
// inward (incoming) / outward (outgoing).
enum class Locus : uint8_t { Interior, GammaMinus, GammaPlus };

struct PhasePoint {
    Vec2 x;
    Vec2 v;       // unit direction; ignored when dead
    Locus locus = Locus::Interior;
    bool dead = false;
};

enum class ProfileKind : uint8_t { Flat, Cos3, Circle, Polygon };

// One parametric boundary piece. Pieces are concatenated in order and
// traversed so that the domain interior lies on the left of the tangent;
// outward normals are the tangent rotated clockwise.
struct BoundaryPiece {
    enum class Kind : uint8_t { Line, Arc, Mountain } kind;
    int material = 0;

    // Line: a -> b.
    Vec2 a, b;
    // Arc: circle of radius r about c, from angle ang0 to ang1 (ccw if ang1>ang0).
    Vec2 c;
    double r = 0.0, ang0 = 0.0, ang1 = 0.0;
    // Mountain: graph y = 1 + cos^3(x) traversed from x0 to x1 (x0 > x1 walks
    // the floor right-to-left so the interior stays on the left).
    double x0 = 0.0, x1 = 0.0;

    double length = 0.0;              // arc length of the piece
    std::vector<double> s_table;      // Mountain only: arc length at uniform x samples

    Vec2 point(double s) const;       // s in [0, length]
    Vec2 normal(double s) const;      // outward unit normal
    double param_x(double s) const;   // Mountain: x coordinate at arc length s
    double arclen_at_x(double x) const;
};

double mountain_height(double x);      // 1 + cos^3 x
double mountain_slope(double x);       // d/dx (1 + cos^3 x)

struct BoundaryProfile {
    ProfileKind kind = ProfileKind::Flat;
    std::vector<BoundaryPiece> pieces;
    double total_length = 0.0;
    Vec2 bbox_lo, bbox_hi;

    // Interior test (closed domain). Used by oracles and the chord tests.
    bool inside(Vec2 p) const;
    void finalize();
};

// Factories. Material ids are assigned by the caller through the piece
// list; these build the geometry with the conventional piece order.
BoundaryProfile make_flat_profile(const std::vector<double>& bottom_splits,
                                  const std::vector<double>& right_splits,
                                  const std::vector<int>& bottom_materials,
                                  const std::vector<int>& right_materials,
                                  int top_material, int left_material);
BoundaryProfile make_cos3_profile(const std::vector<double>& bottom_splits,
                                  const std::vector<double>& right_splits,
                                  const std::vector<int>& bottom_materials,
                                  const std::vector<int>& right_materials,
                                  int top_material, int left_material);
BoundaryProfile make_circle_profile(double radius,
                                    const std::vector<double>& angle_splits,
                                    const std::vector<int>& materials);
BoundaryProfile make_polygon_profile(const std::vector<Vec2>& vertices,
                                     const std::vector<int>& materials);

struct MeshSegment {
    Vec2 mid;          // midpoint on the true curve (mid arc length)
    Vec2 normal;       // outward unit normal at the midpoint
    double length;     // arc length measure |dX_j|
    int piece;
    double s_lo, s_hi; // arc-length span within the piece
    int material;
};

struct BoundaryMesh {
    double h = 0.0;
    std::vector<MeshSegment> segments;
    std::vector<int> piece_first;  // first segment index of each piece
    std::vector<int> piece_count;

    int segment_at(int piece, double s_local) const;
    int size() const { return int(segments.size()); }
};

// Subdivide every piece into ceil(len/h) equal-arc segments. Piece
// boundaries (corners, material splits, detector endpoints) are mesh
// nodes by construction.
BoundaryMesh build_mesh(const BoundaryProfile& profile, double h);

struct Hit {
    Vec2 x;
    double t = 0.0;     // travel time (= distance, unit speed)
    int piece = -1;
    double s_local = 0.0;
    int segment = -1;   // filled when a mesh is supplied
};

// First boundary intersection of the ray x + t v, t > 0. The start may be
// interior or on the boundary pointing inward. Throws on numerical failure
// (a closed domain guarantees a hit).
Hit cast_to_boundary(const BoundaryProfile& profile, Vec2 x, Vec2 v);
Hit cast_to_boundary(const BoundaryProfile& profile, const BoundaryMesh& mesh, Vec2 x, Vec2 v);

enum class JacobianConvention : uint8_t { Exact, Paper };

// Direction-to-arclength change of variables between two boundary points.
// Exact: |nu_to . (from - to)| / |from - to|^2 (normal at the target).
// Paper: |nu_from . (to - from)| / |from - to|^2 (normal at the observer).
double surface_jacobian(Vec2 x_from, Vec2 n_from, Vec2 x_to, Vec2 n_to,
                        JacobianConvention conv = JacobianConvention::Exact);

// True iff the open chord between the two boundary points lies in the
// domain interior and the points face each other.
bool visible_points(const BoundaryProfile& profile, Vec2 a, Vec2 na, Vec2 b, Vec2 nb);
bool visible(const BoundaryProfile& profile, const BoundaryMesh& mesh, int i, int j);

// Direction cells for one mesh row. Inward directions from segment i are
// partitioned among the visible targets by nearest midpoint direction;
// cell edges at visibility transitions are refined to the actual occlusion
// boundary so that the total cell measure matches the unoccluded aperture.
struct DirectionCell {
    int target = -1;
    double lo = 0.0, hi = 0.0;  // angle span, lo < hi
    double measure() const { return hi - lo; }
};

struct RowCells {
    std::vector<DirectionCell> cells;  // sorted by angle
    double aperture = 0.0;             // sum of cell measures

    // Cell containing direction angle `ang`, or -1 if it falls in an
    // occluded gap.
    int find(double ang) const;
};

RowCells build_direction_cells(const BoundaryProfile& profile, const BoundaryMesh& mesh,
                               int i, const std::vector<int>& visible_targets);

// Nearest visible target by direction (the cell classifier); ties break to
// the smaller index.
int direction_cell(const BoundaryMesh& mesh, int i, Vec2 v,
                   const std::vector<int>& visible_targets);

enum class RotationMode : uint8_t { Identity, Exact };

// Frame rotation between the grid midpoint and the actual point on the
// segment: exact mode preserves the normal component, v'.n_actual = v.n_grid.
Vec2 rotate_frame(Vec2 n_grid, Vec2 n_actual, Vec2 v, RotationMode mode);

void dump_mesh_csv(const BoundaryMesh& mesh, const std::string& path);

} // namespace mc2d
