#ifndef SEALID_GEOMETRY_H_
#define SEALID_GEOMETRY_H_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sealid {

inline constexpr std::size_t kNumDesignVars = 13;

// The 13 physical design variables x1..x13, in the units listed in
// kDesignVariables.
using DesignVector = std::array<double, kNumDesignVars>;

struct VariableInfo {
  std::string_view name;   // "x1".."x13"
  std::string_view label;  // physical meaning
  std::string_view unit;
  std::string_view group;  // seal groove | piston and seal size | stiffness | connector
  double lo;
  double hi;
};

// Bounds table. The chamfer/angle/relief/round mapping of the groove
// parameters is a modelling choice of this project.
inline constexpr std::array<VariableInfo, kNumDesignVars> kDesignVariables{{
    {"x1", "chamfer", "mm", "seal groove", 0.1, 0.6},
    {"x2", "front-wall angle", "deg", "seal groove", 0.0, 20.0},
    {"x3", "groove depth D", "mm", "seal groove", 3.0, 5.0},
    {"x4", "groove bottom width W", "mm", "seal groove", 4.0, 6.0},
    {"x5", "bottom-front relief a", "mm", "seal groove", 0.2, 0.8},
    {"x6", "bottom-rear relief e", "mm", "seal groove", 0.2, 0.8},
    {"x7", "mouth-rear round leg R", "mm", "seal groove", 0.1, 0.5},
    {"x8", "seal height h", "mm", "piston and seal size", 2.0, 3.5},
    {"x9", "seal thickness t", "mm", "piston and seal size", 2.5, 3.5},
    {"x10", "caliper stiffness", "kN/mm", "stiffness", 20.0, 60.0},
    {"x11", "pad stiffness", "kN/mm", "stiffness", 10.0, 40.0},
    {"x12", "gp-bush stiffness", "kN/mm", "connector", 1.0, 5.0},
    {"x13", "gp-bush load limit", "kN", "connector", 0.5, 2.0},
}};

inline constexpr std::string_view kBoundsId = "seal-groove-bounds-v1";

// Design mapped onto [0,1]^13 through the bounds table.
struct NormalizedDesign {
  std::array<double, kNumDesignVars> u{};
  std::string_view bounds_id = kBoundsId;
};

NormalizedDesign normalize_design(const DesignVector& x);
DesignVector denormalize_design(const NormalizedDesign& u);
DesignVector denormalize_design(const std::array<double, kNumDesignVars>& u);
DesignVector midpoint_design();

struct Violation {
  std::string constraint;  // short id, e.g. "x8<=x3" or "bounds:x2"
  std::string message;
};

// Lists every violated bound and validity predicate. Empty means valid.
std::vector<Violation> validate(const DesignVector& x);
bool is_valid(const DesignVector& x);

struct Point2 {
  double z = 0.0;  // axial, rightward
  double y = 0.0;  // radial, downward
};

// Groove-local cross section. points[0..13] hold P1..P14.
struct SealGeometry {
  std::array<Point2, 14> points{};

  std::array<Point2, 8> groove_polygon() const;
  std::array<Point2, 4> seal_polygon() const;
  Point2 frame_min() const { return points[12]; }
  Point2 frame_max() const { return points[13]; }
};

// Throws Error(kInvalidDesign) naming the first violated constraint.
SealGeometry compute_points(const DesignVector& x);

struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major, 0 background / 1 material

  std::uint8_t at(int row, int col) const {
    return pixels[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t count_set() const;
};

inline constexpr int kDefaultResolution = 204;

// Pixel (row, col) is set iff its center, mapped back through the frame
// affine map, lies inside the groove or the seal polygon (even-odd per
// polygon, union across them).
RasterImage rasterize(const SealGeometry& g, int resolution = kDefaultResolution);

// Binary PGM (P5), 0 -> 0 and 1 -> 255.
std::string to_pgm(const RasterImage& img);

// SVG 1.1 drawing in the raster frame of `g` (viewBox 0 0 size size). The
// overlay is mapped through the same frame and drawn dashed.
std::string to_svg(const SealGeometry& g,
                   const std::optional<SealGeometry>& overlay = std::nullopt,
                   int size = kDefaultResolution);

}  // namespace sealid

#endif  // SEALID_GEOMETRY_H_
