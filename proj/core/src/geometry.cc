#include "sealid/geometry.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <span>

#include "sealid/error.h"

namespace sealid {

NormalizedDesign normalize_design(const DesignVector& x) {
  NormalizedDesign out;
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    const auto& v = kDesignVariables[i];
    out.u[i] = (x[i] - v.lo) / (v.hi - v.lo);
  }
  return out;
}

DesignVector denormalize_design(const std::array<double, kNumDesignVars>& u) {
  DesignVector x;
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    const auto& v = kDesignVariables[i];
    x[i] = v.lo + u[i] * (v.hi - v.lo);
  }
  return x;
}

DesignVector denormalize_design(const NormalizedDesign& u) {
  return denormalize_design(u.u);
}

DesignVector midpoint_design() {
  DesignVector x;
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    x[i] = 0.5 * (kDesignVariables[i].lo + kDesignVariables[i].hi);
  }
  return x;
}

std::vector<Violation> validate(const DesignVector& x) {
  std::vector<Violation> out;
  for (std::size_t i = 0; i < kNumDesignVars; ++i) {
    const auto& v = kDesignVariables[i];
    if (!(x[i] >= v.lo && x[i] <= v.hi)) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s (%s) = %g outside [%g, %g]",
                    std::string(v.name).c_str(), std::string(v.label).c_str(),
                    x[i], v.lo, v.hi);
      out.push_back({"bounds:" + std::string(v.name), buf});
    }
  }
  const double chamfer = x[0], depth = x[2], width = x[3];
  const double relief_front = x[4], relief_rear = x[5], seal_height = x[7];
  if (!(seal_height <= depth)) {
    out.push_back({"x8<=x3", "seal height exceeds groove depth"});
  }
  if (!(relief_front + relief_rear < width)) {
    out.push_back({"x5+x6<x4", "bottom reliefs do not fit the groove width"});
  }
  if (!(chamfer < depth)) {
    out.push_back({"x1<x3", "chamfer is not smaller than groove depth"});
  }
  return out;
}

bool is_valid(const DesignVector& x) { return validate(x).empty(); }

std::array<Point2, 8> SealGeometry::groove_polygon() const {
  std::array<Point2, 8> poly;
  std::copy_n(points.begin(), 8, poly.begin());
  return poly;
}

std::array<Point2, 4> SealGeometry::seal_polygon() const {
  std::array<Point2, 4> poly;
  std::copy_n(points.begin() + 8, 4, poly.begin());
  return poly;
}

SealGeometry compute_points(const DesignVector& x) {
  auto violations = validate(x);
  if (!violations.empty()) {
    throw Error(ErrorCode::kInvalidDesign,
                violations.front().constraint + ": " + violations.front().message);
  }
  const double ch = x[0];
  const double tan_a = std::tan(x[1] * std::numbers::pi / 180.0);
  const double depth = x[2], width = x[3], a = x[4], e = x[5], round = x[6];
  const double h = x[7], t = x[8];
  // z where the front wall would meet the groove bottom.
  const double zb = (depth - ch) * tan_a;

  SealGeometry g;
  auto& p = g.points;
  p[0] = {ch, 0.0};
  p[1] = {0.0, ch};
  p[2] = {(depth - a - ch) * tan_a, depth - a};
  p[3] = {zb + a, depth};
  p[4] = {zb + width - e, depth};
  p[5] = {zb + width, depth - e};
  p[6] = {zb + width, round};
  p[7] = {zb + width + round, 0.0};
  // Seal rectangle seated on the bottom and rear wall.
  p[8] = {zb + width - t, depth};
  p[9] = {zb + width, depth};
  p[10] = {zb + width, depth - h};
  p[11] = {zb + width - t, depth - h};

  double min_z = p[0].z, max_z = p[0].z;
  for (int i = 1; i < 12; ++i) {
    min_z = std::min(min_z, p[i].z);
    max_z = std::max(max_z, p[i].z);
  }
  const double margin = 0.1 * depth;
  p[12] = {min_z - margin, -margin};
  p[13] = {max_z + margin, depth + margin};
  return g;
}

std::size_t RasterImage::count_set() const {
  return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), 1));
}

namespace {

// Crossing-number test (even-odd rule).
bool inside(std::span<const Point2> poly, double z, double y) {
  bool in = false;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    const Point2& a = poly[i];
    const Point2& b = poly[j];
    if ((a.y > y) != (b.y > y)) {
      const double zc = a.z + (y - a.y) * (b.z - a.z) / (b.y - a.y);
      if (z < zc) in = !in;
    }
  }
  return in;
}

struct FrameMap {
  Point2 lo;
  double sz;  // pixels per mm along z
  double sy;

  FrameMap(const SealGeometry& g, int size) : lo(g.frame_min()) {
    const Point2 hi = g.frame_max();
    const double wz = hi.z - lo.z;
    const double wy = hi.y - lo.y;
    if (!(wz > 0.0) || !(wy > 0.0)) {
      throw Error(ErrorCode::kDegenerateFrame, "frame has zero extent");
    }
    sz = size / wz;
    sy = size / wy;
  }
  double col(double z) const { return (z - lo.z) * sz; }
  double row(double y) const { return (y - lo.y) * sy; }
};

}  // namespace

RasterImage rasterize(const SealGeometry& g, int resolution) {
  if (resolution < 16) {
    throw Error(ErrorCode::kInvalidArgument, "resolution must be >= 16");
  }
  const FrameMap map(g, resolution);
  const auto groove = g.groove_polygon();
  const auto seal = g.seal_polygon();

  RasterImage img;
  img.width = img.height = resolution;
  img.pixels.assign(static_cast<std::size_t>(resolution) * resolution, 0);
  for (int r = 0; r < resolution; ++r) {
    const double y = map.lo.y + (r + 0.5) / map.sy;
    for (int c = 0; c < resolution; ++c) {
      const double z = map.lo.z + (c + 0.5) / map.sz;
      if (inside(groove, z, y) || inside(seal, z, y)) {
        img.pixels[static_cast<std::size_t>(r) * resolution + c] = 1;
      }
    }
  }
  return img;
}

std::string to_pgm(const RasterImage& img) {
  std::string out = "P5\n" + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.pixels.size());
  for (auto v : img.pixels) out.push_back(v ? static_cast<char>(255) : '\0');
  return out;
}

namespace {

std::string svg_path(std::span<const Point2> poly, const FrameMap& map) {
  std::string d;
  char buf[64];
  for (std::size_t i = 0; i < poly.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%s%.3f %.3f ", i == 0 ? "M " : "L ",
                  map.col(poly[i].z), map.row(poly[i].y));
    d += buf;
  }
  d += "Z";
  return d;
}

void append_outlines(std::string& out, const SealGeometry& g, const FrameMap& map,
                     std::string_view style) {
  const auto groove = g.groove_polygon();
  const auto seal = g.seal_polygon();
  out += "  <path class=\"groove\" d=\"" + svg_path(groove, map) + "\" " +
         std::string(style) + "/>\n";
  out += "  <path class=\"seal\" d=\"" + svg_path(seal, map) + "\" " +
         std::string(style) + "/>\n";
}

}  // namespace

std::string to_svg(const SealGeometry& g, const std::optional<SealGeometry>& overlay,
                   int size) {
  const FrameMap map(g, size);
  const std::string dim = std::to_string(size);
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
      dim + "\" height=\"" + dim + "\" viewBox=\"0 0 " + dim + " " + dim + "\">\n";
  out += "  <rect x=\"0\" y=\"0\" width=\"" + dim + "\" height=\"" + dim +
         "\" fill=\"white\"/>\n";
  append_outlines(out, g, map, "fill=\"none\" stroke=\"black\" stroke-width=\"1\"");
  if (overlay) {
    append_outlines(out, *overlay, map,
                    "fill=\"none\" stroke=\"red\" stroke-width=\"1\" "
                    "stroke-dasharray=\"4 2\"");
  }
  out += "</svg>\n";
  return out;
}

}  // namespace sealid
