#include "gcreg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "gcreg/error.hpp"
#include "gcreg/random.hpp"

namespace gcreg {

const char* to_string(SynthShape shape) {
  switch (shape) {
    case SynthShape::kSphere: return "sphere";
    case SynthShape::kBoxRoom: return "box-room";
    case SynthShape::kRandomSurface: return "random-surface";
  }
  return "?";
}

SynthShape synth_shape_from_string(const std::string& s) {
  if (s == "sphere") return SynthShape::kSphere;
  if (s == "box-room") return SynthShape::kBoxRoom;
  if (s == "random-surface") return SynthShape::kRandomSurface;
  throw Error(ErrorCode::kParameter, "unknown shape '" + s + "' (sphere | box-room | random-surface)");
}

void SynthConfig::validate() const {
  require(n_points >= 3, "synth: n_points must be >= 3");
  require(overlap_frac > 0.0 && overlap_frac <= 1.0, "synth: overlap_frac must be in (0, 1]");
  require(noise_sigma >= 0.0, "synth: noise_sigma must be >= 0");
  require(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0,
          "synth: max_rotation must be in [0, 180] degrees");
  require(max_translation >= 0.0, "synth: max_translation must be >= 0");
  require(scale > 0.0, "synth: scale must be positive");
}

namespace {

Vec3 unit_vector(Rng& rng) {
  const double z = rng.uniform(-1.0, 1.0);
  const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
  const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

struct Bump {
  Vec3 center;
  double amplitude;
  double width;
};

/// Closed star-shaped blob r(u) = 1 + Σ a_k exp(−‖u − c_k‖² / 2w_k²).
std::vector<Vec3> sample_blob(Rng& rng, std::size_t n) {
  std::vector<Bump> bumps(14);
  for (auto& b : bumps) b = {unit_vector(rng), rng.uniform(-0.2, 0.35), rng.uniform(0.2, 0.45)};
  std::vector<Vec3> out(n);
  for (auto& p : out) {
    const Vec3 u = unit_vector(rng);
    double r = 1.0;
    for (const auto& b : bumps)
      r += b.amplitude * std::exp(-(u - b.center).squaredNorm() / (2.0 * b.width * b.width));
    p = r * u;
  }
  return out;
}

struct Face {
  Vec3 origin, e1, e2;
  double area() const { return e1.cross(e2).norm(); }
};

void add_box_faces(std::vector<Face>& faces, const Vec3& lo, const Vec3& hi) {
  const Vec3 d = hi - lo;
  const Vec3 ex(d.x(), 0, 0), ey(0, d.y(), 0), ez(0, 0, d.z());
  faces.push_back({lo, ex, ey});
  faces.push_back({lo + ez, ex, ey});
  faces.push_back({lo, ex, ez});
  faces.push_back({lo + ey, ex, ez});
  faces.push_back({lo, ey, ez});
  faces.push_back({lo + ex, ey, ez});
}

/// Inside of an asymmetric room with a few box-shaped fixtures.
std::vector<Vec3> sample_room(Rng& rng, std::size_t n) {
  std::vector<Face> faces;
  add_box_faces(faces, Vec3(-1.6, -1.1, -1.0), Vec3(1.6, 1.1, 1.0));
  add_box_faces(faces, Vec3(-1.6, -1.1, -1.0), Vec3(-0.9, -0.2, -0.2));
  add_box_faces(faces, Vec3(0.5, 0.6, -1.0), Vec3(0.9, 1.1, 0.6));
  add_box_faces(faces, Vec3(0.2, -0.7, -1.0), Vec3(0.8, -0.3, -0.55));
  std::vector<double> cumulative;
  double total = 0.0;
  for (const auto& f : faces) cumulative.push_back(total += f.area());
  std::vector<Vec3> out(n);
  for (auto& p : out) {
    const double pick = rng.uniform() * total;
    const std::size_t k = static_cast<std::size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
    const Face& f = faces[std::min(k, faces.size() - 1)];
    p = f.origin + rng.uniform() * f.e1 + rng.uniform() * f.e2;
  }
  return out;
}

}  // namespace

SynthPair synth_pair(const SynthConfig& config) {
  config.validate();
  Rng rng(config.seed);

  const std::size_t m = config.n_points;
  const auto shared = static_cast<std::size_t>(std::llround(config.overlap_frac * static_cast<double>(m)));
  const std::size_t total = 2 * m - std::max<std::size_t>(shared, 1);
  const std::size_t total_points = config.overlap_frac >= 1.0 ? m : total;

  std::vector<Vec3> surface;
  switch (config.shape) {
    case SynthShape::kSphere: {
      surface.resize(total_points);
      for (auto& p : surface) p = unit_vector(rng);
      break;
    }
    case SynthShape::kBoxRoom: surface = sample_room(rng, total_points); break;
    case SynthShape::kRandomSurface: surface = sample_blob(rng, total_points); break;
  }
  for (auto& p : surface) p *= config.scale;

  // Two windows along a random view axis.
  const Vec3 axis = unit_vector(rng);
  std::vector<std::size_t> order(total_points);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return surface[a].dot(axis) < surface[b].dot(axis);
  });
  const std::size_t target_begin = total_points - m;

  const Vec3 rot_axis = unit_vector(rng);
  const double angle = rng.uniform() * config.max_rotation_deg * std::numbers::pi / 180.0;
  const Vec3 t_dir = unit_vector(rng);
  const double t_len = config.max_translation * std::cbrt(rng.uniform());
  SynthPair out;
  out.gt = RigidTransform(axis_angle(rot_axis, angle), t_len * t_dir);

  out.source.points.reserve(m);
  out.target.points.reserve(m);
  for (std::size_t k = 0; k < m; ++k) out.source.points.push_back(surface[order[k]]);
  for (std::size_t k = target_begin; k < total_points; ++k)
    out.target.points.push_back(out.gt.apply(surface[order[k]]));
  for (std::size_t k = target_begin; k < m; ++k) out.shared.emplace_back(k, k - target_begin);

  if (config.noise_sigma > 0.0) {
    for (auto& p : out.source.points)
      p += config.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
    for (auto& p : out.target.points)
      p += config.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
  }
  return out;
}

}  // namespace gcreg
