#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "lumiedit/camera.hpp"
#include "lumiedit/error.hpp"
#include "lumiedit/math.hpp"
#include "lumiedit/raster.hpp"
#include "lumiedit/sg.hpp"

namespace lumiedit {

// ---------------------------------------------------------------------------
// Light types. All geometry is in camera space. Windows and box lamps use
// full side lengths: q = c + 0.5 u x + 0.5 v y with u, v in [-1, 1].
// ---------------------------------------------------------------------------

template <class T>
struct WindowLight {
  using scalar_type = T;
  std::string id;
  Vec3<T> c, x, y;
  WindowRadiance<T> radiance;
  bool visible = false;
  bool enabled = true;
  std::string mask_id;  // empty for invisible windows
};

template <class T>
struct BoxLamp {
  using scalar_type = T;
  std::string id;
  Vec3<T> c, x, y, z;
  Vec3<T> w;
  bool enabled = true;
};

enum class SurfelTag { kVisible, kMirrored, kEdge };

inline const char* to_string(SurfelTag t) {
  switch (t) {
    case SurfelTag::kVisible: return "visible";
    case SurfelTag::kMirrored: return "mirrored";
    case SurfelTag::kEdge: return "edge";
  }
  return "?";
}

template <class T>
struct Surfel {
  Vec3<T> q;
  Vec3<T> n;
  T area;
  SurfelTag tag = SurfelTag::kVisible;
};

// Walker/Vose alias table: O(1) draws from a fixed discrete distribution.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    if (n == 0) throw Error(ErrorKind::kInvalidArgument, "alias", "empty weight list");
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (!(total > 0.0)) throw Error(ErrorKind::kInvalidArgument, "alias", "weights must sum to a positive value");
    pmf_.resize(n);
    prob_.assign(n, 0.0);
    alias_.assign(n, 0);
    std::vector<double> scaled(n);
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i) {
      pmf_[i] = weights[i] / total;
      scaled[i] = pmf_[i] * static_cast<double>(n);
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    }
    while (!small.empty() && !large.empty()) {
      const auto s = small.back();
      small.pop_back();
      const auto l = large.back();
      prob_[s] = scaled[s];
      alias_[s] = l;
      scaled[l] = (scaled[l] + scaled[s]) - 1.0;
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (auto i : large) prob_[i] = 1.0;
    for (auto i : small) prob_[i] = 1.0;
  }

  std::size_t size() const { return pmf_.size(); }
  double pmf(std::size_t i) const { return pmf_[i]; }

  // u in [0, 1).
  std::size_t sample(double u) const {
    const double scaled = u * static_cast<double>(prob_.size());
    std::size_t i = std::min(static_cast<std::size_t>(scaled), prob_.size() - 1);
    const double frac = scaled - static_cast<double>(i);
    return frac < prob_[i] ? i : alias_[i];
  }

 private:
  std::vector<double> pmf_;
  std::vector<double> prob_;
  std::vector<std::uint32_t> alias_;
};

struct VisibleSurfel {
  Vec3d q;
  Vec3d n;
  double area = 0.0;
  double pixel_side = 0.0;  // 2 D tan(f/2) / S at this pixel
  bool boundary = false;    // member of Edge(M, -1)
  int row = 0, col = 0;
};

struct SurfelRef {
  SurfelTag tag;
  std::uint32_t source;  // index into visible surfels
};

// Immutable part of a visible lamp, shared by every scalar instantiation.
struct SurfelGeometry {
  std::vector<VisibleSurfel> visible;
  std::vector<SurfelRef> refs;  // visible, mirrored, then edge surfels
  AliasTable selection;         // area-proportional at the reference center
  Vec3d reference_center;
  bool point_reflection = false;
};

template <class T>
struct SurfelLamp {
  using scalar_type = T;
  std::string id;
  std::string mask_id;
  Vec3d center_dir{0.0, 0.0, -1.0};  // fixed camera ray through the initial center
  T center_dist{1.0};
  Vec3<T> w;
  bool enabled = true;
  std::shared_ptr<const SurfelGeometry> geometry;

  Vec3<T> center() const { return lift<T>(center_dir) * center_dist; }
};

template <class T>
using Light = std::variant<WindowLight<T>, BoxLamp<T>, SurfelLamp<T>>;

template <class T>
const std::string& light_id(const Light<T>& l) {
  return std::visit([](const auto& x) -> const std::string& { return x.id; }, l);
}
template <class T>
bool light_enabled(const Light<T>& l) {
  return std::visit([](const auto& x) { return x.enabled; }, l);
}
template <class T>
void set_light_enabled(Light<T>& l, bool on) {
  std::visit([on](auto& x) { x.enabled = on; }, l);
}
template <class T>
const char* light_type_name(const Light<T>& l) {
  switch (l.index()) {
    case 0: return "window";
    case 1: return "box_lamp";
    default: return "surfel_lamp";
  }
}
template <class T>
bool light_visible(const Light<T>& l) {
  if (const auto* w = std::get_if<WindowLight<T>>(&l)) return w->visible;
  return std::holds_alternative<SurfelLamp<T>>(l);
}
template <class T>
std::string light_mask_id(const Light<T>& l) {
  if (const auto* w = std::get_if<WindowLight<T>>(&l)) return w->mask_id;
  if (const auto* s = std::get_if<SurfelLamp<T>>(&l)) return s->mask_id;
  return {};
}

// ---------------------------------------------------------------------------
// Visible-lamp surfel construction
// ---------------------------------------------------------------------------

template <class T>
Surfel<T> surfel_at(const SurfelLamp<T>& lamp, const SurfelRef& ref) {
  const VisibleSurfel& s = lamp.geometry->visible[ref.source];
  const Vec3<T> q = lift<T>(s.q);
  const Vec3<T> n = lift<T>(s.n);
  if (ref.tag == SurfelTag::kVisible) return {q, n, T(s.area), SurfelTag::kVisible};

  const Vec3<T> c = lamp.center();
  const Vec3<T> dc = lift<T>(lamp.center_dir);
  Vec3<T> q_hat, n_hat;
  if (lamp.geometry->point_reflection) {
    q_hat = c * 2.0 - q;
    n_hat = -n;
  } else {
    // Reflection through the plane orthogonal to d_c that contains c.
    q_hat = (c - dc * dot(q, dc)) * 2.0 + q;
    n_hat = n - dc * (2.0 * dot(n, dc));
  }
  if (ref.tag == SurfelTag::kMirrored) return {q_hat, n_hat, T(s.area), SurfelTag::kMirrored};

  Vec3<T> q_e = (q + q_hat) * 0.5;
  if (lamp.geometry->point_reflection) {
    const Vec3<T> off = q - c;
    q_e = c + off - dc * dot(off, dc);
  }
  const T area = length(q - q_hat) * s.pixel_side;
  return {q_e, normalize(q_e - c), area, SurfelTag::kEdge};
}

template <class T>
std::vector<Surfel<T>> materialize_surfels(const SurfelLamp<T>& lamp) {
  std::vector<Surfel<T>> out;
  out.reserve(lamp.geometry->refs.size());
  for (const auto& ref : lamp.geometry->refs) out.push_back(surfel_at(lamp, ref));
  return out;
}

inline bool mask_on(const Raster& mask, int row, int col) { return mask.at(row, col) > 0.5f; }

inline std::size_t mask_count(const Raster& mask) {
  std::size_t n = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) n += mask_on(mask, r, c);
  return n;
}

// Square structuring element of radius `radius` (Chebyshev distance).
inline Raster dilate(const Raster& mask, int radius) {
  Raster out(mask.width(), mask.height(), 1, 0.0f);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask_on(mask, r, c)) continue;
      for (int dr = -radius; dr <= radius; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < mask.height() && cc >= 0 && cc < mask.width()) out.at(rr, cc) = 1.0f;
        }
    }
  }
  return out;
}

// Out-of-image neighbours do not erode.
inline Raster erode(const Raster& mask, int radius) {
  Raster out(mask.width(), mask.height(), 1, 0.0f);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask_on(mask, r, c)) continue;
      bool keep = true;
      for (int dr = -radius; dr <= radius && keep; ++dr)
        for (int dc = -radius; dc <= radius; ++dc) {
          const int rr = r + dr, cc = c + dc;
          if (rr >= 0 && rr < mask.height() && cc >= 0 && cc < mask.width() && !mask_on(mask, rr, cc)) {
            keep = false;
            break;
          }
        }
      if (keep) out.at(r, c) = 1.0f;
    }
  }
  return out;
}

// Edge(M, n): dilation ring for n > 0, inner boundary M - erosion(M, 1) for n < 0.
inline Raster mask_edge(const Raster& mask, int n) {
  const Raster other = n > 0 ? dilate(mask, n) : erode(mask, -n);
  Raster out(mask.width(), mask.height(), 1, 0.0f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const bool m = mask.data()[i] > 0.5f, o = other.data()[i] > 0.5f;
    out.data()[i] = (n > 0 ? (o && !m) : (m && !o)) ? 1.0f : 0.0f;
  }
  return out;
}

struct LampBuildOptions {
  FootprintModel footprint = FootprintModel::kParaxial;
  bool point_reflection = false;
};

inline SurfelLamp<double> build_visible_lamp(const CameraIntrinsics& cam, const Raster& depth,
                                              const Raster& normal, const Raster& mask, const Vec3d& center,
                                              const LampBuildOptions& opt = {}) {
  if (!mask.same_size(depth)) throw Error(ErrorKind::kDimensionMismatch, "mask", "mask size differs from depth");
  if (mask_count(mask) == 0) throw Error(ErrorKind::kInvalidArgument, "mask", "lamp mask is empty");
  const double dist = length(center);
  if (!(dist > 0.0)) throw Error(ErrorKind::kDegenerate, "c", "lamp center at the camera origin");

  auto geom = std::make_shared<SurfelGeometry>();
  geom->point_reflection = opt.point_reflection;
  geom->reference_center = center;
  const Raster boundary = mask_edge(mask, -1);
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask_on(mask, r, c)) continue;
      VisibleSurfel s;
      const double d = depth.at(r, c);
      s.q = cam.unproject(r, c, d);
      s.n = normal.rgb(r, c);
      s.area = pixel_footprint_area(cam, r, c, d, s.n, opt.footprint).area;
      s.pixel_side = cam.pixel_pitch() * d;
      s.boundary = mask_on(boundary, r, c);
      s.row = r;
      s.col = c;
      if (length(s.q - center) < 1e-9) {
        throw Error(ErrorKind::kDegenerate, "c", "lamp center coincides with a visible surface point");
      }
      geom->visible.push_back(s);
    }
  }
  const auto n = static_cast<std::uint32_t>(geom->visible.size());
  for (std::uint32_t i = 0; i < n; ++i) geom->refs.push_back({SurfelTag::kVisible, i});
  for (std::uint32_t i = 0; i < n; ++i) geom->refs.push_back({SurfelTag::kMirrored, i});
  for (std::uint32_t i = 0; i < n; ++i)
    if (geom->visible[i].boundary) geom->refs.push_back({SurfelTag::kEdge, i});

  SurfelLamp<double> lamp;
  lamp.center_dir = center / dist;
  lamp.center_dist = dist;
  lamp.geometry = geom;
  std::vector<double> areas;
  areas.reserve(geom->refs.size());
  for (const auto& ref : geom->refs) {
    const Surfel<double> s = surfel_at(lamp, ref);
    if (ref.tag == SurfelTag::kEdge && length(s.q - center) < 1e-12) {
      throw Error(ErrorKind::kDegenerate, "c", "edge surfel collapses onto the lamp center");
    }
    areas.push_back(s.area);
  }
  geom->selection = AliasTable(areas);
  return lamp;
}

enum class CenterKind { kWindow, kLamp };

struct InitialCenter {
  Vec3d c;
  bool ring_fallback = false;  // dilation ring was empty; mask depth used
};

inline InitialCenter initial_center(const CameraIntrinsics& cam, const Raster& depth, const Raster& mask,
                                    CenterKind kind) {
  if (!mask.same_size(depth)) throw Error(ErrorKind::kDimensionMismatch, "mask", "mask size differs from depth");
  Vec3d ray_sum{0, 0, 0};
  double mask_depth = 0.0;
  std::size_t count = 0;
  for (int r = 0; r < mask.height(); ++r)
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask_on(mask, r, c)) continue;
      ray_sum += cam.ray(r, c);
      mask_depth += depth.at(r, c);
      ++count;
    }
  if (count == 0) throw Error(ErrorKind::kInvalidArgument, "mask", "mask is empty");
  const Vec3d mean_ray = ray_sum / static_cast<double>(count);
  double mean_depth = mask_depth / static_cast<double>(count);
  InitialCenter out;
  if (kind == CenterKind::kWindow) {
    const Raster ring = mask_edge(mask, 7);
    double ring_depth = 0.0;
    std::size_t ring_count = 0;
    for (int r = 0; r < ring.height(); ++r)
      for (int c = 0; c < ring.width(); ++c)
        if (mask_on(ring, r, c)) {
          ring_depth += depth.at(r, c);
          ++ring_count;
        }
    if (ring_count > 0) {
      mean_depth = ring_depth / static_cast<double>(ring_count);
    } else {
      out.ring_fallback = true;
    }
  }
  out.c = mean_ray * mean_depth;
  return out;
}

// ---------------------------------------------------------------------------
// Constrained parameter transforms
// ---------------------------------------------------------------------------

inline double intensity_map(double w_raw) {
  if (!(w_raw >= 0.0 && w_raw < 1.0)) throw Error(ErrorKind::kOutOfRange, "w_raw", "must lie in [0, 1)");
  return std::tan(0.5 * kPi * w_raw);
}

inline double intensity_unmap(double w) {
  if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::kOutOfRange, "w", "must be finite and >= 0");
  return 2.0 / kPi * std::atan(w);
}

struct BandwidthRange {
  double lo, hi;  // bounds on the pre-tan parameter
};

inline BandwidthRange bandwidth_range(Lobe lobe) {
  switch (lobe) {
    case Lobe::kSun: return {0.9, 1.0 - 1e-6};
    case Lobe::kSky:
    case Lobe::kGround: return {0.0, 1.0 - 1e-4};
  }
  return {0.0, 1.0};
}

inline double bandwidth_min(Lobe lobe) { return std::tan(0.5 * kPi * bandwidth_range(lobe).lo); }
inline double bandwidth_max(Lobe lobe) { return std::tan(0.5 * kPi * bandwidth_range(lobe).hi); }

inline double bandwidth_map(double lambda_raw, Lobe lobe) {
  if (!(lambda_raw >= 0.0 && lambda_raw <= 1.0)) {
    throw Error(ErrorKind::kOutOfRange, "lambda_raw", "must lie in [0, 1]");
  }
  const auto [lo, hi] = bandwidth_range(lobe);
  return std::tan(0.5 * kPi * (lambda_raw * (hi - lo) + lo));
}

inline double bandwidth_unmap(double lambda, Lobe lobe) {
  const auto [lo, hi] = bandwidth_range(lobe);
  const double raw = (2.0 / kPi * std::atan(lambda) - lo) / (hi - lo);
  if (!(raw >= -1e-12 && raw <= 1.0 + 1e-12)) {
    throw Error(ErrorKind::kOutOfRange, std::string(lobe_name(static_cast<int>(lobe))) + ".lambda",
                "bandwidth outside the admissible range");
  }
  return std::clamp(raw, 0.0, 1.0);
}

// Center of an invisible light placed outside the view frustum. The frame
// is the camera frame; theta is measured from +z, which points away from the
// frustum (the camera looks down -z).
inline Vec3d frustum_center(double theta, double phi, double dist, const CameraIntrinsics& cam) {
  if (!(theta >= 0.0 && theta <= kPi - cam.fov_short_axis)) {
    throw Error(ErrorKind::kOutOfRange, "theta_c", "must lie in [0, pi - fov]");
  }
  if (!(phi >= -kPi && phi <= kPi)) throw Error(ErrorKind::kOutOfRange, "phi_c", "must lie in [-pi, pi]");
  if (!(dist >= 0.0)) throw Error(ErrorKind::kOutOfRange, "l_c", "must be >= 0");
  const Vec3d dir{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
  return dir * dist;
}

inline constexpr Vec3d kUp{0.0, 1.0, 0.0};

struct WindowAxes {
  Vec3d x, y;
};

inline WindowAxes window_axes(const Vec3d& y_offset, const Vec3d& z, double len_x, double len_y) {
  const Vec3d ysum = y_offset + kUp;
  if (length(ysum) < 1e-12) throw Error(ErrorKind::kDegenerate, "y_raw", "y offset cancels the up vector");
  const Vec3d y = normalize(ysum);
  const Vec3d xc = cross(z, y);
  if (length(xc) < 1e-12) throw Error(ErrorKind::kDegenerate, "z", "z is parallel to y");
  return {normalize(xc) * len_x, y * len_y};
}

// Box axes from intrinsic X-Y-Z Euler angles and side lengths.
inline std::array<Vec3d, 3> euler_axes(double alpha, double beta, double gamma, const Vec3d& lengths) {
  const double ca = std::cos(alpha), sa = std::sin(alpha);
  const double cb = std::cos(beta), sb = std::sin(beta);
  const double cg = std::cos(gamma), sg = std::sin(gamma);
  // Columns of Rz(gamma) * Ry(beta) * Rx(alpha).
  const Vec3d ex{cg * cb, sg * cb, -sb};
  const Vec3d ey{cg * sb * sa - sg * ca, sg * sb * sa + cg * ca, cb * sa};
  const Vec3d ez{cg * sb * ca + sg * sa, sg * sb * ca - cg * sa, cb * ca};
  return {ex * lengths.x, ey * lengths.y, ez * lengths.z};
}

// ---------------------------------------------------------------------------
// Surface measure and uniform sampling
// ---------------------------------------------------------------------------

template <class T>
T window_area(const WindowLight<T>& w) {
  return length(cross(w.x, w.y));
}

template <class T>
T box_face_area(const BoxLamp<T>& b, int face) {
  const int axis = face / 2;
  const auto& u = axis == 0 ? b.y : (axis == 1 ? b.z : b.x);
  const auto& v = axis == 0 ? b.z : (axis == 1 ? b.x : b.y);
  return length(cross(u, v));
}

template <class T>
T light_area(const Light<T>& light) {
  if (const auto* w = std::get_if<WindowLight<T>>(&light)) return window_area(*w);
  if (const auto* b = std::get_if<BoxLamp<T>>(&light)) {
    T a(0.0);
    for (int f = 0; f < 6; ++f) a += box_face_area(*b, f);
    return a;
  }
  const auto& s = std::get<SurfelLamp<T>>(light);
  T a(0.0);
  for (const auto& ref : s.geometry->refs) a += surfel_at(s, ref).area;
  return a;
}

template <class T>
struct SurfaceSample {
  Vec3<T> q;
  Vec3<T> n;
  T inv_pdf;  // 1 / (area density at q)
};

// Face 2k is +axis_k, face 2k+1 is -axis_k (axes x, y, z).
template <class T>
SurfaceSample<T> sample_box_face(const BoxLamp<T>& b, int face, double u, double v) {
  const int axis = face / 2;
  const double sign = (face % 2 == 0) ? 1.0 : -1.0;
  const auto& a = axis == 0 ? b.x : (axis == 1 ? b.y : b.z);
  const auto& e1 = axis == 0 ? b.y : (axis == 1 ? b.z : b.x);
  const auto& e2 = axis == 0 ? b.z : (axis == 1 ? b.x : b.y);
  SurfaceSample<T> s;
  s.q = b.c + a * (0.5 * sign) + e1 * (0.5 * u) + e2 * (0.5 * v);
  s.n = normalize(a) * sign;
  s.inv_pdf = box_face_area(b, face);
  return s;
}

template <class T>
SurfaceSample<T> sample_window(const WindowLight<T>& w, double u, double v) {
  SurfaceSample<T> s;
  s.q = w.c + w.x * (0.5 * u) + w.y * (0.5 * v);
  s.n = normalize(cross(w.x, w.y));
  s.inv_pdf = window_area(w);
  return s;
}

// Surfel chosen from the alias table (fixed proposal); the importance weight
// uses the surfel area at the current center, so the estimate stays unbiased
// and smooth while the center moves.
template <class T>
SurfaceSample<T> sample_surfel_lamp(const SurfelLamp<T>& lamp, double u, double v, double selector) {
  const auto& g = *lamp.geometry;
  const std::size_t k = g.selection.sample(selector);
  const Surfel<T> s = surfel_at(lamp, g.refs[k]);
  using std::sqrt;
  const T side = sqrt(s.area);
  const auto [t1, t2] = tangent_frame(s.n);
  SurfaceSample<T> out;
  out.q = s.q + t1 * (side * (0.5 * u)) + t2 * (side * (0.5 * v));
  out.n = s.n;
  out.inv_pdf = s.area / g.selection.pmf(k);
  return out;
}

// Uniform sample over the light's surface measure; selector in [0, 1)
// picks a box face or a surfel in proportion to area.
template <class T>
SurfaceSample<T> sample_light_surface(const Light<T>& light, double u, double v, double selector) {
  if (!light_enabled(light)) {
    throw Error(ErrorKind::kDisabledLight, light_id(light), "cannot sample a disabled light");
  }
  if (const auto* w = std::get_if<WindowLight<T>>(&light)) return sample_window(*w, u, v);
  if (const auto* b = std::get_if<BoxLamp<T>>(&light)) {
    std::array<double, 6> areas{};
    double total = 0.0;
    for (int f = 0; f < 6; ++f) total += areas[f] = value(box_face_area(*b, f));
    double acc = 0.0;
    int face = 5;
    for (int f = 0; f < 6; ++f) {
      acc += areas[f];
      if (selector * total < acc) {
        face = f;
        break;
      }
    }
    auto s = sample_box_face(*b, face, u, v);
    s.inv_pdf = light_area(light);
    return s;
  }
  return sample_surfel_lamp(std::get<SurfelLamp<T>>(light), u, v, selector);
}

}  // namespace lumiedit
