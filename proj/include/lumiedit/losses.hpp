#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "lumiedit/lights.hpp"
#include "lumiedit/raster.hpp"
#include "lumiedit/rng.hpp"
#include "lumiedit/sg.hpp"

namespace lumiedit {

struct LossWeights {
  double sun = 1.0;
  double sky = 0.2;
  double ground = 0.2;
  double intensity = 0.001;  // w
  double direction = 1.0;    // d
  double bandwidth = 0.001;  // lambda
  double area = 0.8;         // geometry area term
  double render = 0.01;      // relative weight of rendering loss

  double lobe(int k) const { return k == 0 ? sun : (k == 1 ? sky : ground); }
};

// Mean absolute difference over pixels and channels.
inline double loss_l1(const Raster& a, const Raster& b) {
  require_same_shape(a, b, "loss_l1");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(static_cast<double>(a.data()[i]) - b.data()[i]);
  return s / static_cast<double>(a.size());
}

inline double loss_l2(const Raster& a, const Raster& b) {
  require_same_shape(a, b, "loss_l2");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a.data()[i]) - b.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.size());
}

// Root-mean-square nearest-neighbour distance from P to Q.
inline double directed_rms(const std::vector<Vec3d>& P, const std::vector<Vec3d>& Q) {
  double acc = 0.0;
  for (const auto& p : P) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : Q) best = std::min(best, length_squared(p - q));
    acc += best;
  }
  return std::sqrt(acc / static_cast<double>(P.size()));
}

// Mean of the two directed RMS nearest-neighbour distances.
inline double chamfer_rmse(const std::vector<Vec3d>& P, const std::vector<Vec3d>& Q) {
  if (P.empty() || Q.empty()) throw Error(ErrorKind::kInvalidArgument, "chamfer", "point sets must be non-empty");
  return 0.5 * (directed_rms(P, Q) + directed_rms(Q, P));
}

inline std::vector<Vec3d> sample_surface_points(const Light<double>& light, int count, std::uint64_t seed) {
  Light<double> on = light;
  set_light_enabled(on, true);
  const CounterRng rng(seed, 0, Stream::kGeometry);
  std::vector<Vec3d> pts;
  pts.reserve(count);
  for (int i = 0; i < count; ++i) {
    pts.push_back(sample_light_surface(on, rng.symmetric(i, 0), rng.symmetric(i, 1), rng.uniform(i, 2)).q);
  }
  return pts;
}

inline double loss_geo(const Light<double>& light, const Light<double>& truth, const LossWeights& weights = {},
                       int samples = 256, std::uint64_t seed = 0) {
  if (light.index() != truth.index()) {
    throw Error(ErrorKind::kInvalidArgument, "light", "geometry loss needs lights of the same type");
  }
  const double cham = chamfer_rmse(sample_surface_points(light, samples, seed),
                                   sample_surface_points(truth, samples, seed));
  return cham + weights.area * std::abs(light_area(light) - light_area(truth));
}

inline double loss_src(const WindowRadiance<double>& r, const WindowRadiance<double>& truth,
                       const LossWeights& weights = {}) {
  double total = 0.0;
  for (int k = 0; k < 3; ++k) {
    const auto& a = r.lobe(k);
    const auto& b = truth.lobe(k);
    double dw = 0.0;
    for (int c = 0; c < 3; ++c) {
      const double e = std::log(a.w[c] + 1.0) - std::log(b.w[c] + 1.0);
      dw += e * e;
    }
    const double dd = length_squared(a.d - b.d);
    const double dl = std::log(a.lambda + 1.0) - std::log(b.lambda + 1.0);
    total += weights.lobe(k) * (weights.intensity * dw + weights.direction * dd + weights.bandwidth * dl * dl);
  }
  return total;
}

inline constexpr double kSigDenominatorFloor = 1e-6;

// Scale-invariant gradient loss over spacings 1, 2, 4 and 8. Each finite
// difference is normalized by the local sum, so scaling an image leaves its
// gradient field unchanged.
inline double sig_loss(const Raster& S, const Raster& T) {
  require_same_shape(S, T, "sig_loss");
  const auto g = [](const Raster& R, int r0, int c0, int r1, int c1, int ch) {
    const double a = R.at(r1, c1, ch), b = R.at(r0, c0, ch);
    const double den = std::abs(a + b);
    return den < kSigDenominatorFloor ? std::optional<double>() : std::optional<double>((a - b) / den);
  };
  double total = 0.0;
  for (int h : {1, 2, 4, 8})
    for (int ch = 0; ch < S.channels(); ++ch)
      for (int r = 0; r < S.height(); ++r)
        for (int c = 0; c < S.width(); ++c) {
          if (r + h < S.height()) {
            const auto a = g(S, r, c, r + h, c, ch), b = g(T, r, c, r + h, c, ch);
            if (a && b) total += (*a - *b) * (*a - *b);
          }
          if (c + h < S.width()) {
            const auto a = g(S, r, c, r, c + h, ch), b = g(T, r, c, r, c + h, ch);
            if (a && b) total += (*a - *b) * (*a - *b);
          }
        }
  return total;
}

}  // namespace lumiedit
