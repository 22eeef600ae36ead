#pragma once

// Euclidean and unit Poincare ball kernels. Curvature is fixed at 1.

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "schemaprobe/errors.hpp"

namespace schemaprobe::geometry {

using Vector = std::vector<double>;

/// Largest norm a BallPoint may carry after construction.
inline constexpr double kMaxBallNorm = 1.0 - 1e-9;
/// Upper clamp on the arctanh argument in poincare_distance.
inline constexpr double kMaxArtanhArg = 1.0 - 1e-12;

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline void require_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string(what) + ": non-finite coordinate");
}

inline void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ValidationError("dimension mismatch: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
}

/// A vector in the tangent space at the origin.
class TangentVector {
 public:
  explicit TangentVector(Vector coords) : coords_(std::move(coords)) { require_finite(coords_, "tangent vector"); }
  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size(); }

 private:
  Vector coords_;
};

/// A point of the open unit ball.
///
/// Norms at or above 1 are rejected; norms in (kMaxBallNorm, 1) are pulled back onto the
/// kMaxBallNorm sphere so later arithmetic stays away from the boundary.
class BallPoint {
 public:
  explicit BallPoint(Vector coords) : coords_(std::move(coords)) {
    require_finite(coords_, "ball point");
    double n = geometry::norm(coords_);
    if (!(n < 1.0)) throw DomainError("ball point norm " + std::to_string(n) + " is not below 1");
    clamp(n);
  }

  static BallPoint origin(std::size_t dim) { return BallPoint(Vector(dim, 0.0)); }

  /// Rescales any finite vector of norm >= kMaxBallNorm onto the kMaxBallNorm sphere.
  static BallPoint projected(Vector coords) {
    require_finite(coords, "ball point");
    BallPoint p;
    p.coords_ = std::move(coords);
    p.clamp(geometry::norm(p.coords_));
    return p;
  }

  std::span<const double> coords() const noexcept { return coords_; }
  std::size_t dim() const noexcept { return coords_.size(); }
  double norm() const { return geometry::norm(coords_); }

  BallPoint operator-() const {
    BallPoint p = *this;
    for (double& x : p.coords_) x = -x;
    return p;
  }

  bool operator==(const BallPoint&) const = default;

 private:
  BallPoint() = default;

  void clamp(double n) {
    if (n > kMaxBallNorm) {
      double scale = kMaxBallNorm / n;
      for (double& x : coords_) x *= scale;
    }
  }

  Vector coords_;
};

inline double euclidean_distance(std::span<const double> u, std::span<const double> v) {
  require_same_dim(u, v);
  double s = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    double d = u[k] - v[k];
    s += d * d;
  }
  return std::sqrt(s);
}

/// tanh(|h|) h / |h|, with the zero vector sent to the origin.
inline BallPoint exp_map_origin(const TangentVector& h) {
  auto c = h.coords();
  double n = norm(c);
  Vector out(c.size(), 0.0);
  if (n > 0.0) {
    double scale = std::tanh(n) / n;
    for (std::size_t k = 0; k < c.size(); ++k) out[k] = scale * c[k];
  }
  return BallPoint::projected(std::move(out));
}

inline Vector mobius_add_raw(std::span<const double> a, std::span<const double> b) {
  double ab = dot(a, b);
  double aa = dot(a, a);
  double bb = dot(b, b);
  double ca = 1.0 + 2.0 * ab + bb;
  double cb = 1.0 - aa;
  double den = 1.0 + 2.0 * ab + aa * bb;
  Vector out(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = (ca * a[k] + cb * b[k]) / den;
  return out;
}

inline BallPoint mobius_add(const BallPoint& a, const BallPoint& b) {
  require_same_dim(a.coords(), b.coords());
  return BallPoint::projected(mobius_add_raw(a.coords(), b.coords()));
}

/// 2 artanh(|(-a) + b|) with Mobius addition. Identical points give exactly 0.
inline double poincare_distance(const BallPoint& a, const BallPoint& b) {
  require_same_dim(a.coords(), b.coords());
  if (a == b) return 0.0;
  Vector neg_a(a.coords().begin(), a.coords().end());
  for (double& x : neg_a) x = -x;
  double n = norm(mobius_add_raw(neg_a, b.coords()));
  return 2.0 * std::atanh(std::min(n, kMaxArtanhArg));
}

}  // namespace schemaprobe::geometry
