#pragma once

#include <Eigen/Core>
#include <vector>

#include "halp/errors.hpp"

namespace halp {

// Norm below which a raw vector has no usable direction.
inline constexpr double kZeroNormEps = 1e-12;
// Geodesic angle below which the slerp denominator sin(angle) degrades;
// the antipodal guard mirrors it at pi - kParallelEps.
inline constexpr double kParallelEps = 1e-7;
// Allowed deviation from unit norm for stored points.
inline constexpr double kUnitNormTol = 1e-9;

// A point on the unit hypersphere S^(D-1), D >= 2. Components are doubles
// and the Euclidean norm is 1 within kUnitNormTol by construction.
class UnitVector {
 public:
  // Normalizes `raw` onto the sphere. Throws ZeroVectorError when the norm
  // is at or below kZeroNormEps.
  static UnitVector project(const Eigen::VectorXd& raw);

  // Wraps a vector that is already unit norm (verified, not renormalized).
  static UnitVector from_unit(Eigen::VectorXd v);

  Eigen::Index dim() const { return v_.size(); }
  const Eigen::VectorXd& coeffs() const { return v_; }
  double operator[](Eigen::Index i) const { return v_(i); }

  bool operator==(const UnitVector& other) const { return v_ == other.v_; }

 private:
  explicit UnitVector(Eigen::VectorXd v) : v_(std::move(v)) {}
  Eigen::VectorXd v_;
};

// Tangent vector at `base`; components are orthogonal to base within 1e-9.
struct TangentVector {
  UnitVector base;
  Eigen::VectorXd components;

  double norm() const { return components.norm(); }
};

// Inner product clamped to [-1, 1] so downstream arccos never sees drift.
double cos_sim(const UnitVector& a, const UnitVector& b);

// Arc length between a and b, in [0, pi].
double geodesic_angle(const UnitVector& a, const UnitVector& b);

// Constant-speed geodesic interpolation, t in [0, 1].
// Nearly parallel endpoints (angle <= kParallelEps) return `a` and set
// *degenerate_parallel when provided; antipodal endpoints throw
// AntipodalPointsError since the geodesic is not unique.
UnitVector slerp(const UnitVector& a, const UnitVector& b, double t,
                 bool* degenerate_parallel = nullptr);

// Riemannian log map; the returned tangent has norm geodesic_angle(base, x).
// Throws AntipodalPointsError when x is antipodal to base.
TangentVector log_map(const UnitVector& base, const UnitVector& x);

// Riemannian exp map; a zero tangent returns base.
UnitVector exp_map(const UnitVector& base, const TangentVector& v);

// Column-major packing helpers used by the losses, kNN and the bindings.
Eigen::MatrixXd pack_columns(const std::vector<UnitVector>& vs);
std::vector<UnitVector> unpack_columns(const Eigen::MatrixXd& m);

}  // namespace halp
