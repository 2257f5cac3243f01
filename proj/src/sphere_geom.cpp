#include "halp/sphere_geom.hpp"

#include <algorithm>
#include <cmath>

namespace halp {

namespace {
constexpr double kPi = 3.14159265358979323846;

void check_dims(const UnitVector& a, const UnitVector& b) {
  if (a.dim() != b.dim()) {
    throw DimMismatchError("unit vectors have dims " + std::to_string(a.dim()) +
                           " and " + std::to_string(b.dim()));
  }
}
}  // namespace

UnitVector UnitVector::project(const Eigen::VectorXd& raw) {
  if (raw.size() < 2) {
    throw DimMismatchError("sphere points need dim >= 2, got " +
                           std::to_string(raw.size()));
  }
  const double n = raw.norm();
  if (n <= kZeroNormEps) {
    throw ZeroVectorError("cannot project a vector with norm " +
                          std::to_string(n));
  }
  return UnitVector(raw / n);
}

UnitVector UnitVector::from_unit(Eigen::VectorXd v) {
  if (v.size() < 2) {
    throw DimMismatchError("sphere points need dim >= 2, got " +
                           std::to_string(v.size()));
  }
  if (std::abs(v.norm() - 1.0) > 1e-6) {
    throw ZeroVectorError("from_unit called with norm " +
                          std::to_string(v.norm()));
  }
  return UnitVector(std::move(v));
}

double cos_sim(const UnitVector& a, const UnitVector& b) {
  check_dims(a, b);
  return std::clamp(a.coeffs().dot(b.coeffs()), -1.0, 1.0);
}

double geodesic_angle(const UnitVector& a, const UnitVector& b) {
  return std::acos(cos_sim(a, b));
}

UnitVector slerp(const UnitVector& a, const UnitVector& b, double t,
                 bool* degenerate_parallel) {
  check_dims(a, b);
  if (t < 0.0 || t > 1.0) {
    throw std::invalid_argument("slerp parameter t must be in [0, 1]");
  }
  if (degenerate_parallel != nullptr) *degenerate_parallel = false;
  const double angle = geodesic_angle(a, b);
  if (angle <= kParallelEps) {
    if (degenerate_parallel != nullptr) *degenerate_parallel = true;
    return a;
  }
  if (angle >= kPi - kParallelEps) {
    throw AntipodalPointsError("no unique geodesic between antipodal points");
  }
  const double s = std::sin(angle);
  Eigen::VectorXd out = (std::sin((1.0 - t) * angle) / s) * a.coeffs() +
                        (std::sin(t * angle) / s) * b.coeffs();
  return UnitVector::from_unit(std::move(out));
}

TangentVector log_map(const UnitVector& base, const UnitVector& x) {
  check_dims(base, x);
  const double c = cos_sim(base, x);
  const double angle = std::acos(c);
  if (angle >= kPi - kParallelEps) {
    throw AntipodalPointsError("log map undefined for antipodal points");
  }
  Eigen::VectorXd residual = x.coeffs() - c * base.coeffs();
  const double scale = angle > kZeroNormEps ? angle / std::sin(angle) : 1.0;
  return TangentVector{base, scale * residual};
}

UnitVector exp_map(const UnitVector& base, const TangentVector& v) {
  if (v.base.dim() != base.dim() ||
      (v.base.coeffs() - base.coeffs()).norm() > kZeroNormEps) {
    throw std::invalid_argument("tangent vector is based at a different point");
  }
  if (v.components.size() != base.dim()) {
    throw DimMismatchError("tangent components do not match base dim");
  }
  if (std::abs(base.coeffs().dot(v.components)) > kUnitNormTol) {
    throw std::invalid_argument("tangent components not orthogonal to base");
  }
  const double theta = v.components.norm();
  if (theta == 0.0) return base;
  Eigen::VectorXd out = std::cos(theta) * base.coeffs() +
                        (std::sin(theta) / theta) * v.components;
  return UnitVector::from_unit(std::move(out));
}

Eigen::MatrixXd pack_columns(const std::vector<UnitVector>& vs) {
  if (vs.empty()) return Eigen::MatrixXd();
  Eigen::MatrixXd m(vs.front().dim(), static_cast<Eigen::Index>(vs.size()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    const UnitVector& v = vs[static_cast<std::size_t>(j)];
    if (v.dim() != m.rows()) {
      throw DimMismatchError("inconsistent dims while packing columns");
    }
    m.col(j) = v.coeffs();
  }
  return m;
}

std::vector<UnitVector> unpack_columns(const Eigen::MatrixXd& m) {
  std::vector<UnitVector> out;
  out.reserve(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    out.push_back(UnitVector::project(m.col(j)));
  }
  return out;
}

}  // namespace halp
