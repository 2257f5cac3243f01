#pragma once

#include <cstdint>
#include <vector>

#include "halp/sphere_geom.hpp"

namespace halp {

struct KMeansConfig {
  int k = 1;
  double tolerance = 1e-3;
  double step_size = 1.0;
  int max_iterations = 100;
  std::uint64_t seed = 0;

  enum class Init { plusplus, provided };
  Init init = Init::plusplus;
  // Starting centroids when init == provided (size must equal k).
  std::vector<UnitVector> initial;
};

// N cluster centroids on the sphere plus fit diagnostics.
struct PrototypeSet {
  std::vector<UnitVector> prototypes;
  double inertia = 0.0;  // sum of squared geodesic distances to assigned centroid
  int iterations_run = 0;
  bool converged = false;
  // Inertia recorded at each outer iteration; non-increasing by construction.
  std::vector<double> inertia_history;

  std::size_t size() const { return prototypes.size(); }
  Eigen::Index dim() const { return prototypes.empty() ? 0 : prototypes.front().dim(); }
};

// Distance-weighted seeding: first centroid uniform, the rest with
// probability proportional to squared geodesic distance to the nearest
// already-chosen seed. Returns k distinct input points; deterministic by seed.
std::vector<UnitVector> init_plusplus(const std::vector<UnitVector>& points,
                                      int k, std::uint64_t seed);

// Index of the nearest centroid per point (ties toward the lowest index).
std::vector<int> assign(const std::vector<UnitVector>& points,
                        const std::vector<UnitVector>& centroids);

// Karcher mean iteration: m <- exp_m(step * mean of log_m(x_i)), run until
// the update tangent norm drops below tolerance or max_iterations is hit
// (*converged is cleared in that case). Seeded at `init` when given, else at
// the first point.
UnitVector frechet_mean(const std::vector<UnitVector>& points, double tolerance,
                        double step_size, int max_iterations,
                        bool* converged = nullptr,
                        const UnitVector* init = nullptr);

// Lloyd iteration on the sphere: assign / per-cluster Karcher mean until the
// inertia decrease falls below tolerance or max_iterations. Empty clusters
// are re-seeded with the point farthest from its assigned centroid.
// Deterministic given (points, config).
PrototypeSet fit(const std::vector<UnitVector>& points, const KMeansConfig& config);

}  // namespace halp
