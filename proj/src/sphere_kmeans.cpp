#include "halp/sphere_kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "halp/rng.hpp"

namespace halp {

namespace {

// Karcher-mean inner loop cap per Lloyd update; bounds per-iteration cost
// when fit runs inside a training step.
constexpr int kMeanUpdateSteps = 32;

double squared_geodesic(const UnitVector& a, const UnitVector& b) {
  const double angle = geodesic_angle(a, b);
  return angle * angle;
}

double cluster_cost(const std::vector<UnitVector>& points,
                    const std::vector<int>& members, const UnitVector& centroid) {
  double cost = 0.0;
  for (int idx : members) {
    cost += squared_geodesic(points[static_cast<std::size_t>(idx)], centroid);
  }
  return cost;
}

void check_point_dims(const std::vector<UnitVector>& points) {
  for (const UnitVector& p : points) {
    if (p.dim() != points.front().dim()) {
      throw DimMismatchError("points have inconsistent dims");
    }
  }
}

void validate(const KMeansConfig& config) {
  if (config.k < 1) throw ConfigError("k must be >= 1");
  if (config.tolerance <= 0.0) throw ConfigError("tolerance must be > 0");
  if (config.step_size <= 0.0 || config.step_size > 1.0) {
    throw ConfigError("step_size must be in (0, 1]");
  }
  if (config.max_iterations < 1) throw ConfigError("max_iterations must be >= 1");
}

}  // namespace

std::vector<UnitVector> init_plusplus(const std::vector<UnitVector>& points,
                                      int k, std::uint64_t seed) {
  const std::size_t n = points.size();
  if (k < 1) throw ConfigError("k must be >= 1");
  if (n < static_cast<std::size_t>(k)) {
    throw TooFewPointsError("need at least k points, got " + std::to_string(n));
  }
  check_point_dims(points);

  Rng rng(seed);
  std::vector<bool> chosen(n, false);
  std::vector<UnitVector> seeds;
  seeds.reserve(static_cast<std::size_t>(k));

  const std::size_t first = rng.uniform_index(n);
  chosen[first] = true;
  seeds.push_back(points[first]);

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) {
    d2[i] = squared_geodesic(points[i], seeds.front());
  }

  while (seeds.size() < static_cast<std::size_t>(k)) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!chosen[i]) total += d2[i];
    }
    std::size_t pick = n;
    if (total <= 1e-30) {
      // All remaining candidates coincide with a seed; fall back to a
      // uniform draw among unchosen indices so k distinct points come back.
      std::size_t remaining = 0;
      for (std::size_t i = 0; i < n; ++i) remaining += chosen[i] ? 0 : 1;
      std::size_t target = rng.uniform_index(remaining);
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i]) continue;
        if (target == 0) { pick = i; break; }
        --target;
      }
    } else {
      const double r = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (chosen[i] || d2[i] == 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > r) break;
      }
    }
    chosen[pick] = true;
    seeds.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_geodesic(points[i], seeds.back()));
    }
  }
  return seeds;
}

std::vector<int> assign(const std::vector<UnitVector>& points,
                        const std::vector<UnitVector>& centroids) {
  if (centroids.empty()) throw EmptyClusterError("no centroids to assign to");
  std::vector<int> labels(points.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    double best = cos_sim(points[i], centroids.front());
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double s = cos_sim(points[i], centroids[c]);
      if (s > best) {
        best = s;
        labels[i] = static_cast<int>(c);
      }
    }
  }
  return labels;
}

UnitVector frechet_mean(const std::vector<UnitVector>& points, double tolerance,
                        double step_size, int max_iterations, bool* converged,
                        const UnitVector* init) {
  if (points.empty()) throw EmptyClusterError("frechet_mean of an empty set");
  if (tolerance <= 0.0 || step_size <= 0.0 || step_size > 1.0) {
    throw std::invalid_argument("tolerance must be > 0 and step_size in (0, 1]");
  }
  check_point_dims(points);

  UnitVector mean = init != nullptr ? *init : points.front();
  if (converged != nullptr) *converged = false;

  for (int it = 0; it < max_iterations; ++it) {
    Eigen::VectorXd tangent = Eigen::VectorXd::Zero(mean.dim());
    for (const UnitVector& p : points) {
      try {
        tangent += log_map(mean, p).components;
      } catch (const AntipodalPointsError&) {
        throw AntipodalConfigurationError(
            "a point is antipodal to the running mean estimate");
      }
    }
    tangent /= static_cast<double>(points.size());
    if (tangent.norm() < tolerance) {
      if (converged != nullptr) *converged = true;
      return mean;
    }
    mean = exp_map(mean, TangentVector{mean, step_size * tangent});
  }
  return mean;
}

PrototypeSet fit(const std::vector<UnitVector>& points, const KMeansConfig& config) {
  validate(config);
  const std::size_t n = points.size();
  if (n < static_cast<std::size_t>(config.k)) {
    throw TooFewPointsError("need at least k points, got " + std::to_string(n));
  }
  check_point_dims(points);

  std::vector<UnitVector> centroids;
  if (config.init == KMeansConfig::Init::provided) {
    if (config.initial.size() != static_cast<std::size_t>(config.k)) {
      throw ConfigError("provided initial centroids must have size k");
    }
    for (const UnitVector& c : config.initial) {
      if (c.dim() != points.front().dim()) {
        throw DimMismatchError("initial centroid dim does not match points");
      }
    }
    centroids = config.initial;
  } else {
    centroids = init_plusplus(points, config.k, config.seed);
  }

  PrototypeSet result;
  std::vector<int> labels;
  double prev_inertia = std::numeric_limits<double>::infinity();
  int iterations = 0;

  auto measure = [&]() {
    labels = assign(points, centroids);

    // Re-seed empty clusters with the point farthest from its assigned
    // centroid; the moved point lands at distance zero, so the repair can
    // only lower the inertia.
    std::vector<int> counts(centroids.size(), 0);
    for (int l : labels) counts[static_cast<std::size_t>(l)]++;
    for (std::size_t c = 0; c < centroids.size(); ++c) {
      if (counts[c] != 0) continue;
      double worst = -1.0;
      std::size_t worst_idx = n;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t l = static_cast<std::size_t>(labels[i]);
        if (counts[l] <= 1) continue;  // keep singletons intact
        const double d = squared_geodesic(points[i], centroids[l]);
        if (d > worst) {
          worst = d;
          worst_idx = i;
        }
      }
      if (worst_idx == n) continue;  // nothing movable; cluster stays empty
      counts[static_cast<std::size_t>(labels[worst_idx])]--;
      labels[worst_idx] = static_cast<int>(c);
      counts[c] = 1;
      centroids[c] = points[worst_idx];
    }

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      inertia += squared_geodesic(points[i], centroids[static_cast<std::size_t>(labels[i])]);
    }
    result.inertia_history.push_back(inertia);
    return inertia;
  };

  double inertia = 0.0;
  while (iterations < config.max_iterations) {
    ++iterations;
    inertia = measure();
    if (prev_inertia - inertia < config.tolerance) {
      result.converged = true;
      break;
    }
    prev_inertia = inertia;

    for (std::size_t c = 0; c < centroids.size(); ++c) {
      std::vector<int> members;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == static_cast<int>(c)) members.push_back(static_cast<int>(i));
      }
      if (members.empty()) continue;
      std::vector<UnitVector> cluster;
      cluster.reserve(members.size());
      for (int idx : members) cluster.push_back(points[static_cast<std::size_t>(idx)]);
      UnitVector updated = frechet_mean(cluster, config.tolerance, config.step_size,
                                        kMeanUpdateSteps, nullptr, &centroids[c]);
      // Accept the update only when it does not raise the cluster cost, so
      // the recorded inertia stays non-increasing.
      if (cluster_cost(points, members, updated) <=
          cluster_cost(points, members, centroids[c])) {
        centroids[c] = updated;
      }
    }
  }

  if (!result.converged) {
    // Loop exhausted after an update; re-measure so the reported inertia
    // matches the returned centroids.
    inertia = measure();
  }

  result.prototypes = std::move(centroids);
  result.inertia = inertia;
  result.iterations_run = iterations;
  return result;
}

}  // namespace halp
