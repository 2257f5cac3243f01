#include "halp/halp_core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace halp {

namespace {
constexpr double kPi = 3.14159265358979323846;

void validate(const HallucinationConfig& config) {
  if (config.num_positives < 1) throw ConfigError("num_positives must be >= 1");
  if (config.lambda < 0.0 || config.lambda > 1.0) {
    throw ConfigError("lambda must be in [0, 1]");
  }
}

// Geodesic angle with the degenerate cases mapped to the errors the
// hallucination loop treats as skippable anchors.
double checked_omega(const UnitVector& z_k, const UnitVector& p_sel) {
  const double omega = geodesic_angle(z_k, p_sel);
  if (omega <= kParallelEps) {
    throw DegenerateParallelError("anchor and selected prototype are parallel");
  }
  if (omega >= kPi - kParallelEps) {
    throw AntipodalPointsError("anchor and selected prototype are antipodal");
  }
  return omega;
}
}  // namespace

FilterMode parse_filter_mode(const std::string& name) {
  if (name == "rank") return FilterMode::rank;
  if (name == "variant1") return FilterMode::variant1;
  if (name == "variant2") return FilterMode::variant2;
  if (name == "none") return FilterMode::none;
  throw ConfigError("unknown filter mode '" + name +
                    "' (expected rank|variant1|variant2|none)");
}

std::string filter_mode_name(FilterMode mode) {
  switch (mode) {
    case FilterMode::rank: return "rank";
    case FilterMode::variant1: return "variant1";
    case FilterMode::variant2: return "variant2";
    case FilterMode::none: return "none";
  }
  return "unknown";
}

double HallucinationReport::t_star_mean() const {
  if (t_star_values.empty()) return 0.0;
  const double sum =
      std::accumulate(t_star_values.begin(), t_star_values.end(), 0.0);
  return sum / static_cast<double>(t_star_values.size());
}

int closest_prototype(const UnitVector& z, const PrototypeSet& protos) {
  if (protos.prototypes.empty()) {
    throw EmptyPrototypeSetError("no prototypes to match against");
  }
  int best = 0;
  double best_sim = cos_sim(z, protos.prototypes.front());
  for (std::size_t i = 1; i < protos.prototypes.size(); ++i) {
    const double s = cos_sim(z, protos.prototypes[i]);
    if (s > best_sim) {
      best_sim = s;
      best = static_cast<int>(i);
    }
  }
  return best;
}

double kappa(const UnitVector& z_k, const UnitVector& p_star,
             const UnitVector& p_sel) {
  const double denom = z_k.coeffs().dot(p_star.coeffs() - p_sel.coeffs());
  if (std::abs(denom) <= kEquidistantEps) {
    throw EquidistantAnchorError(
        "anchor is equidistant from the two prototypes");
  }
  return (1.0 - p_sel.coeffs().dot(p_star.coeffs())) / denom;
}

double t_star(const UnitVector& z_k, const UnitVector& p_star,
              const UnitVector& p_sel) {
  const double omega = checked_omega(z_k, p_sel);
  const double k = kappa(z_k, p_star, p_sel);
  // atan2 keeps the boundary angle in (0, pi) when kappa + cos(omega) goes
  // negative; a single-branch arctan would flip sign there.
  const double boundary = std::atan2(std::sin(omega), k + std::cos(omega));
  return std::min(boundary / omega, 1.0);
}

double t_star_grid_oracle(const UnitVector& z_k, const PrototypeSet& protos,
                          const UnitVector& p_sel, OracleMode mode,
                          double resolution) {
  if (resolution <= 0.0 || resolution > 1e-4) {
    throw std::invalid_argument("oracle resolution must be in (0, 1e-4]");
  }
  const int p_star_idx = closest_prototype(z_k, protos);
  const UnitVector& p_star = protos.prototypes[static_cast<std::size_t>(p_star_idx)];
  const double omega = checked_omega(z_k, p_sel);
  const double sin_w = std::sin(omega);
  const double cos_w = std::cos(omega);

  // Along z(t) = slerp(z_k, p_sel, t), the similarity to any P reduces to
  //   sim(z(t), P) = [sin((1-t)w) (z_k.P) + sin(tw) (p_sel.P)] / sin w,
  // so each constraint sim(z,P*) >= sim(z,P) becomes
  //   sin((1-t)w) (z_k.(P*-P)) + sin(tw) (p_sel.(P*-P)) >= 0.
  std::vector<std::pair<double, double>> constraints;
  if (mode == OracleMode::two_proto) {
    constraints.emplace_back(z_k.coeffs().dot(p_star.coeffs()) - cos_w,
                             p_sel.coeffs().dot(p_star.coeffs()) - 1.0);
  } else {
    for (std::size_t j = 0; j < protos.prototypes.size(); ++j) {
      if (static_cast<int>(j) == p_star_idx) continue;
      const UnitVector& p = protos.prototypes[j];
      constraints.emplace_back(
          z_k.coeffs().dot(p_star.coeffs() - p.coeffs()),
          p_sel.coeffs().dot(p_star.coeffs() - p.coeffs()));
    }
  }

  const auto steps = static_cast<long>(std::lround(1.0 / resolution));
  const double delta = omega / static_cast<double>(steps);
  const double sin_d = std::sin(delta);
  const double cos_d = std::cos(delta);

  double best = -1.0;
  double s = 0.0, c = 1.0;  // sin(tw), cos(tw), advanced incrementally
  for (long i = 0; i <= steps; ++i) {
    if (i % 512 == 0) {  // kill recurrence drift
      const double tw = delta * static_cast<double>(i);
      s = std::sin(tw);
      c = std::cos(tw);
    }
    const double sin_rest = sin_w * c - cos_w * s;  // sin((1-t)w)
    bool feasible = true;
    for (const auto& [a, b] : constraints) {
      if (sin_rest * a + s * b < 0.0) {
        feasible = false;
        break;
      }
    }
    if (feasible) best = static_cast<double>(i) / static_cast<double>(steps);
    const double s_next = s * cos_d + c * sin_d;
    c = c * cos_d - s * sin_d;
    s = s_next;
  }
  if (best < 0.0) {
    throw NoFeasiblePointError("constraint violated even at t = 0");
  }
  return best;
}

double sample_t(double t_star_value, double lambda, Rng& rng) {
  if (t_star_value <= 0.0 || t_star_value > 1.0) {
    throw std::invalid_argument("t_star_value must be in (0, 1]");
  }
  if (lambda < 0.0 || lambda > 1.0) {
    throw std::invalid_argument("lambda must be in [0, 1]");
  }
  // Half-open draw keeps the boundary point itself out of the sample.
  return rng.uniform() * (lambda * t_star_value);
}

std::vector<UnitVector> rank_filter(const std::vector<UnitVector>& candidates,
                                    const PrototypeSet& protos, int p_star_index) {
  if (p_star_index < 0 ||
      static_cast<std::size_t>(p_star_index) >= protos.prototypes.size()) {
    throw std::invalid_argument("p_star_index out of range");
  }
  std::vector<UnitVector> retained;
  retained.reserve(candidates.size());
  for (const UnitVector& z : candidates) {
    if (closest_prototype(z, protos) == p_star_index) retained.push_back(z);
  }
  return retained;
}

std::vector<UnitVector> filter_variant1(const std::vector<UnitVector>& candidates,
                                        const UnitVector& z_q, const UnitVector& z_k) {
  const double threshold = cos_sim(z_q, z_k);
  std::vector<UnitVector> retained;
  retained.reserve(candidates.size());
  for (const UnitVector& z : candidates) {
    if (cos_sim(z_q, z) >= threshold) retained.push_back(z);
  }
  return retained;
}

std::vector<UnitVector> filter_variant2(const std::vector<UnitVector>& candidates,
                                        const UnitVector& z_k, const UnitVector& p_sel) {
  const double threshold = cos_sim(p_sel, z_k);
  std::vector<UnitVector> retained;
  retained.reserve(candidates.size());
  for (const UnitVector& z : candidates) {
    if (cos_sim(z_k, z) >= threshold) retained.push_back(z);
  }
  return retained;
}

HallucinationBatch hallucinate_batch(const std::vector<UnitVector>& keys,
                                     const PrototypeSet& protos,
                                     const HallucinationConfig& config,
                                     const std::vector<UnitVector>* queries) {
  validate(config);
  if (protos.prototypes.empty()) {
    throw EmptyPrototypeSetError("cannot hallucinate without prototypes");
  }
  const std::size_t n_protos = protos.prototypes.size();
  if (config.exclude_own_prototype && n_protos < 2) {
    throw SinglePrototypeError(
        "own-prototype exclusion leaves no candidate to step toward");
  }
  if (config.filter == FilterMode::variant1 && queries == nullptr) {
    throw ConfigError("variant1 filter requires query embeddings");
  }
  if (queries != nullptr && queries->size() != keys.size()) {
    throw ConfigError("queries must align with keys");
  }

  HallucinationBatch batch;
  batch.positives.resize(keys.size());
  const auto g = static_cast<std::size_t>(config.num_positives);

  for (std::size_t i = 0; i < keys.size(); ++i) {
    const UnitVector& z_k = keys[i];
    if (z_k.dim() != protos.dim()) {
      throw DimMismatchError("key dim does not match prototype dim");
    }
    Rng rng(Rng::derive(config.seed, i));
    const int p_star_idx = closest_prototype(z_k, protos);
    const UnitVector& p_star = protos.prototypes[static_cast<std::size_t>(p_star_idx)];

    auto draw_selection = [&]() {
      std::size_t sel;
      do {
        sel = rng.uniform_index(n_protos);
      } while (config.exclude_own_prototype &&
               sel == static_cast<std::size_t>(p_star_idx));
      return sel;
    };

    auto solve = [&](std::size_t sel, double* ts) {
      try {
        *ts = t_star(z_k, p_star, protos.prototypes[sel]);
      } catch (const EquidistantAnchorError&) {
        return false;
      } catch (const DegenerateParallelError&) {
        return false;
      } catch (const AntipodalPointsError&) {
        return false;
      }
      return true;
    };

    std::vector<UnitVector> candidates;
    std::vector<std::size_t> cand_sel;  // selected prototype per candidate
    candidates.reserve(g);
    cand_sel.reserve(g);

    if (!config.select_per_positive) {
      const std::size_t sel = draw_selection();
      double ts;
      if (!solve(sel, &ts)) {
        batch.report.skipped_degenerate++;
        continue;
      }
      batch.report.t_star_values.push_back(ts);
      for (std::size_t c = 0; c < g; ++c) {
        candidates.push_back(
            slerp(z_k, protos.prototypes[sel], sample_t(ts, config.lambda, rng)));
        cand_sel.push_back(sel);
      }
    } else {
      // Independent prototype draw per generated positive; degenerate draws
      // contribute nothing and are counted individually.
      for (std::size_t c = 0; c < g; ++c) {
        const std::size_t sel = draw_selection();
        double ts;
        if (!solve(sel, &ts)) {
          batch.report.skipped_degenerate++;
          continue;
        }
        batch.report.t_star_values.push_back(ts);
        candidates.push_back(
            slerp(z_k, protos.prototypes[sel], sample_t(ts, config.lambda, rng)));
        cand_sel.push_back(sel);
      }
    }

    batch.report.generated += candidates.size();
    std::vector<UnitVector> retained;
    switch (config.filter) {
      case FilterMode::rank:
        retained = rank_filter(candidates, protos, p_star_idx);
        break;
      case FilterMode::variant1:
        retained = filter_variant1(candidates, (*queries)[i], z_k);
        break;
      case FilterMode::variant2:
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          const UnitVector& p_sel = protos.prototypes[cand_sel[c]];
          if (cos_sim(z_k, candidates[c]) >= cos_sim(p_sel, z_k)) {
            retained.push_back(candidates[c]);
          }
        }
        break;
      case FilterMode::none:
        retained = candidates;
        break;
    }
    batch.report.retained += retained.size();
    batch.positives[i] = std::move(retained);
  }
  return batch;
}

}  // namespace halp
