#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "halp/rng.hpp"
#include "halp/sphere_kmeans.hpp"

namespace halp {

// Denominator magnitude below which the anchor is treated as equidistant
// from the two prototypes and the closed form degenerates.
inline constexpr double kEquidistantEps = 1e-10;

enum class FilterMode { rank, variant1, variant2, none };

FilterMode parse_filter_mode(const std::string& name);
std::string filter_mode_name(FilterMode mode);

struct HallucinationConfig {
  int num_positives = 100;           // G, candidates generated per anchor
  double lambda = 0.8;               // hardness cap, in [0, 1]
  FilterMode filter = FilterMode::rank;
  bool exclude_own_prototype = true;  // resample when P_sel lands on P*
  // One prototype draw per generated positive instead of one per anchor.
  bool select_per_positive = false;
  std::uint64_t seed = 0;
};

struct HallucinationReport {
  std::size_t generated = 0;
  std::size_t retained = 0;
  std::vector<double> t_star_values;  // one per solved anchor, each in [0, 1]
  std::size_t skipped_degenerate = 0;

  double t_star_mean() const;
};

struct HallucinationBatch {
  std::vector<std::vector<UnitVector>> positives;  // aligned with the keys
  HallucinationReport report;
};

// Index of the prototype with the largest cosine similarity to z
// (ties toward the lowest index).
int closest_prototype(const UnitVector& z, const PrototypeSet& protos);

// kappa = (1 - P_sel.P*) / (z_k.(P* - P_sel)); throws EquidistantAnchorError
// when the denominator magnitude is at or below kEquidistantEps.
double kappa(const UnitVector& z_k, const UnitVector& p_star, const UnitVector& p_sel);

// Hardest admissible interpolation parameter along the geodesic from z_k
// toward p_sel: the t at which the similarities to p_star and p_sel tie.
// Uses atan2(sin W, kappa + cos W) so the obtuse branch stays in (0, 1].
double t_star(const UnitVector& z_k, const UnitVector& p_star, const UnitVector& p_sel);

enum class OracleMode { two_proto, full_rank };

// Reference solver: exhaustive scan of t in [0, 1] at the given resolution,
// returning the largest grid point where the constraint holds. two_proto
// checks only the p_star/p_sel pair; full_rank checks every prototype.
double t_star_grid_oracle(const UnitVector& z_k, const PrototypeSet& protos,
                          const UnitVector& p_sel, OracleMode mode,
                          double resolution);

// Hardness draw: t_c uniform in [0, lambda * t_star_value).
double sample_t(double t_star_value, double lambda, Rng& rng);

// Keep candidates whose closest prototype is p_star_index.
std::vector<UnitVector> rank_filter(const std::vector<UnitVector>& candidates,
                                    const PrototypeSet& protos, int p_star_index);

// Keep candidates at least as close to the query as the real key is.
std::vector<UnitVector> filter_variant1(const std::vector<UnitVector>& candidates,
                                        const UnitVector& z_q, const UnitVector& z_k);

// Keep candidates at least as close to the key as the selected prototype is.
std::vector<UnitVector> filter_variant2(const std::vector<UnitVector>& candidates,
                                        const UnitVector& z_k, const UnitVector& p_sel);

// Generates and filters positives for a batch of anchors. Per key: select a
// prototype at random, solve t_star, draw num_positives hardness values and
// slerp along the geodesic, then apply the configured filter. Anchors with
// degenerate geometry (equidistant, parallel, antipodal) contribute zero
// positives and are counted in skipped_degenerate. Each key consumes an RNG
// stream derived from (config.seed, key index), so results are reproducible
// and independent of evaluation order. `queries` is required by the
// variant1 filter and must align with `keys`.
HallucinationBatch hallucinate_batch(const std::vector<UnitVector>& keys,
                                     const PrototypeSet& protos,
                                     const HallucinationConfig& config,
                                     const std::vector<UnitVector>* queries = nullptr);

}  // namespace halp
