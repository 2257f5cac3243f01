#pragma once

#include <string>
#include <vector>

#include "halp/sphere_geom.hpp"
#include "halp/toy_ssl.hpp"

namespace halp {

// Embedding file layout (little-endian throughout):
//   8 bytes  magic "HALPEMB1"
//   u32      version (= 1)
//   u32      dim
//   u64      count
//   payload  count * dim IEEE-754 binary32 values, row-major
// Storage is single precision; all in-memory math stays double. The loader
// re-normalizes every row and rejects zero rows.
inline constexpr char kEmbeddingMagic[8] = {'H', 'A', 'L', 'P',
                                            'E', 'M', 'B', '1'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;

void write_embeddings(const std::string& path, const std::vector<UnitVector>& vectors);
std::vector<UnitVector> read_embeddings(const std::string& path);

// Label files carry one integer per line; line i labels row i.
void write_labels(const std::string& path, const std::vector<int>& labels);
std::vector<int> read_labels(const std::string& path);

// Parsed run configuration document (JSON). Unknown keys are rejected at
// every level; every field is optional and falls back to the defaults of
// the corresponding config struct.
struct RunConfig {
  TrainConfig train;
  SyntheticDataSpec data;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

// The full document with defaults filled in, for --help and round-trips.
std::string run_config_to_json(const RunConfig& config);

}  // namespace halp
