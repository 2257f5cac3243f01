#include "halp/io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace halp {

namespace {

using nlohmann::json;

void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}

void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}

void put_f32(std::ostream& os, float v) {
  put_u32(os, std::bit_cast<std::uint32_t>(v));
}

bool get_bytes(std::istream& is, char* out, std::size_t n) {
  is.read(out, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(is.gcount()) == n;
}

std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  if (!get_bytes(is, reinterpret_cast<char*>(b), 4)) {
    throw TruncatedPayloadError("file ends inside the header");
  }
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!get_bytes(is, reinterpret_cast<char*>(b), 8)) {
    throw TruncatedPayloadError("file ends inside the header");
  }
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void write_embeddings(const std::string& path, const std::vector<UnitVector>& vectors) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path + "' for writing");

  const std::uint32_t dim =
      vectors.empty() ? 2u : static_cast<std::uint32_t>(vectors.front().dim());
  for (const UnitVector& v : vectors) {
    if (static_cast<std::uint32_t>(v.dim()) != dim) {
      throw DimMismatchError("vectors have inconsistent dims");
    }
  }

  os.write(kEmbeddingMagic, sizeof(kEmbeddingMagic));
  put_u32(os, kEmbeddingVersion);
  put_u32(os, dim);
  put_u64(os, static_cast<std::uint64_t>(vectors.size()));
  for (const UnitVector& v : vectors) {
    for (Eigen::Index i = 0; i < v.dim(); ++i) {
      put_f32(os, static_cast<float>(v[i]));
    }
  }
  if (!os) throw IoError("short write to '" + path + "'");
}

std::vector<UnitVector> read_embeddings(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");

  char magic[8];
  if (!get_bytes(is, magic, sizeof(magic))) {
    throw TruncatedPayloadError("file shorter than the magic");
  }
  if (std::memcmp(magic, kEmbeddingMagic, sizeof(magic)) != 0) {
    throw BadMagicError("'" + path + "' is not an embedding file");
  }
  const std::uint32_t version = get_u32(is);
  if (version != kEmbeddingVersion) {
    throw UnsupportedVersionError("embedding file version " +
                                  std::to_string(version) + " not supported");
  }
  const std::uint32_t dim = get_u32(is);
  const std::uint64_t count = get_u64(is);
  if (dim < 2) throw IoError("embedding dim must be >= 2, got " + std::to_string(dim));
  if (count > (std::numeric_limits<std::uint64_t>::max() / 4) / dim) {
    throw TruncatedPayloadError("implausible row count");
  }

  std::vector<UnitVector> out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<char> row(static_cast<std::size_t>(dim) * 4);
  for (std::uint64_t r = 0; r < count; ++r) {
    if (!get_bytes(is, row.data(), row.size())) {
      throw TruncatedPayloadError("payload ends inside row " + std::to_string(r));
    }
    Eigen::VectorXd v(dim);
    for (std::uint32_t i = 0; i < dim; ++i) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(
                    static_cast<unsigned char>(row[i * 4 + static_cast<std::uint32_t>(b)]))
                << (8 * b);
      }
      v(i) = static_cast<double>(std::bit_cast<float>(bits));
    }
    try {
      out.push_back(UnitVector::project(v));
    } catch (const ZeroVectorError&) {
      throw ZeroRowError("row " + std::to_string(r) + " has zero norm");
    }
  }
  char extra;
  if (is.read(&extra, 1).gcount() != 0) {
    throw TruncatedPayloadError("payload longer than count * dim entries");
  }
  return out;
}

void write_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  for (int l : labels) os << l << '\n';
  if (!os) throw IoError("short write to '" + path + "'");
}

std::vector<int> read_labels(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() && is.eof()) break;
    std::size_t used = 0;
    int value = 0;
    try {
      value = std::stoi(line, &used);
    } catch (const std::exception&) {
      throw IoError("bad label on line " + std::to_string(line_no));
    }
    while (used < line.size() &&
           (line[used] == ' ' || line[used] == '\t' || line[used] == '\r')) {
      ++used;
    }
    if (used != line.size()) {
      throw IoError("bad label on line " + std::to_string(line_no));
    }
    labels.push_back(value);
  }
  return labels;
}

// ---------------------------------------------------------------------------
// Run configuration document

namespace {

void reject_unknown(const json& obj, const char* scope,
                    std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) {
      if (key == k) { ok = true; break; }
    }
    if (!ok) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + scope);
    }
  }
}

template <typename T>
void fetch(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("bad value for '") + key + "'");
  }
}

void parse_hallucination(const json& obj, HallucinationConfig& out) {
  reject_unknown(obj, "hallucination",
                 {"num_positives", "lambda", "filter", "exclude_own_prototype",
                  "select_per_positive", "seed"});
  fetch(obj, "num_positives", out.num_positives);
  fetch(obj, "lambda", out.lambda);
  if (obj.contains("filter")) {
    out.filter = parse_filter_mode(obj.at("filter").get<std::string>());
  }
  fetch(obj, "exclude_own_prototype", out.exclude_own_prototype);
  fetch(obj, "select_per_positive", out.select_per_positive);
  fetch(obj, "seed", out.seed);
}

void parse_kmeans(const json& obj, TrainConfig& out) {
  reject_unknown(obj, "kmeans",
                 {"k", "tolerance", "step_size", "max_iterations", "seed", "init"});
  if (obj.contains("k")) {
    const int k = obj.at("k").get<int>();
    if (k != out.num_prototypes) {
      throw ConfigError("kmeans.k must match train.num_prototypes");
    }
  }
  fetch(obj, "tolerance", out.kmeans_tolerance);
  fetch(obj, "step_size", out.kmeans_step_size);
  fetch(obj, "max_iterations", out.kmeans_max_iterations);
  fetch(obj, "seed", out.kmeans_seed);
  if (obj.contains("init")) {
    const auto init = obj.at("init").get<std::string>();
    if (init != "plusplus") {
      throw ConfigError("run configs support only init = 'plusplus'");
    }
  }
}

void parse_train(const json& obj, TrainConfig& out) {
  reject_unknown(obj, "train",
                 {"steps", "batch_size", "learning_rate", "sgd_momentum",
                  "momentum_m", "tau", "mu_schedule", "queue_capacity", "top_k",
                  "num_prototypes", "prototype_refresh_period",
                  "kmeans_warm_start", "encoder_hidden", "embedding_dim", "seed",
                  "query_key_interp"});
  fetch(obj, "steps", out.steps);
  fetch(obj, "batch_size", out.batch_size);
  fetch(obj, "learning_rate", out.learning_rate);
  fetch(obj, "sgd_momentum", out.sgd_momentum);
  fetch(obj, "momentum_m", out.momentum_m);
  fetch(obj, "tau", out.tau);
  if (obj.contains("mu_schedule")) {
    const json& mu = obj.at("mu_schedule");
    reject_unknown(mu, "mu_schedule", {"warmup_steps", "mu_after"});
    fetch(mu, "warmup_steps", out.mu_schedule.warmup_steps);
    fetch(mu, "mu_after", out.mu_schedule.mu_after);
  }
  fetch(obj, "queue_capacity", out.queue_capacity);
  fetch(obj, "top_k", out.top_k);
  fetch(obj, "num_prototypes", out.num_prototypes);
  fetch(obj, "prototype_refresh_period", out.prototype_refresh_period);
  fetch(obj, "kmeans_warm_start", out.kmeans_warm_start);
  fetch(obj, "encoder_hidden", out.encoder_hidden);
  fetch(obj, "embedding_dim", out.embedding_dim);
  fetch(obj, "seed", out.seed);
  fetch(obj, "query_key_interp", out.query_key_interp);
}

void parse_data(const json& obj, SyntheticDataSpec& out) {
  reject_unknown(obj, "data",
                 {"num_classes", "input_dim", "samples_per_class",
                  "class_mean_scale", "noise_sigma", "augment_noise_sigma",
                  "augment_scale_range", "seed"});
  fetch(obj, "num_classes", out.num_classes);
  fetch(obj, "input_dim", out.input_dim);
  fetch(obj, "samples_per_class", out.samples_per_class);
  fetch(obj, "class_mean_scale", out.class_mean_scale);
  fetch(obj, "noise_sigma", out.noise_sigma);
  fetch(obj, "augment_noise_sigma", out.augment_noise_sigma);
  if (obj.contains("augment_scale_range")) {
    const json& range = obj.at("augment_scale_range");
    if (!range.is_array() || range.size() != 2) {
      throw ConfigError("augment_scale_range must be [lo, hi]");
    }
    out.augment_scale_lo = range.at(0).get<double>();
    out.augment_scale_hi = range.at(1).get<double>();
  }
  fetch(obj, "seed", out.seed);
}

}  // namespace

RunConfig parse_run_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config root must be an object");
  reject_unknown(doc, "config root", {"train", "kmeans", "hallucination", "data"});

  RunConfig out;
  if (doc.contains("train")) parse_train(doc.at("train"), out.train);
  if (doc.contains("kmeans")) parse_kmeans(doc.at("kmeans"), out.train);
  if (doc.contains("hallucination")) {
    parse_hallucination(doc.at("hallucination"), out.train.hallucination);
  }
  if (doc.contains("data")) parse_data(doc.at("data"), out.data);
  return out;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_run_config(ss.str());
}

std::string run_config_to_json(const RunConfig& config) {
  const TrainConfig& t = config.train;
  const SyntheticDataSpec& d = config.data;
  json doc{
      {"train",
       {{"steps", t.steps},
        {"batch_size", t.batch_size},
        {"learning_rate", t.learning_rate},
        {"sgd_momentum", t.sgd_momentum},
        {"momentum_m", t.momentum_m},
        {"tau", t.tau},
        {"mu_schedule",
         {{"warmup_steps", t.mu_schedule.warmup_steps},
          {"mu_after", t.mu_schedule.mu_after}}},
        {"queue_capacity", t.queue_capacity},
        {"top_k", t.top_k},
        {"num_prototypes", t.num_prototypes},
        {"prototype_refresh_period", t.prototype_refresh_period},
        {"kmeans_warm_start", t.kmeans_warm_start},
        {"encoder_hidden", t.encoder_hidden},
        {"embedding_dim", t.embedding_dim},
        {"seed", t.seed},
        {"query_key_interp", t.query_key_interp}}},
      {"kmeans",
       {{"tolerance", t.kmeans_tolerance},
        {"step_size", t.kmeans_step_size},
        {"max_iterations", t.kmeans_max_iterations},
        {"seed", t.kmeans_seed},
        {"init", "plusplus"}}},
      {"hallucination",
       {{"num_positives", t.hallucination.num_positives},
        {"lambda", t.hallucination.lambda},
        {"filter", filter_mode_name(t.hallucination.filter)},
        {"exclude_own_prototype", t.hallucination.exclude_own_prototype},
        {"select_per_positive", t.hallucination.select_per_positive},
        {"seed", t.hallucination.seed}}},
      {"data",
       {{"num_classes", d.num_classes},
        {"input_dim", d.input_dim},
        {"samples_per_class", d.samples_per_class},
        {"class_mean_scale", d.class_mean_scale},
        {"noise_sigma", d.noise_sigma},
        {"augment_noise_sigma", d.augment_noise_sigma},
        {"augment_scale_range", {d.augment_scale_lo, d.augment_scale_hi}},
        {"seed", d.seed}}}};
  return doc.dump(2);
}

}  // namespace halp
