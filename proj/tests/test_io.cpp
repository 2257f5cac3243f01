#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "halp/io.hpp"
#include "test_util.hpp"

using namespace halp;
using namespace halp::testing;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("halp_io_test_" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<char> slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::vector<char>(std::istreambuf_iterator<char>(is),
                           std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("embedding round-trip is byte-identical") {
  TempDir dir;
  Rng rng(123);
  std::vector<UnitVector> vectors;
  for (int i = 0; i < 10; ++i) vectors.push_back(random_unit(rng, 7));

  const std::string first = dir.file("a.bin");
  const std::string second = dir.file("b.bin");
  write_embeddings(first, vectors);
  const std::vector<UnitVector> loaded = read_embeddings(first);
  REQUIRE(loaded.size() == vectors.size());
  write_embeddings(second, loaded);

  CHECK(slurp(first) == slurp(second));
  for (std::size_t i = 0; i < loaded.size(); ++i) {
    CHECK(std::abs(loaded[i].coeffs().norm() - 1.0) <= 1e-9);
    CHECK((loaded[i].coeffs() - vectors[i].coeffs()).norm() <= 1e-6);
  }
}

TEST_CASE("loader normalizes stored rows") {
  // A row holding (3, 4) on disk comes back as (0.6, 0.8).
  TempDir dir;
  const std::string path = dir.file("raw.bin");
  std::ofstream os(path, std::ios::binary);
  const char magic[8] = {'H', 'A', 'L', 'P', 'E', 'M', 'B', '1'};
  os.write(magic, 8);
  const std::uint32_t version = 1, dim = 2;
  const std::uint64_t count = 1;
  os.write(reinterpret_cast<const char*>(&version), 4);
  os.write(reinterpret_cast<const char*>(&dim), 4);
  os.write(reinterpret_cast<const char*>(&count), 8);
  const float row[2] = {3.0f, 4.0f};
  os.write(reinterpret_cast<const char*>(row), 8);
  os.close();

  const auto loaded = read_embeddings(path);
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0][0] == doctest::Approx(0.6).epsilon(1e-7));
  CHECK(loaded[0][1] == doctest::Approx(0.8).epsilon(1e-7));
}

TEST_CASE("header corruption is rejected with typed errors") {
  TempDir dir;
  Rng rng(5);
  std::vector<UnitVector> vectors = {random_unit(rng, 3)};
  const std::string path = dir.file("x.bin");
  write_embeddings(path, vectors);

  auto bytes = slurp(path);

  // Corrupt magic.
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  const std::string magic_path = dir.file("magic.bin");
  std::ofstream(magic_path, std::ios::binary).write(bad_magic.data(), static_cast<std::streamsize>(bad_magic.size()));
  CHECK_THROWS_AS(read_embeddings(magic_path), BadMagicError);

  // Unsupported version.
  auto bad_version = bytes;
  bad_version[8] = 9;
  const std::string version_path = dir.file("version.bin");
  std::ofstream(version_path, std::ios::binary).write(bad_version.data(), static_cast<std::streamsize>(bad_version.size()));
  CHECK_THROWS_AS(read_embeddings(version_path), UnsupportedVersionError);

  // Truncated payload.
  auto truncated = bytes;
  truncated.resize(truncated.size() - 3);
  const std::string trunc_path = dir.file("trunc.bin");
  std::ofstream(trunc_path, std::ios::binary).write(truncated.data(), static_cast<std::streamsize>(truncated.size()));
  CHECK_THROWS_AS(read_embeddings(trunc_path), TruncatedPayloadError);

  // Trailing garbage violates the exact-length invariant.
  auto padded = bytes;
  padded.push_back(0);
  const std::string pad_path = dir.file("pad.bin");
  std::ofstream(pad_path, std::ios::binary).write(padded.data(), static_cast<std::streamsize>(padded.size()));
  CHECK_THROWS_AS(read_embeddings(pad_path), TruncatedPayloadError);

  // Zero row.
  auto zeroed = bytes;
  for (std::size_t i = bytes.size() - 12; i < bytes.size(); ++i) zeroed[i] = 0;
  const std::string zero_path = dir.file("zero.bin");
  std::ofstream(zero_path, std::ios::binary).write(zeroed.data(), static_cast<std::streamsize>(zeroed.size()));
  CHECK_THROWS_AS(read_embeddings(zero_path), ZeroRowError);
}

TEST_CASE("labels round-trip and strict parsing") {
  TempDir dir;
  const std::string path = dir.file("labels.txt");
  write_labels(path, {0, 3, -1, 7});
  CHECK(read_labels(path) == std::vector<int>{0, 3, -1, 7});

  std::ofstream(dir.file("bad.txt")) << "1\ntwo\n3\n";
  CHECK_THROWS_AS(read_labels(dir.file("bad.txt")), IoError);
}

TEST_CASE("run config parsing applies defaults and rejects unknown keys") {
  const RunConfig defaults = parse_run_config("{}");
  CHECK(defaults.train.queue_capacity == 16384);
  CHECK(defaults.train.top_k == 256);
  CHECK(defaults.train.num_prototypes == 20);
  CHECK(defaults.train.prototype_refresh_period == 5);
  CHECK(defaults.train.hallucination.num_positives == 100);
  CHECK(defaults.train.hallucination.lambda == 0.8);
  CHECK(defaults.train.kmeans_tolerance == 1e-3);
  CHECK(defaults.train.kmeans_step_size == 1.0);

  const RunConfig cfg = parse_run_config(R"({
    "train": {"steps": 50, "batch_size": 4, "tau": 0.2,
              "mu_schedule": {"warmup_steps": 10, "mu_after": 1.5},
              "encoder_hidden": [12, 8], "embedding_dim": 6, "seed": 9},
    "kmeans": {"tolerance": 0.01, "seed": 3},
    "hallucination": {"num_positives": 7, "filter": "variant2"},
    "data": {"num_classes": 4, "augment_scale_range": [0.5, 1.5]}
  })");
  CHECK(cfg.train.steps == 50);
  CHECK(cfg.train.tau == 0.2);
  CHECK(cfg.train.mu_schedule.warmup_steps == 10);
  CHECK(cfg.train.mu_schedule.mu_after == 1.5);
  CHECK(cfg.train.encoder_hidden == std::vector<int>{12, 8});
  CHECK(cfg.train.kmeans_tolerance == 0.01);
  CHECK(cfg.train.hallucination.num_positives == 7);
  CHECK(cfg.train.hallucination.filter == FilterMode::variant2);
  CHECK(cfg.data.num_classes == 4);
  CHECK(cfg.data.augment_scale_lo == 0.5);
  CHECK(cfg.data.augment_scale_hi == 1.5);

  CHECK_THROWS_AS(parse_run_config(R"({"trian": {}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"step": 1}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"hallucination": {"filter": "bogus"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"train": {"num_prototypes": 8}, "kmeans": {"k": 9}})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_run_config("not json"), ConfigError);

  // The defaults document round-trips through the parser.
  const RunConfig round = parse_run_config(run_config_to_json(defaults));
  CHECK(round.train.queue_capacity == defaults.train.queue_capacity);
  CHECK(round.train.hallucination.lambda == defaults.train.hallucination.lambda);
}

TEST_SUITE_END();
