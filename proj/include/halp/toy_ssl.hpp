#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "halp/halp_core.hpp"
#include "halp/losses.hpp"
#include "halp/memory_queue.hpp"

namespace halp {

// Gaussian class blobs standing in for augmented input sequences.
struct SyntheticDataSpec {
  int num_classes = 10;
  int input_dim = 32;
  int samples_per_class = 100;
  double class_mean_scale = 1.0;
  double noise_sigma = 0.1;
  double augment_noise_sigma = 0.05;
  double augment_scale_lo = 0.8;
  double augment_scale_hi = 1.2;
  std::uint64_t seed = 0;
};

struct Dataset {
  Eigen::MatrixXd inputs;  // input_dim x n, one sample per column
  std::vector<int> labels;
};

// Class means are drawn from a stream tied to spec.seed alone, per-sample
// noise from `rng`; two calls with different rngs therefore share class
// means and act as a train/test split of the same task.
Dataset sample_dataset(const SyntheticDataSpec& spec, Rng& rng);

// input' = s * (input + gaussian(augment_noise_sigma)), s ~ U[lo, hi].
Eigen::VectorXd augment(const Eigen::VectorXd& input,
                        const SyntheticDataSpec& spec, Rng& rng);

// Small tanh MLP whose final affine output is projected onto the unit
// sphere. Parameter mutations bump a version counter so a stale forward
// cache is detected in backward.
class ToyEncoder {
 public:
  // layer_dims = {input_dim, hidden..., embedding_dim}
  ToyEncoder(const std::vector<int>& layer_dims, std::uint64_t seed);

  struct Cache {
    std::vector<Eigen::MatrixXd> layer_inputs;  // input to each affine layer
    Eigen::MatrixXd pre_norm;                   // last affine output
    Eigen::VectorXd norms;
    Eigen::MatrixXd embeddings;
    std::uint64_t params_version = 0;
  };

  struct Gradients {
    std::vector<Eigen::MatrixXd> weights;
    std::vector<Eigen::VectorXd> biases;

    void scale(double s);
    void accumulate_scaled(const Gradients& other, double s);  // this += s*other
  };

  // Embeddings as unit columns; fills `cache` for an exact backward pass.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs, Cache* cache = nullptr) const;

  // Parameter gradients of sum_j grad_embeddings(:,j) . z_j, including the
  // sphere-projection Jacobian (I - z z^T) / |pre_norm|.
  Gradients backward(const Cache& cache, const Eigen::MatrixXd& grad_embeddings) const;

  Gradients zero_gradients() const;
  void apply_delta(const Gradients& delta, double scale);  // params += scale*delta

  const std::vector<int>& layer_dims() const { return layer_dims_; }
  std::size_t num_layers() const { return weights_.size(); }
  const std::vector<Eigen::MatrixXd>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& biases() const { return biases_; }
  std::uint64_t params_version() const { return version_; }

  // Direct parameter access for tests and the momentum update; bumps the
  // version counter.
  std::vector<Eigen::MatrixXd>& mutable_weights();
  std::vector<Eigen::VectorXd>& mutable_biases();

 private:
  std::vector<int> layer_dims_;
  std::vector<Eigen::MatrixXd> weights_;
  std::vector<Eigen::VectorXd> biases_;
  std::uint64_t version_ = 0;
};

// Free-function spellings used by the CLI and bindings.
Eigen::MatrixXd encode_forward(const ToyEncoder& encoder, const Eigen::MatrixXd& inputs,
                               ToyEncoder::Cache* cache = nullptr);
ToyEncoder::Gradients encode_backward(const ToyEncoder& encoder,
                                      const ToyEncoder::Cache& cache,
                                      const Eigen::MatrixXd& grad_embeddings);

// key <- m * key + (1 - m) * query, elementwise over all parameters.
void momentum_update(ToyEncoder& key, const ToyEncoder& query, double m);

struct TrainConfig {
  std::size_t steps = 1000;
  int batch_size = 64;
  double learning_rate = 0.01;
  double sgd_momentum = 0.9;
  double momentum_m = 0.999;  // key-encoder moving average
  double tau = 0.07;
  MuSchedule mu_schedule;
  int queue_capacity = 16384;
  int top_k = 256;  // most recent queue entries used for clustering
  int num_prototypes = 20;
  int prototype_refresh_period = 5;
  bool kmeans_warm_start = true;  // refit from the previous prototypes
  double kmeans_tolerance = 1e-3;
  double kmeans_step_size = 1.0;
  int kmeans_max_iterations = 100;
  std::uint64_t kmeans_seed = 0;
  HallucinationConfig hallucination;
  std::vector<int> encoder_hidden{64};
  int embedding_dim = 16;
  std::uint64_t seed = 0;
  // Experiment flag: interpolate toward the query instead of a prototype
  // (known to not help; kept for comparison runs).
  bool query_key_interp = false;
};

struct StepMetrics {
  std::size_t step = 0;
  double l_cl = 0.0;
  double l_halp = 0.0;
  double total = 0.0;
  double mu = 0.0;
  std::size_t generated = 0;
  std::size_t retained = 0;
  double t_star_mean = 0.0;
  double wall_ms = 0.0;
};

struct TrainResult {
  std::vector<StepMetrics> metrics;
  ToyEncoder query_encoder;
  ToyEncoder key_encoder;
};

// MoCo-style loop: augment twice, encode query/key, hallucinate once the
// queue is warm and mu is active, apply the combined loss to the query
// encoder, momentum-update the key encoder, push keys, refresh prototypes
// on the configured cadence. Fully deterministic under config.seed.
TrainResult train(const TrainConfig& config, const SyntheticDataSpec& spec);

// Nearest-neighbor accuracy by cosine similarity (majority vote for k > 1,
// ties toward the lowest label).
double knn_eval(const std::vector<UnitVector>& train_embeddings,
                const std::vector<int>& train_labels,
                const std::vector<UnitVector>& test_embeddings,
                const std::vector<int>& test_labels, int k = 1);

}  // namespace halp
