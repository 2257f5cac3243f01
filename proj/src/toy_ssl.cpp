#include "halp/toy_ssl.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>

namespace halp {

namespace {

void validate(const SyntheticDataSpec& spec) {
  if (spec.num_classes < 1 || spec.input_dim < 1 || spec.samples_per_class < 1) {
    throw ConfigError("data spec counts must be positive");
  }
  if (spec.noise_sigma < 0.0 || spec.augment_noise_sigma < 0.0) {
    throw ConfigError("noise sigmas must be >= 0");
  }
  if (spec.augment_scale_lo <= 0.0 ||
      spec.augment_scale_lo > spec.augment_scale_hi) {
    throw ConfigError("augment scale range needs 0 < lo <= hi");
  }
}

void validate(const TrainConfig& config) {
  if (config.batch_size < 1 || config.embedding_dim < 2) {
    throw ConfigError("batch_size must be >= 1 and embedding_dim >= 2");
  }
  if (config.learning_rate <= 0.0) throw ConfigError("learning_rate must be > 0");
  if (config.sgd_momentum < 0.0 || config.sgd_momentum >= 1.0) {
    throw ConfigError("sgd_momentum must be in [0, 1)");
  }
  if (config.momentum_m < 0.0 || config.momentum_m >= 1.0) {
    throw ConfigError("momentum_m must be in [0, 1)");
  }
  if (config.tau <= 0.0) throw ConfigError("tau must be > 0");
  if (config.queue_capacity < config.top_k) {
    throw ConfigError("queue capacity must be >= top_k");
  }
  if (config.top_k < config.num_prototypes) {
    throw ConfigError("top_k must be >= num_prototypes");
  }
  if (config.num_prototypes < 1) throw ConfigError("num_prototypes must be >= 1");
  if (config.prototype_refresh_period < 1) {
    throw ConfigError("prototype_refresh_period must be >= 1");
  }
  if (config.batch_size > config.queue_capacity) {
    throw ConfigError("batch_size must not exceed queue capacity");
  }
}

}  // namespace

Dataset sample_dataset(const SyntheticDataSpec& spec, Rng& rng) {
  validate(spec);
  // Means come from a stream derived from spec.seed alone so that separate
  // noise rngs produce different samples of the same task.
  Rng means_rng(Rng::derive(spec.seed, 0x6d65616e73ull));
  Eigen::MatrixXd means(spec.input_dim, spec.num_classes);
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int d = 0; d < spec.input_dim; ++d) {
      means(d, c) = spec.class_mean_scale * means_rng.gaussian();
    }
  }

  const int n = spec.num_classes * spec.samples_per_class;
  Dataset ds;
  ds.inputs.resize(spec.input_dim, n);
  ds.labels.resize(static_cast<std::size_t>(n));
  int col = 0;
  for (int c = 0; c < spec.num_classes; ++c) {
    for (int s = 0; s < spec.samples_per_class; ++s, ++col) {
      for (int d = 0; d < spec.input_dim; ++d) {
        ds.inputs(d, col) = means(d, c) + spec.noise_sigma * rng.gaussian();
      }
      ds.labels[static_cast<std::size_t>(col)] = c;
    }
  }
  return ds;
}

Eigen::VectorXd augment(const Eigen::VectorXd& input,
                        const SyntheticDataSpec& spec, Rng& rng) {
  validate(spec);
  Eigen::VectorXd out(input.size());
  for (Eigen::Index d = 0; d < input.size(); ++d) {
    out(d) = input(d) + spec.augment_noise_sigma * rng.gaussian();
  }
  return rng.uniform(spec.augment_scale_lo, spec.augment_scale_hi) * out;
}

// ---------------------------------------------------------------------------
// ToyEncoder

ToyEncoder::ToyEncoder(const std::vector<int>& layer_dims, std::uint64_t seed)
    : layer_dims_(layer_dims) {
  if (layer_dims.size() < 2) {
    throw ConfigError("encoder needs at least input and output dims");
  }
  for (int d : layer_dims) {
    if (d < 1) throw ConfigError("encoder layer dims must be positive");
  }
  if (layer_dims.back() < 2) {
    throw ConfigError("embedding dim must be >= 2 for sphere projection");
  }
  Rng rng(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const int fan_in = layer_dims[l];
    const int fan_out = layer_dims[l + 1];
    Eigen::MatrixXd w(fan_out, fan_in);
    const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (int r = 0; r < fan_out; ++r) {
      for (int c = 0; c < fan_in; ++c) w(r, c) = scale * rng.gaussian();
    }
    weights_.push_back(std::move(w));
    biases_.push_back(Eigen::VectorXd::Zero(fan_out));
  }
}

void ToyEncoder::Gradients::scale(double s) {
  for (auto& w : weights) w *= s;
  for (auto& b : biases) b *= s;
}

void ToyEncoder::Gradients::accumulate_scaled(const Gradients& other, double s) {
  for (std::size_t l = 0; l < weights.size(); ++l) {
    weights[l] += s * other.weights[l];
    biases[l] += s * other.biases[l];
  }
}

Eigen::MatrixXd ToyEncoder::forward(const Eigen::MatrixXd& inputs, Cache* cache) const {
  if (inputs.rows() != layer_dims_.front()) {
    throw DimMismatchError("input dim does not match the encoder");
  }
  if (cache != nullptr) {
    cache->layer_inputs.clear();
    cache->params_version = version_;
  }

  Eigen::MatrixXd x = inputs;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    if (cache != nullptr) cache->layer_inputs.push_back(x);
    Eigen::MatrixXd s = (weights_[l] * x).colwise() + biases_[l];
    if (l + 1 < weights_.size()) {
      x = s.array().tanh();
    } else {
      x = std::move(s);
    }
  }

  Eigen::VectorXd norms = x.colwise().norm();
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (norms(j) <= kZeroNormEps) {
      throw ZeroVectorError("encoder produced a zero pre-norm output");
    }
  }
  Eigen::MatrixXd z = x.array().rowwise() / norms.transpose().array();
  if (cache != nullptr) {
    cache->pre_norm = std::move(x);
    cache->norms = std::move(norms);
    cache->embeddings = z;
  }
  return z;
}

ToyEncoder::Gradients ToyEncoder::backward(const Cache& cache,
                                           const Eigen::MatrixXd& grad_embeddings) const {
  if (cache.params_version != version_ ||
      cache.layer_inputs.size() != weights_.size()) {
    throw CacheMismatchError("forward cache does not match the encoder state");
  }
  if (grad_embeddings.rows() != cache.embeddings.rows() ||
      grad_embeddings.cols() != cache.embeddings.cols()) {
    throw CacheMismatchError("gradient shape does not match the cached forward");
  }

  // Through the projection: g_y = (g_z - z (z.g_z)) / |y|.
  Eigen::MatrixXd gs(grad_embeddings.rows(), grad_embeddings.cols());
  for (Eigen::Index j = 0; j < grad_embeddings.cols(); ++j) {
    const auto z = cache.embeddings.col(j);
    const auto g = grad_embeddings.col(j);
    gs.col(j) = (g - z * z.dot(g)) / cache.norms(j);
  }

  Gradients out = zero_gradients();
  for (std::size_t l = weights_.size(); l-- > 0;) {
    out.weights[l] = gs * cache.layer_inputs[l].transpose();
    out.biases[l] = gs.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd gx = weights_[l].transpose() * gs;
      // layer_inputs[l] holds tanh(s_{l-1}), whose derivative is 1 - a^2.
      gs = gx.array() * (1.0 - cache.layer_inputs[l].array().square());
    }
  }
  return out;
}

ToyEncoder::Gradients ToyEncoder::zero_gradients() const {
  Gradients g;
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    g.weights.push_back(Eigen::MatrixXd::Zero(weights_[l].rows(), weights_[l].cols()));
    g.biases.push_back(Eigen::VectorXd::Zero(biases_[l].size()));
  }
  return g;
}

void ToyEncoder::apply_delta(const Gradients& delta, double scale) {
  if (delta.weights.size() != weights_.size()) {
    throw ShapeMismatchError("gradient layer count does not match the encoder");
  }
  for (std::size_t l = 0; l < weights_.size(); ++l) {
    weights_[l] += scale * delta.weights[l];
    biases_[l] += scale * delta.biases[l];
  }
  ++version_;
}

std::vector<Eigen::MatrixXd>& ToyEncoder::mutable_weights() {
  ++version_;
  return weights_;
}

std::vector<Eigen::VectorXd>& ToyEncoder::mutable_biases() {
  ++version_;
  return biases_;
}

Eigen::MatrixXd encode_forward(const ToyEncoder& encoder, const Eigen::MatrixXd& inputs,
                               ToyEncoder::Cache* cache) {
  return encoder.forward(inputs, cache);
}

ToyEncoder::Gradients encode_backward(const ToyEncoder& encoder,
                                      const ToyEncoder::Cache& cache,
                                      const Eigen::MatrixXd& grad_embeddings) {
  return encoder.backward(cache, grad_embeddings);
}

void momentum_update(ToyEncoder& key, const ToyEncoder& query, double m) {
  if (key.layer_dims() != query.layer_dims()) {
    throw ShapeMismatchError("encoders have different layer dims");
  }
  if (m < 0.0 || m > 1.0) throw std::invalid_argument("m must be in [0, 1]");
  auto& kw = key.mutable_weights();
  auto& kb = key.mutable_biases();
  for (std::size_t l = 0; l < kw.size(); ++l) {
    kw[l] = m * kw[l] + (1.0 - m) * query.weights()[l];
    kb[l] = m * kb[l] + (1.0 - m) * query.biases()[l];
  }
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const TrainConfig& config, const SyntheticDataSpec& spec) {
  validate(config);

  std::vector<int> dims;
  dims.push_back(spec.input_dim);
  dims.insert(dims.end(), config.encoder_hidden.begin(), config.encoder_hidden.end());
  dims.push_back(config.embedding_dim);

  ToyEncoder query(dims, Rng::derive(config.seed, 1));
  ToyEncoder key = query;

  Rng data_rng(Rng::derive(config.seed, 2));
  const Dataset data = sample_dataset(spec, data_rng);
  const auto n = static_cast<std::size_t>(data.inputs.cols());

  Rng batch_rng(Rng::derive(config.seed, 3));
  Rng aug_q_rng(Rng::derive(config.seed, 4));
  Rng aug_k_rng(Rng::derive(config.seed, 5));

  MemoryQueue queue(config.queue_capacity, config.embedding_dim);
  std::optional<PrototypeSet> protos;
  int steps_since_fit = 0;
  std::uint64_t fit_count = 0;

  ToyEncoder::Gradients velocity = query.zero_gradients();
  const int batch = config.batch_size;
  const Eigen::Index d = config.embedding_dim;

  TrainResult result{{}, query, key};
  result.metrics.reserve(config.steps);

  for (std::size_t step = 0; step < config.steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    const double mu =
        step < config.mu_schedule.warmup_steps ? 0.0 : config.mu_schedule.mu_after;

    Eigen::MatrixXd xq(spec.input_dim, batch);
    Eigen::MatrixXd xk(spec.input_dim, batch);
    for (int i = 0; i < batch; ++i) {
      const auto idx = static_cast<Eigen::Index>(batch_rng.uniform_index(n));
      xq.col(i) = augment(data.inputs.col(idx), spec, aug_q_rng);
      xk.col(i) = augment(data.inputs.col(idx), spec, aug_k_rng);
    }

    ToyEncoder::Cache qcache;
    const Eigen::MatrixXd zq = query.forward(xq, &qcache);
    const Eigen::MatrixXd zk = key.forward(xk);
    std::vector<UnitVector> zk_units;
    std::vector<UnitVector> zq_units;
    zk_units.reserve(static_cast<std::size_t>(batch));
    zq_units.reserve(static_cast<std::size_t>(batch));
    for (int i = 0; i < batch; ++i) {
      zk_units.push_back(UnitVector::from_unit(zk.col(i)));
      zq_units.push_back(UnitVector::from_unit(zq.col(i)));
    }

    const Eigen::MatrixXd negatives = queue.negatives_matrix();

    // Hallucination waits for an active mu and a warm queue.
    const bool hallucinating = mu != 0.0 && queue.filled() >= config.top_k;
    HallucinationBatch hal;
    if (hallucinating) {
      if (!protos.has_value() || steps_since_fit >= config.prototype_refresh_period) {
        KMeansConfig kc;
        kc.k = config.num_prototypes;
        kc.tolerance = config.kmeans_tolerance;
        kc.step_size = config.kmeans_step_size;
        kc.max_iterations = config.kmeans_max_iterations;
        kc.seed = Rng::derive(config.kmeans_seed, fit_count);
        const std::vector<UnitVector> pool = queue.top_k_recent(config.top_k);
        if (config.kmeans_warm_start && protos.has_value() &&
            protos->size() == static_cast<std::size_t>(config.num_prototypes) &&
            protos->dim() == d) {
          kc.init = KMeansConfig::Init::provided;
          kc.initial = protos->prototypes;
        }
        protos = fit(pool, kc);
        ++fit_count;
        steps_since_fit = 0;
      }
      if (!config.query_key_interp) {
        HallucinationConfig hc = config.hallucination;
        hc.seed = Rng::derive(config.hallucination.seed, step);
        hal = hallucinate_batch(zk_units, *protos, hc, &zq_units);
      } else {
        // Experiment path: step from the key toward the query instead of a
        // prototype; no boundary solve exists, so t is capped by lambda
        // directly and the configured filter still applies.
        hal.positives.resize(zk_units.size());
        for (std::size_t i = 0; i < zk_units.size(); ++i) {
          Rng rng(Rng::derive(Rng::derive(config.hallucination.seed, step), i));
          const double angle = geodesic_angle(zk_units[i], zq_units[i]);
          if (angle <= kParallelEps || angle >= 3.14159265358979323846 - kParallelEps) {
            hal.report.skipped_degenerate++;
            continue;
          }
          std::vector<UnitVector> cands;
          const auto g = static_cast<std::size_t>(config.hallucination.num_positives);
          for (std::size_t c = 0; c < g; ++c) {
            cands.push_back(slerp(zk_units[i], zq_units[i],
                                  rng.uniform() * config.hallucination.lambda));
          }
          hal.report.generated += cands.size();
          const int p_star_idx = closest_prototype(zk_units[i], *protos);
          std::vector<UnitVector> kept;
          switch (config.hallucination.filter) {
            case FilterMode::rank:
              kept = rank_filter(cands, *protos, p_star_idx);
              break;
            case FilterMode::variant1:
              kept = filter_variant1(cands, zq_units[i], zk_units[i]);
              break;
            case FilterMode::variant2:
              kept = filter_variant2(cands, zk_units[i], zq_units[i]);
              break;
            case FilterMode::none:
              kept = cands;
              break;
          }
          hal.report.retained += kept.size();
          hal.positives[i] = std::move(kept);
        }
      }
    }
    if (protos.has_value()) ++steps_since_fit;

    double l_cl_sum = 0.0;
    double l_halp_sum = 0.0;
    Eigen::MatrixXd grad(d, batch);
    for (int i = 0; i < batch; ++i) {
      const LossGrad cl = info_nce(zq.col(i), zk_units[static_cast<std::size_t>(i)],
                                   negatives, config.tau);
      l_cl_sum += cl.loss;
      grad.col(i) = cl.grad_z_q;
      if (hallucinating) {
        const LossGrad hl = halp_loss(
            zq.col(i), hal.positives[static_cast<std::size_t>(i)], config.tau);
        l_halp_sum += hl.loss;
        grad.col(i) += mu * hl.grad_z_q;
      }
    }
    const double scale = 1.0 / static_cast<double>(batch);
    const double l_cl = l_cl_sum * scale;
    const double l_halp = l_halp_sum * scale;
    grad *= scale;

    const ToyEncoder::Gradients grads = query.backward(qcache, grad);
    velocity.scale(config.sgd_momentum);
    velocity.accumulate_scaled(grads, 1.0);
    query.apply_delta(velocity, -config.learning_rate);

    momentum_update(key, query, config.momentum_m);
    queue.push(zk_units);

    const LossBreakdown bd = total_loss(l_cl, l_halp, step, config.mu_schedule,
                                        config.tau, hal.report.retained);
    const auto t1 = std::chrono::steady_clock::now();
    StepMetrics m;
    m.step = step;
    m.l_cl = bd.l_cl;
    m.l_halp = bd.l_halp;
    m.total = bd.total;
    m.mu = bd.mu;
    m.generated = hal.report.generated;
    m.retained = hal.report.retained;
    m.t_star_mean = hal.report.t_star_mean();
    m.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
    result.metrics.push_back(m);
  }

  result.query_encoder = query;
  result.key_encoder = key;
  return result;
}

double knn_eval(const std::vector<UnitVector>& train_embeddings,
                const std::vector<int>& train_labels,
                const std::vector<UnitVector>& test_embeddings,
                const std::vector<int>& test_labels, int k) {
  if (train_embeddings.empty()) throw EmptyTrainSetError("no training embeddings");
  if (train_embeddings.size() != train_labels.size() ||
      test_embeddings.size() != test_labels.size()) {
    throw ConfigError("labels must align with embeddings");
  }
  if (test_embeddings.empty()) throw ConfigError("no test embeddings");
  if (k < 1) throw ConfigError("k must be >= 1");
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k),
                                        train_embeddings.size());

  const Eigen::MatrixXd train = pack_columns(train_embeddings);
  std::size_t correct = 0;
  std::vector<std::size_t> order(train_embeddings.size());
  for (std::size_t t = 0; t < test_embeddings.size(); ++t) {
    const Eigen::VectorXd sims = train.transpose() * test_embeddings[t].coeffs();
    int predicted;
    if (kk == 1) {
      Eigen::Index best = 0;
      sims.maxCoeff(&best);
      predicted = train_labels[static_cast<std::size_t>(best)];
    } else {
      std::iota(order.begin(), order.end(), 0);
      std::partial_sort(order.begin(), order.begin() + static_cast<long>(kk),
                        order.end(), [&](std::size_t a, std::size_t b) {
                          if (sims(static_cast<Eigen::Index>(a)) !=
                              sims(static_cast<Eigen::Index>(b))) {
                            return sims(static_cast<Eigen::Index>(a)) >
                                   sims(static_cast<Eigen::Index>(b));
                          }
                          return a < b;
                        });
      std::map<int, std::size_t> votes;
      for (std::size_t j = 0; j < kk; ++j) votes[train_labels[order[j]]]++;
      predicted = votes.begin()->first;
      std::size_t best_count = votes.begin()->second;
      for (const auto& [label, count] : votes) {
        if (count > best_count) {
          best_count = count;
          predicted = label;
        }
      }
    }
    if (predicted == test_labels[t]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_embeddings.size());
}

}  // namespace halp
