#pragma once

// Neural surrogate of the parameter -> outcome map.
//
// Inputs are the natural logs of (c, h, a, theta_h, theta_a); outputs are the
// five outcome measures. Both sides are standardized with statistics from the
// training rows. The network is a fully connected MLP with tanh hidden layers
// and a linear output layer, trained on mean squared error with Adam.

#include <adaptnet/graph.hpp>
#include <adaptnet/random.hpp>
#include <adaptnet/sweep.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaptnet {

inline constexpr std::size_t kFeatureCount = 5;
using Vec5 = std::array<double, kFeatureCount>;

/// Per-dimension affine standardization. Constant columns get std 1.
struct Standardizer {
  Vec5 mean{};
  Vec5 std{1, 1, 1, 1, 1};

  static Standardizer fit(std::span<const Vec5> rows) {
    Standardizer s;
    if (rows.empty()) return s;
    const double count = static_cast<double>(rows.size());
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      double sum = 0.0;
      for (const auto& r : rows) sum += r[k];
      const double mu = sum / count;
      double var = 0.0;
      for (const auto& r : rows) var += (r[k] - mu) * (r[k] - mu);
      const double sd = std::sqrt(var / count);
      s.mean[k] = mu;
      s.std[k] = sd > 1e-12 * std::max(1.0, std::abs(mu)) ? sd : 1.0;
    }
    return s;
  }

  Vec5 apply(const Vec5& v) const {
    Vec5 out;
    for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = (v[k] - mean[k]) / std[k];
    return out;
  }

  Vec5 invert(const Vec5& z) const {
    Vec5 out;
    for (std::size_t k = 0; k < kFeatureCount; ++k) out[k] = z[k] * std[k] + mean[k];
    return out;
  }

  bool operator==(const Standardizer&) const = default;
};

struct Dataset {
  std::vector<Vec5> inputs;
  std::vector<Vec5> targets;
  Standardizer input_stats;
  Standardizer target_stats;

  std::size_t size() const noexcept { return inputs.size(); }
};

inline Vec5 log_params(const SimParams& p) {
  return {std::log(p.c), std::log(p.h), std::log(p.a), std::log(p.theta_h), std::log(p.theta_a)};
}

/// Rows of the aggregated table with the given network size, as (log-params, mean outcomes).
inline Dataset build_dataset(std::span<const AggregateRow> table, std::size_t n_filter) {
  Dataset d;
  for (const auto& row : table) {
    if (row.params.n != n_filter) continue;
    d.inputs.push_back(log_params(row.params));
    d.targets.push_back(row.mean);
  }
  if (d.inputs.empty())
    throw std::invalid_argument("build_dataset: no rows with n = " + std::to_string(n_filter));
  d.input_stats = Standardizer::fit(d.inputs);
  d.target_stats = Standardizer::fit(d.targets);
  return d;
}

enum class Activation { tanh, identity };

inline std::string activation_name(Activation a) { return a == Activation::tanh ? "tanh" : "identity"; }

inline Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

/// Fully connected network with all parameters in one flat vector.
/// Layer l stores its weight matrix (out x in, row-major) followed by its bias.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> layer_sizes, Activation hidden) : sizes_(std::move(layer_sizes)), hidden_(hidden) {
    if (sizes_.size() < 2) throw std::invalid_argument("Mlp: need at least an input and an output layer");
    for (const auto s : sizes_)
      if (s == 0) throw std::invalid_argument("Mlp: layer sizes must be positive");
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      offsets_.push_back(offset);
      offset += sizes_[l + 1] * sizes_[l] + sizes_[l + 1];
    }
    params_.assign(offset, 0.0);
  }

  const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
  std::size_t layer_count() const noexcept { return sizes_.size() - 1; }
  Activation hidden_activation() const noexcept { return hidden_; }
  std::size_t input_size() const noexcept { return sizes_.front(); }
  std::size_t output_size() const noexcept { return sizes_.back(); }

  std::span<double> parameters() noexcept { return params_; }
  std::span<const double> parameters() const noexcept { return params_; }

  std::span<double> weight(std::size_t l) noexcept {
    return {params_.data() + offsets_[l], sizes_[l + 1] * sizes_[l]};
  }
  std::span<const double> weight(std::size_t l) const noexcept {
    return {params_.data() + offsets_[l], sizes_[l + 1] * sizes_[l]};
  }
  std::span<double> bias(std::size_t l) noexcept {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }
  std::span<const double> bias(std::size_t l) const noexcept {
    return {params_.data() + offsets_[l] + sizes_[l + 1] * sizes_[l], sizes_[l + 1]};
  }

  /// Glorot-uniform weights, zero biases.
  void initialize(Rng& rng) {
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const double limit = std::sqrt(6.0 / static_cast<double>(sizes_[l] + sizes_[l + 1]));
      for (auto& w : weight(l)) w = rng.uniform(-limit, limit);
      std::fill(bias(l).begin(), bias(l).end(), 0.0);
    }
  }

  /// Forward pass keeping every layer's post-activation output; acts.front() is the input.
  void forward(std::span<const double> input, std::vector<std::vector<double>>& acts) const {
    acts.resize(sizes_.size());
    acts[0].assign(input.begin(), input.end());
    for (std::size_t l = 0; l < layer_count(); ++l) {
      const auto W = weight(l);
      const auto b = bias(l);
      const std::size_t in = sizes_[l];
      const std::size_t out = sizes_[l + 1];
      auto& y = acts[l + 1];
      y.assign(out, 0.0);
      const bool hidden = l + 1 < layer_count();
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        for (std::size_t i = 0; i < in; ++i) z += W[o * in + i] * acts[l][i];
        y[o] = hidden && hidden_ == Activation::tanh ? std::tanh(z) : z;
      }
    }
  }

  std::vector<double> operator()(std::span<const double> input) const {
    std::vector<std::vector<double>> acts;
    forward(input, acts);
    return acts.back();
  }

  /// Mean squared error over rows and outputs.
  double loss(std::span<const Vec5> inputs, std::span<const Vec5> targets) const {
    std::vector<std::vector<double>> acts;
    double total = 0.0;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      forward(inputs[r], acts);
      for (std::size_t o = 0; o < output_size(); ++o) {
        const double e = acts.back()[o] - targets[r][o];
        total += e * e;
      }
    }
    return total / static_cast<double>(inputs.size() * output_size());
  }

  /// Same value as loss(); writes d(loss)/d(parameters) into `grad` by backpropagation.
  double loss_and_gradient(std::span<const Vec5> inputs, std::span<const Vec5> targets,
                           std::vector<double>& grad) const {
    grad.assign(params_.size(), 0.0);
    const double scale = 1.0 / static_cast<double>(inputs.size() * output_size());
    std::vector<std::vector<double>> acts;
    std::vector<double> delta;
    std::vector<double> prev_delta;
    double total = 0.0;
    for (std::size_t r = 0; r < inputs.size(); ++r) {
      forward(inputs[r], acts);
      delta.assign(output_size(), 0.0);
      for (std::size_t o = 0; o < output_size(); ++o) {
        const double e = acts.back()[o] - targets[r][o];
        total += e * e;
        delta[o] = 2.0 * e * scale;
      }
      for (std::size_t l = layer_count(); l-- > 0;) {
        const std::size_t in = sizes_[l];
        const std::size_t out = sizes_[l + 1];
        const auto W = weight(l);
        const std::size_t w_off = offsets_[l];
        const std::size_t b_off = w_off + out * in;
        for (std::size_t o = 0; o < out; ++o) {
          grad[b_off + o] += delta[o];
          for (std::size_t i = 0; i < in; ++i) grad[w_off + o * in + i] += delta[o] * acts[l][i];
        }
        if (l == 0) break;
        prev_delta.assign(in, 0.0);
        for (std::size_t o = 0; o < out; ++o)
          for (std::size_t i = 0; i < in; ++i) prev_delta[i] += W[o * in + i] * delta[o];
        if (hidden_ == Activation::tanh)
          for (std::size_t i = 0; i < in; ++i) prev_delta[i] *= 1.0 - acts[l][i] * acts[l][i];
        std::swap(delta, prev_delta);
      }
    }
    return total * scale;
  }

  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
  Activation hidden_ = Activation::tanh;
};

struct SurrogateModel {
  Mlp net;
  Standardizer input_stats;
  Standardizer output_stats;
  std::size_t network_size = 0;  // n the model was trained for; 0 when unknown

  /// De-standardized network output.
  Vec5 predict_raw(const Vec5& lnparams) const {
    const Vec5 z = input_stats.apply(lnparams);
    const auto y = net(z);
    Vec5 out;
    std::copy_n(y.begin(), kFeatureCount, out.begin());
    return output_stats.invert(out);
  }

  /// predict_raw with num_communities clamped to >= 1 and modularity to [-0.5, 1].
  Vec5 predict(const Vec5& lnparams) const {
    Vec5 out = predict_raw(lnparams);
    out[1] = std::max(1.0, out[1]);
    out[2] = std::clamp(out[2], -0.5, 1.0);
    return out;
  }

  bool operator==(const SurrogateModel&) const = default;
};

struct TrainConfig {
  std::vector<std::size_t> hidden{64, 64};
  Activation activation = Activation::tanh;
  std::size_t epochs = 500;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double validation_fraction = 0.1;
};

struct TrainResult {
  SurrogateModel model;                // parameters from the best epoch
  std::vector<double> train_loss;      // full training-split loss after each epoch (standardized units)
  std::vector<double> validation_loss; // empty when the validation split is empty
  std::size_t best_epoch = 0;          // 0-based
};

/// Adam on flat parameter vectors.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, const TrainConfig& cfg) : m_(size, 0.0), v_(size, 0.0), cfg_(cfg) {}

  void step(std::span<double> params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      m_[k] = cfg_.beta1 * m_[k] + (1.0 - cfg_.beta1) * grad[k];
      v_[k] = cfg_.beta2 * v_[k] + (1.0 - cfg_.beta2) * grad[k] * grad[k];
      params[k] -= cfg_.learning_rate * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + cfg_.epsilon);
    }
  }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  TrainConfig cfg_;
  std::size_t t_ = 0;
};

/// Seeded 90/10 split, standardization from the training rows, mini-batch Adam for a fixed
/// number of epochs; keeps the parameters with the lowest validation loss (training loss
/// when the validation split is empty). Throws std::runtime_error on a non-finite loss.
inline TrainResult train(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
  if (data.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (data.inputs.size() != data.targets.size()) throw std::invalid_argument("train: inputs/targets mismatch");
  if (cfg.batch_size == 0) throw std::invalid_argument("train: batch_size must be positive");

  Rng rng = Rng::for_stream(seed, Stream::training);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(std::span(order), rng);
  const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(data.size())));
  const std::vector<std::size_t> val_idx(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(train_idx.begin(), train_idx.end());

  auto gather = [&](const std::vector<Vec5>& src, const std::vector<std::size_t>& idx) {
    std::vector<Vec5> out;
    out.reserve(idx.size());
    for (const auto i : idx) out.push_back(src[i]);
    return out;
  };
  const auto train_x_raw = gather(data.inputs, train_idx);
  const auto train_y_raw = gather(data.targets, train_idx);

  TrainResult result;
  SurrogateModel& model = result.model;
  model.input_stats = Standardizer::fit(train_x_raw);
  model.output_stats = Standardizer::fit(train_y_raw);

  auto standardize = [](const Standardizer& s, const std::vector<Vec5>& rows) {
    std::vector<Vec5> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(s.apply(r));
    return out;
  };
  const auto train_x = standardize(model.input_stats, train_x_raw);
  const auto train_y = standardize(model.output_stats, train_y_raw);
  const auto val_x = standardize(model.input_stats, gather(data.inputs, val_idx));
  const auto val_y = standardize(model.output_stats, gather(data.targets, val_idx));

  std::vector<std::size_t> sizes{kFeatureCount};
  sizes.insert(sizes.end(), cfg.hidden.begin(), cfg.hidden.end());
  sizes.push_back(kFeatureCount);
  Mlp net(sizes, cfg.activation);
  net.initialize(rng);

  AdamOptimizer adam(net.parameters().size(), cfg);
  std::vector<double> grad;
  std::vector<Vec5> batch_x;
  std::vector<Vec5> batch_y;
  std::vector<std::size_t> perm(train_x.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});

  double best = std::numeric_limits<double>::infinity();
  model.net = net;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span(perm), rng);
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(perm.size(), start + cfg.batch_size);
      batch_x.clear();
      batch_y.clear();
      for (std::size_t k = start; k < stop; ++k) {
        batch_x.push_back(train_x[perm[k]]);
        batch_y.push_back(train_y[perm[k]]);
      }
      const double batch_loss = net.loss_and_gradient(batch_x, batch_y, grad);
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", batch starting at " +
                                 std::to_string(start));
      adam.step(net.parameters(), grad);
    }
    const double tl = net.loss(train_x, train_y);
    if (!std::isfinite(tl)) throw std::runtime_error("train: non-finite training loss at epoch " + std::to_string(epoch));
    result.train_loss.push_back(tl);
    double score = tl;
    if (!val_x.empty()) {
      score = net.loss(val_x, val_y);
      result.validation_loss.push_back(score);
    }
    if (score < best) {
      best = score;
      result.best_epoch = epoch;
      model.net = net;
    }
  }
  return result;
}

inline nlohmann::ordered_json model_to_json(const SurrogateModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "adaptnet-surrogate";
  j["version"] = 1;
  j["network_size"] = m.network_size;
  j["inputs"] = {"ln_c", "ln_h", "ln_a", "ln_theta_h", "ln_theta_a"};
  j["outputs"] = std::vector<std::string>(std::begin(kMeasureNames), std::end(kMeasureNames));
  j["layer_sizes"] = m.net.layer_sizes();
  j["hidden_activation"] = activation_name(m.net.hidden_activation());
  j["output_activation"] = "identity";
  j["input_mean"] = m.input_stats.mean;
  j["input_std"] = m.input_stats.std;
  j["output_mean"] = m.output_stats.mean;
  j["output_std"] = m.output_stats.std;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < m.net.layer_count(); ++l) {
    const auto w = m.net.weight(l);
    const auto b = m.net.bias(l);
    const std::size_t in = m.net.layer_sizes()[l];
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t o = 0; o < b.size(); ++o)
      rows.push_back(std::vector<double>(w.begin() + static_cast<std::ptrdiff_t>(o * in),
                                         w.begin() + static_cast<std::ptrdiff_t>((o + 1) * in)));
    layers.push_back({{"weight", rows}, {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  j["layers"] = layers;
  return j;
}

inline SurrogateModel model_from_json(const nlohmann::ordered_json& j) {
  if (j.value("format", std::string{}) != "adaptnet-surrogate")
    throw std::invalid_argument("model file: not an adaptnet surrogate");
  const auto sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
  if (sizes.size() < 2 || sizes.front() != kFeatureCount || sizes.back() != kFeatureCount)
    throw std::invalid_argument("model file: layer sizes must run from 5 inputs to 5 outputs");
  SurrogateModel m;
  m.network_size = j.value("network_size", std::size_t{0});
  m.net = Mlp(sizes, activation_from_name(j.at("hidden_activation").get<std::string>()));
  m.input_stats = {j.at("input_mean").get<Vec5>(), j.at("input_std").get<Vec5>()};
  m.output_stats = {j.at("output_mean").get<Vec5>(), j.at("output_std").get<Vec5>()};
  const auto& layers = j.at("layers");
  if (layers.size() != m.net.layer_count()) throw std::invalid_argument("model file: layer count mismatch");
  for (std::size_t l = 0; l < m.net.layer_count(); ++l) {
    const auto rows = layers[l].at("weight").get<std::vector<std::vector<double>>>();
    const auto bias = layers[l].at("bias").get<std::vector<double>>();
    const std::size_t in = sizes[l];
    const std::size_t out = sizes[l + 1];
    if (rows.size() != out || bias.size() != out) throw std::invalid_argument("model file: layer shape mismatch");
    auto w = m.net.weight(l);
    for (std::size_t o = 0; o < out; ++o) {
      if (rows[o].size() != in) throw std::invalid_argument("model file: layer shape mismatch");
      std::copy(rows[o].begin(), rows[o].end(), w.begin() + static_cast<std::ptrdiff_t>(o * in));
    }
    std::copy(bias.begin(), bias.end(), m.net.bias(l).begin());
  }
  return m;
}

inline void save_model(const SurrogateModel& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file " + path.string());
  out << model_to_json(m).dump(1) << '\n';
  if (!out) throw std::runtime_error("write to " + path.string() + " failed");
}

inline SurrogateModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  return model_from_json(nlohmann::ordered_json::parse(in));
}

}  // namespace adaptnet
