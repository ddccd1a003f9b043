#pragma once

// Adaptive network state and its explicit Euler integration.
//
// Opinions x_i relax toward the in-weight-weighted local average of the
// sources feeding node i; directed weights w_ij (i target, j source) grow
// with homophily and attention to novelty and are clamped at zero after
// every step.

#include <adaptnet/random.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace adaptnet {

struct SimParams {
  std::size_t n = 100;
  double c = 0.1;        // social conformity
  double h = 0.1;        // homophily
  double a = 0.1;        // attention to novelty
  double theta_h = 0.1;  // homophily kernel value at zero distance
  double theta_a = 0.1;  // novelty kernel threshold
  double noise_sigma = 0.1;
  double dt = 0.1;
  double t_end = 100.0;

  /// Throws std::invalid_argument naming the first offending field.
  void validate() const {
    auto nonneg = [](double v, const char* name) {
      if (!(std::isfinite(v) && v >= 0.0))
        throw std::invalid_argument(std::string(name) + " must be a finite nonnegative number");
    };
    auto positive = [](double v, const char* name) {
      if (!(std::isfinite(v) && v > 0.0))
        throw std::invalid_argument(std::string(name) + " must be a finite positive number");
    };
    if (n == 0) throw std::invalid_argument("n must be at least 1");
    nonneg(c, "c");
    nonneg(h, "h");
    nonneg(a, "a");
    nonneg(theta_h, "theta_h");
    nonneg(theta_a, "theta_a");
    nonneg(noise_sigma, "noise_sigma");
    positive(dt, "dt");
    positive(t_end, "t_end");
  }

  std::size_t step_count() const { return static_cast<std::size_t>(std::llround(t_end / dt)); }

  bool operator==(const SimParams&) const = default;
};

/// Dense row-major n x n matrix of directed weights.
class WeightMatrix {
 public:
  WeightMatrix() = default;
  explicit WeightMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t target, std::size_t source) noexcept { return data_[target * n_ + source]; }
  double operator()(std::size_t target, std::size_t source) const noexcept {
    return data_[target * n_ + source];
  }
  std::span<double> row(std::size_t target) noexcept { return {data_.data() + target * n_, n_}; }
  std::span<const double> row(std::size_t target) const noexcept {
    return {data_.data() + target * n_, n_};
  }
  std::span<const double> data() const noexcept { return data_; }

  bool operator==(const WeightMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct NetworkState {
  std::vector<double> x;
  WeightMatrix w;

  std::size_t size() const noexcept { return x.size(); }

  /// Mean over the n(n-1) off-diagonal weights; 0 when n == 1.
  double mean_weight() const {
    const std::size_t n = size();
    if (n < 2) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) total += w(i, j);
    return total / static_cast<double>(n * (n - 1));
  }

  double min_weight() const {
    const auto d = w.data();
    return d.empty() ? 0.0 : *std::min_element(d.begin(), d.end());
  }

  double opinion_spread() const {
    if (x.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return *hi - *lo;
  }

  /// Raw little-endian-as-host dump of n, x and w; used for byte-level comparisons.
  std::vector<unsigned char> serialize() const {
    const std::uint64_t n = size();
    std::vector<unsigned char> out(sizeof(n) + (x.size() + w.data().size()) * sizeof(double));
    unsigned char* p = out.data();
    std::memcpy(p, &n, sizeof(n));
    p += sizeof(n);
    std::memcpy(p, x.data(), x.size() * sizeof(double));
    p += x.size() * sizeof(double);
    std::memcpy(p, w.data().data(), w.data().size() * sizeof(double));
    return out;
  }

  bool operator==(const NetworkState&) const = default;
};

/// Complete directed graph with Uniform[0,1) weights and Normal(0,1) opinions.
/// Draw order: off-diagonal weights row by row, then opinions by node index.
inline NetworkState init_network(std::size_t n, Rng& rng) {
  if (n == 0) throw std::invalid_argument("init_network: n must be at least 1");
  NetworkState s{std::vector<double>(n), WeightMatrix(n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s.w(i, j) = rng.uniform();
  for (auto& xi : s.x) xi = rng.normal();
  return s;
}

inline double local_average(const NetworkState& s, std::size_t i) {
  if (i >= s.size()) throw std::invalid_argument("local_average: node index out of range");
  const auto row = s.w.row(i);
  double weight_sum = 0.0;
  double weighted = 0.0;
  for (std::size_t j = 0; j < row.size(); ++j) {
    weight_sum += row[j];
    weighted += row[j] * s.x[j];
  }
  // A node with no incoming weight perceives only itself.
  return weight_sum > 0.0 ? weighted / weight_sum : s.x[i];
}

constexpr double homophily_kernel(double xi, double xj, double theta_h) noexcept {
  return theta_h - (xi > xj ? xi - xj : xj - xi);
}

constexpr double novelty_kernel(double local_avg, double xj, double theta_a) noexcept {
  return (local_avg > xj ? local_avg - xj : xj - local_avg) - theta_a;
}

/// One synchronous Euler step with caller-supplied per-node noise increments.
inline NetworkState euler_step(const NetworkState& s, const SimParams& p, std::span<const double> noise) {
  const std::size_t n = s.size();
  if (noise.size() != n) throw std::invalid_argument("euler_step: noise length must equal node count");

  std::vector<double> avg(n);
  for (std::size_t i = 0; i < n; ++i) avg[i] = local_average(s, i);

  NetworkState next{std::vector<double>(n), WeightMatrix(n)};
  for (std::size_t i = 0; i < n; ++i) {
    next.x[i] = s.x[i] + p.dt * p.c * (avg[i] - s.x[i]) + noise[i];
    const auto in = s.w.row(i);
    auto out = next.w.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double rate = p.h * homophily_kernel(s.x[i], s.x[j], p.theta_h) +
                          p.a * novelty_kernel(avg[i], s.x[j], p.theta_a);
      out[j] = std::max(0.0, in[j] + p.dt * rate);
    }
  }
  return next;
}

/// One synchronous Euler step drawing Normal(0, noise_sigma^2) per node in index order.
/// The noise is added once per step, not scaled by dt.
inline NetworkState euler_step(const NetworkState& s, const SimParams& p, Rng& rng) {
  std::vector<double> noise(s.size());
  for (auto& e : noise) e = p.noise_sigma * rng.normal();
  return euler_step(s, p, noise);
}

/// Called with (steps completed, state). Step 0 is the initial state.
using SnapshotFn = std::function<void(std::size_t, const NetworkState&)>;

/// Initializes from the simulation stream of `seed` and applies step_count() Euler steps.
/// When `snapshot` is set it receives the state every `snapshot_every` steps and at the end.
inline NetworkState run_simulation(const SimParams& p, std::uint64_t seed, const SnapshotFn& snapshot = {},
                                   std::size_t snapshot_every = 0) {
  p.validate();
  Rng rng = Rng::for_stream(seed, Stream::simulation);
  NetworkState s = init_network(p.n, rng);
  const std::size_t steps = p.step_count();
  const bool snap = snapshot && snapshot_every > 0;
  if (snap) snapshot(0, s);
  for (std::size_t k = 1; k <= steps; ++k) {
    s = euler_step(s, p, rng);
    if (snap && (k % snapshot_every == 0 || k == steps)) snapshot(k, s);
  }
  return s;
}

}  // namespace adaptnet
