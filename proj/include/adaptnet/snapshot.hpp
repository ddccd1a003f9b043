#pragma once

// JSON-lines trajectory snapshots: {"step", "t", "x", "mean_weight", "min_weight", "spread_x"}.

#include <adaptnet/model.hpp>

#include <nlohmann/json.hpp>

#include <cstddef>
#include <ostream>

namespace adaptnet {

inline void write_snapshot(std::ostream& out, std::size_t step, const NetworkState& s, const SimParams& p) {
  nlohmann::ordered_json j;
  j["step"] = step;
  j["t"] = static_cast<double>(step) * p.dt;
  j["x"] = s.x;
  j["mean_weight"] = s.mean_weight();
  j["min_weight"] = s.min_weight();
  j["spread_x"] = s.opinion_spread();
  out << j.dump() << '\n';
}

}  // namespace adaptnet
