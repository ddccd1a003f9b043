#pragma once

// Parameter sweeps: Cartesian grids, per-run seeds, an append-only JSON-lines
// record store with resume, parallel execution and replicate aggregation.
//
// Record file: one JSON object per line, fields in this order:
//   combo_index, replicate, seed, status ("ok" | "failed"),
//   params {n, c, h, a, theta_h, theta_a, noise_sigma, dt, t_end},
//   outcomes {avg_edge_weight, num_communities, modularity,
//             range_community_states, std_community_states}   (ok only)
//   error                                                       (failed only)
//   wall_time                                                   (only when timing is enabled)

#include <adaptnet/graph.hpp>
#include <adaptnet/model.hpp>
#include <adaptnet/random.hpp>

#include <nlohmann/json.hpp>

#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <utility>
#include <vector>

namespace adaptnet {

using ordered_json = nlohmann::ordered_json;

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) throw std::invalid_argument("not a number: '" + text + "'");
  return v;
}

struct SweepSpec {
  std::vector<std::size_t> n_values;
  std::vector<double> c_values;
  std::vector<double> h_values;
  std::vector<double> a_values;
  std::vector<double> theta_h_values;
  std::vector<double> theta_a_values;
  std::size_t replicates = 5;
  std::uint64_t base_seed = 0;
  double dt = 0.1;
  double t_end = 100.0;
  double noise_sigma = 0.1;

  /// The six-size-per-dimension grid over three network sizes with five replicates.
  static SweepSpec paper_defaults() {
    const std::vector<double> values{0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
    SweepSpec s;
    s.n_values = {30, 100, 300};
    s.c_values = s.h_values = s.a_values = s.theta_h_values = s.theta_a_values = values;
    return s;
  }

  std::size_t combination_count() const {
    return n_values.size() * c_values.size() * h_values.size() * a_values.size() * theta_h_values.size() *
           theta_a_values.size();
  }
  std::size_t run_count() const { return combination_count() * replicates; }

  void validate() const {
    auto nonempty = [](bool empty, const char* name) {
      if (empty) throw std::invalid_argument(std::string("sweep spec: ") + name + " list is empty");
    };
    nonempty(n_values.empty(), "n");
    nonempty(c_values.empty(), "c");
    nonempty(h_values.empty(), "h");
    nonempty(a_values.empty(), "a");
    nonempty(theta_h_values.empty(), "theta_h");
    nonempty(theta_a_values.empty(), "theta_a");
    if (replicates == 0) throw std::invalid_argument("sweep spec: replicates must be at least 1");
  }
};

/// Cartesian product in dimension order (n, c, h, a, theta_h, theta_a); the last dimension varies fastest.
/// The position in the returned list is the combination index.
inline std::vector<SimParams> build_grid(const SweepSpec& spec) {
  spec.validate();
  std::vector<SimParams> grid;
  grid.reserve(spec.combination_count());
  for (const auto n : spec.n_values)
    for (const auto c : spec.c_values)
      for (const auto h : spec.h_values)
        for (const auto a : spec.a_values)
          for (const auto th : spec.theta_h_values)
            for (const auto ta : spec.theta_a_values) {
              SimParams p{n, c, h, a, th, ta, spec.noise_sigma, spec.dt, spec.t_end};
              p.validate();
              grid.push_back(p);
            }
  return grid;
}

/// mix64(mix64(base) ^ (combo << 20 | replicate)). mix64 is a bijection, so the
/// result is injective in (combo, replicate) for combo < 2^44 and replicate < 2^20.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t combo_index,
                                    std::uint64_t replicate) noexcept {
  return mix64(mix64(base_seed) ^ ((combo_index << 20) | (replicate & 0xFFFFFu)));
}

struct RunRecord {
  std::size_t combo_index = 0;
  std::size_t replicate = 0;
  SimParams params;
  std::uint64_t seed = 0;
  bool ok = true;
  OutcomeVector outcomes;
  std::string error;
  std::optional<double> wall_time;

  std::pair<std::size_t, std::size_t> key() const { return {combo_index, replicate}; }
  bool operator==(const RunRecord&) const = default;
};

inline ordered_json params_to_json(const SimParams& p) {
  ordered_json j;
  j["n"] = p.n;
  j["c"] = p.c;
  j["h"] = p.h;
  j["a"] = p.a;
  j["theta_h"] = p.theta_h;
  j["theta_a"] = p.theta_a;
  j["noise_sigma"] = p.noise_sigma;
  j["dt"] = p.dt;
  j["t_end"] = p.t_end;
  return j;
}

inline SimParams params_from_json(const nlohmann::ordered_json& j) {
  SimParams p;
  p.n = j.at("n").get<std::size_t>();
  p.c = j.at("c").get<double>();
  p.h = j.at("h").get<double>();
  p.a = j.at("a").get<double>();
  p.theta_h = j.at("theta_h").get<double>();
  p.theta_a = j.at("theta_a").get<double>();
  p.noise_sigma = j.at("noise_sigma").get<double>();
  p.dt = j.at("dt").get<double>();
  p.t_end = j.at("t_end").get<double>();
  return p;
}

inline ordered_json outcomes_to_json(const OutcomeVector& o) {
  ordered_json j;
  j["avg_edge_weight"] = o.avg_edge_weight;
  j["num_communities"] = o.num_communities;
  j["modularity"] = o.modularity;
  j["range_community_states"] = o.range_community_states;
  j["std_community_states"] = o.std_community_states;
  return j;
}

inline OutcomeVector outcomes_from_json(const ordered_json& j) {
  OutcomeVector o;
  o.avg_edge_weight = j.at("avg_edge_weight").get<double>();
  o.num_communities = j.at("num_communities").get<std::size_t>();
  o.modularity = j.at("modularity").get<double>();
  o.range_community_states = j.at("range_community_states").get<double>();
  o.std_community_states = j.at("std_community_states").get<double>();
  return o;
}

inline std::string to_json_line(const RunRecord& r) {
  ordered_json j;
  j["combo_index"] = r.combo_index;
  j["replicate"] = r.replicate;
  j["seed"] = r.seed;
  j["status"] = r.ok ? "ok" : "failed";
  j["params"] = params_to_json(r.params);
  if (r.ok)
    j["outcomes"] = outcomes_to_json(r.outcomes);
  else
    j["error"] = r.error;
  if (r.wall_time) j["wall_time"] = *r.wall_time;
  return j.dump();
}

inline RunRecord record_from_json_line(const std::string& line) {
  const auto j = ordered_json::parse(line);
  RunRecord r;
  r.combo_index = j.at("combo_index").get<std::size_t>();
  r.replicate = j.at("replicate").get<std::size_t>();
  r.seed = j.at("seed").get<std::uint64_t>();
  const auto status = j.at("status").get<std::string>();
  if (status != "ok" && status != "failed") throw std::invalid_argument("unknown status '" + status + "'");
  r.ok = status == "ok";
  r.params = params_from_json(j.at("params"));
  if (r.ok)
    r.outcomes = outcomes_from_json(j.at("outcomes"));
  else
    r.error = j.value("error", std::string{});
  if (j.contains("wall_time")) r.wall_time = j.at("wall_time").get<double>();
  return r;
}

/// Malformed input file; carries the 1-based line number.
class RecordFormatError : public std::runtime_error {
 public:
  RecordFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class SinkError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses every complete line of a record file. A trailing line without a newline
/// is a torn write from an interrupted run and is ignored when `allow_torn_tail` is set.
inline std::vector<RunRecord> read_records(const std::filesystem::path& path, bool allow_torn_tail = false,
                                           std::size_t* complete_bytes = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open record file " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<RunRecord> records;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    ++line_no;
    const std::size_t nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      if (allow_torn_tail) break;
      throw RecordFormatError(line_no, "record is not newline-terminated");
    }
    const std::string line = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (line.empty()) continue;
    try {
      records.push_back(record_from_json_line(line));
    } catch (const std::exception& e) {
      throw RecordFormatError(line_no, e.what());
    }
  }
  if (complete_bytes) *complete_bytes = pos > text.size() ? text.size() : pos;
  return records;
}

/// Successful records, one per (combo, replicate); the first occurrence wins.
inline std::vector<RunRecord> successful_records(const std::vector<RunRecord>& all) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::vector<RunRecord> out;
  for (const auto& r : all)
    if (r.ok && seen.insert(r.key()).second) out.push_back(r);
  return out;
}

/// Append-only record file; appends are serialized by a mutex and flushed per line.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path path) : path_(std::move(path)) {
    if (std::filesystem::is_regular_file(path_)) {
      std::size_t complete = 0;
      const auto all = read_records(path_, true, &complete);
      if (complete != std::filesystem::file_size(path_)) std::filesystem::resize_file(path_, complete);
      for (const auto& r : all)
        if (r.ok) done_.insert(r.key());
    }
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw SinkError("cannot open record file " + path_.string() + " for appending");
  }

  const std::filesystem::path& path() const noexcept { return path_; }

  bool contains(std::size_t combo, std::size_t replicate) const {
    std::lock_guard lock(mu_);
    return done_.contains({combo, replicate});
  }

  std::size_t completed_count() const {
    std::lock_guard lock(mu_);
    return done_.size();
  }

  void append(const RunRecord& r) {
    const std::string line = to_json_line(r) + '\n';
    std::lock_guard lock(mu_);
    out_.write(line.data(), static_cast<std::streamsize>(line.size()));
    out_.flush();
    if (!out_) throw SinkError("write to " + path_.string() + " failed");
    if (r.ok) done_.insert(r.key());
  }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  mutable std::mutex mu_;
  std::set<std::pair<std::size_t, std::size_t>> done_;
};

/// Simulates one grid point and measures its outcomes.
inline RunRecord execute_run(const SimParams& p, std::size_t combo, std::size_t replicate, std::uint64_t seed) {
  RunRecord r;
  r.combo_index = combo;
  r.replicate = replicate;
  r.params = p;
  r.seed = seed;
  const NetworkState final_state = run_simulation(p, seed);
  r.outcomes = outcome_vector(final_state, seed);
  return r;
}

/// The unit of work inside a sweep; replaceable in tests to inject failures.
using RunFn = std::function<RunRecord(const SimParams&, std::size_t, std::size_t, std::uint64_t)>;

struct SweepOptions {
  std::size_t workers = 1;
  std::size_t max_new_runs = 0;  // 0 = no limit; used to stop a sweep part-way
  bool record_timing = false;    // wall_time makes record files non-reproducible
  std::ostream* progress = nullptr;
  std::size_t progress_every = 100;
  RunFn run = execute_run;
};

struct SweepSummary {
  std::size_t total = 0;
  std::size_t already_done = 0;
  std::size_t executed = 0;
  std::size_t failed = 0;
  std::size_t remaining = 0;
};

/// Runs every (combination, replicate) missing from `store` and appends its record.
/// A run that throws is recorded with status "failed" and retried by the next sweep.
/// A SinkError stops all workers and is rethrown; the store stays resumable.
inline SweepSummary execute_sweep(const SweepSpec& spec, RecordStore& store, const SweepOptions& opts = {}) {
  const auto grid = build_grid(spec);
  struct Task {
    std::size_t combo;
    std::size_t replicate;
  };
  std::vector<Task> pending;
  SweepSummary summary;
  summary.total = grid.size() * spec.replicates;
  for (std::size_t combo = 0; combo < grid.size(); ++combo)
    for (std::size_t rep = 0; rep < spec.replicates; ++rep) {
      if (store.contains(combo, rep))
        ++summary.already_done;
      else
        pending.push_back({combo, rep});
    }
  const std::size_t to_run =
      opts.max_new_runs == 0 ? pending.size() : std::min(pending.size(), opts.max_new_runs);

  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> finished{0};
  std::atomic<std::size_t> failed{0};
  std::atomic<bool> abort{false};
  std::mutex error_mu;
  std::exception_ptr sink_error;
  std::mutex progress_mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t t = next.fetch_add(1);
      if (t >= to_run) return;
      const auto [combo, rep] = pending[t];
      const std::uint64_t seed = derive_seed(spec.base_seed, combo, rep);
      const auto start = std::chrono::steady_clock::now();
      RunRecord rec;
      try {
        rec = opts.run(grid[combo], combo, rep, seed);
      } catch (const std::exception& e) {
        rec = RunRecord{combo, rep, grid[combo], seed, false, {}, e.what(), std::nullopt};
      } catch (...) {
        rec = RunRecord{combo, rep, grid[combo], seed, false, {}, "unknown error", std::nullopt};
      }
      if (opts.record_timing)
        rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      try {
        store.append(rec);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!sink_error) sink_error = std::current_exception();
        abort.store(true);
        return;
      }
      if (!rec.ok) failed.fetch_add(1);
      const std::size_t done = finished.fetch_add(1) + 1;
      if (opts.progress && opts.progress_every > 0 && (done % opts.progress_every == 0 || done == to_run)) {
        std::lock_guard lock(progress_mu);
        *opts.progress << "sweep: " << done << "/" << to_run << " runs (" << failed.load() << " failed)\n";
      }
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(opts.workers, std::max<std::size_t>(1, to_run)));
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (sink_error) std::rethrow_exception(sink_error);

  summary.executed = finished.load();
  summary.failed = failed.load();
  summary.remaining = summary.total - store.completed_count();
  return summary;
}

struct AggregateRow {
  std::size_t combo_index = 0;
  SimParams params;
  std::size_t replicates = 0;
  std::array<double, kMeasureCount> mean{};
  std::array<double, kMeasureCount> std{};  // population convention
};

/// Mean and population standard deviation of each measure per combination, ordered by combo index.
/// Failed records are skipped. `warnings` receives a note when replicate counts differ.
inline std::vector<AggregateRow> aggregate(const std::vector<RunRecord>& records,
                                           std::vector<std::string>* warnings = nullptr) {
  std::map<std::size_t, std::vector<const RunRecord*>> groups;
  const auto ok = successful_records(records);
  for (const auto& r : ok) groups[r.combo_index].push_back(&r);

  std::vector<AggregateRow> rows;
  rows.reserve(groups.size());
  for (const auto& [combo, members] : groups) {
    AggregateRow row;
    row.combo_index = combo;
    row.params = members.front()->params;
    row.replicates = members.size();
    for (std::size_t k = 0; k < kMeasureCount; ++k) {
      double sum = 0.0;
      for (const auto* r : members) sum += as_array(r->outcomes)[k];
      const double mu = sum / static_cast<double>(members.size());
      double var = 0.0;
      for (const auto* r : members) {
        const double d = as_array(r->outcomes)[k] - mu;
        var += d * d;
      }
      row.mean[k] = mu;
      row.std[k] = std::sqrt(var / static_cast<double>(members.size()));
    }
    rows.push_back(row);
  }
  if (warnings && !rows.empty()) {
    const std::size_t expected = rows.front().replicates;
    for (const auto& row : rows)
      if (row.replicates != expected)
        warnings->push_back("combination " + std::to_string(row.combo_index) + " has " +
                            std::to_string(row.replicates) + " replicates, expected " + std::to_string(expected));
  }
  return rows;
}

inline std::vector<std::string> aggregate_header() {
  std::vector<std::string> header{"n", "c", "h", "a", "theta_h", "theta_a"};
  for (const auto* name : kMeasureNames) {
    header.push_back(std::string("mean_") + name);
    header.push_back(std::string("std_") + name);
  }
  header.push_back("replicates");
  return header;
}

inline void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  const auto header = aggregate_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    out << r.params.n << ',' << format_double(r.params.c) << ',' << format_double(r.params.h) << ','
        << format_double(r.params.a) << ',' << format_double(r.params.theta_h) << ','
        << format_double(r.params.theta_a);
    for (std::size_t k = 0; k < kMeasureCount; ++k)
      out << ',' << format_double(r.mean[k]) << ',' << format_double(r.std[k]);
    out << ',' << r.replicates << '\n';
  }
}

/// Reads a table written by write_aggregate_csv. Columns are located by header name.
/// Integrator settings are not part of the table and keep their defaults.
inline std::vector<AggregateRow> read_aggregate_csv(std::istream& in) {
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
  };
  std::string line;
  if (!std::getline(in, line)) throw RecordFormatError(1, "empty table");
  const auto header = split(line);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column[header[i]] = i;
  for (const auto& name : aggregate_header())
    if (!column.contains(name)) throw RecordFormatError(1, "missing column '" + name + "'");

  std::vector<AggregateRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw RecordFormatError(line_no, "expected " + std::to_string(header.size()) + " cells");
    try {
      auto num = [&](const std::string& name) { return parse_double(cells[column.at(name)]); };
      AggregateRow r;
      r.combo_index = rows.size();
      r.params.n = static_cast<std::size_t>(num("n"));
      r.params.c = num("c");
      r.params.h = num("h");
      r.params.a = num("a");
      r.params.theta_h = num("theta_h");
      r.params.theta_a = num("theta_a");
      r.replicates = static_cast<std::size_t>(num("replicates"));
      for (std::size_t k = 0; k < kMeasureCount; ++k) {
        r.mean[k] = num(std::string("mean_") + kMeasureNames[k]);
        r.std[k] = num(std::string("std_") + kMeasureNames[k]);
      }
      rows.push_back(r);
    } catch (const std::exception& e) {
      throw RecordFormatError(line_no, e.what());
    }
  }
  return rows;
}

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  SweepSpec s;
  s.n_values = j.at("n").get<std::vector<std::size_t>>();
  s.c_values = j.at("c").get<std::vector<double>>();
  s.h_values = j.at("h").get<std::vector<double>>();
  s.a_values = j.at("a").get<std::vector<double>>();
  s.theta_h_values = j.at("theta_h").get<std::vector<double>>();
  s.theta_a_values = j.at("theta_a").get<std::vector<double>>();
  s.replicates = j.value("replicates", s.replicates);
  s.base_seed = j.value("base_seed", s.base_seed);
  s.dt = j.value("dt", s.dt);
  s.t_end = j.value("t_end", s.t_end);
  s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
  s.validate();
  return s;
}

inline SweepSpec read_sweep_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sweep spec " + path.string());
  return sweep_spec_from_json(nlohmann::json::parse(in));
}

}  // namespace adaptnet
