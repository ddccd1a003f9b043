// adaptnet: single run, sweep, aggregate, surrogate fit and heatmap emission.

#include <adaptnet/adaptnet.hpp>

#include "CLI11.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace adaptnet;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::string out;
  bool quiet = false;
};

void require_out(const GlobalFlags& g, const char* what) {
  if (g.out.empty()) throw std::invalid_argument(std::string("--out is required for ") + what);
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

int cmd_run(const GlobalFlags& g, const SimParams& p, const std::string& snapshot_path, std::size_t snapshot_every) {
  p.validate();
  std::optional<std::ofstream> snap;
  SnapshotFn fn;
  if (!snapshot_path.empty()) {
    snap.emplace(snapshot_path);
    if (!*snap) throw std::runtime_error("cannot write " + snapshot_path);
    fn = [&](std::size_t step, const NetworkState& s) { write_snapshot(*snap, step, s, p); };
  }
  const NetworkState final_state = run_simulation(p, g.seed, fn, snapshot_every);
  const OutcomeVector o = outcome_vector(final_state, g.seed);

  ordered_json j;
  j["seed"] = g.seed;
  j["params"] = params_to_json(p);
  j["outcomes"] = outcomes_to_json(o);
  const std::string line = j.dump() + '\n';
  std::cout << line;
  if (!g.out.empty()) write_file(g.out, line);
  if (snap && !*snap) throw std::runtime_error("write to " + snapshot_path + " failed");
  return 0;
}

int cmd_sweep(const GlobalFlags& g, const std::string& spec_path, std::size_t workers, std::size_t max_runs,
              bool timing) {
  require_out(g, "sweep");
  const SweepSpec spec = read_sweep_spec(spec_path);
  RecordStore store(g.out);
  SweepOptions opts;
  opts.workers = workers;
  opts.max_new_runs = max_runs;
  opts.record_timing = timing;
  opts.progress = g.quiet ? nullptr : &std::cerr;
  opts.progress_every = 50;
  const SweepSummary s = execute_sweep(spec, store, opts);
  ordered_json j;
  j["total"] = s.total;
  j["already_done"] = s.already_done;
  j["executed"] = s.executed;
  j["failed"] = s.failed;
  j["remaining"] = s.remaining;
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_aggregate(const GlobalFlags& g, const std::string& records_path) {
  require_out(g, "aggregate");
  if (!fs::exists(records_path)) throw std::runtime_error("record file " + records_path + " does not exist");
  std::vector<std::string> warnings;
  const auto rows = aggregate(read_records(records_path), &warnings);
  if (!g.quiet)
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  std::ofstream out(g.out);
  write_aggregate_csv(out, rows);
  if (!out) throw std::runtime_error("cannot write " + g.out);
  if (!g.quiet) std::cerr << "aggregate: " << rows.size() << " combinations\n";
  return 0;
}

int cmd_fit(const GlobalFlags& g, const std::string& table_path, std::size_t n, const TrainConfig& cfg) {
  require_out(g, "fit");
  std::ifstream in(table_path);
  if (!in) throw std::runtime_error("cannot open table " + table_path);
  const auto rows = read_aggregate_csv(in);
  const Dataset data = build_dataset(rows, n);
  TrainResult r = train(data, cfg, g.seed);
  r.model.network_size = n;
  save_model(r.model, g.out);
  ordered_json j;
  j["examples"] = data.size();
  j["best_epoch"] = r.best_epoch;
  j["final_train_loss"] = r.train_loss.back();
  if (!r.validation_loss.empty()) {
    j["final_validation_loss"] = r.validation_loss.back();
    j["best_validation_loss"] = r.validation_loss[r.best_epoch];
  }
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_heatmap(const GlobalFlags& g, const std::string& model_path, const std::vector<double>& c_values,
                const SliceSpec& base, std::vector<std::string> measures, std::size_t resolution, std::size_t scale) {
  require_out(g, "heatmap");
  if (measures.empty() || (measures.size() == 1 && measures.front() == "all"))
    measures.assign(std::begin(kMeasureNames), std::end(kMeasureNames));
  for (const auto& m : measures) measure_index(m);
  const SurrogateModel model = load_model(model_path);
  fs::create_directories(g.out);
  std::size_t written = 0;
  for (const double c : c_values) {
    SliceSpec slice = base;
    slice.c = c;
    const HeatmapGrid grid = evaluate_grid(model, slice, resolution);
    for (const auto& m : measures) {
      const auto rendered = render_heatmap(grid, m, scale);
      write_file(fs::path(g.out) / (rendered.stem + ".csv"), rendered.table);
      write_file(fs::path(g.out) / (rendered.stem + ".ppm"), rendered.image);
      if (!g.quiet) std::cerr << "heatmap: wrote " << rendered.stem << ".{csv,ppm}\n";
      ++written;
    }
  }
  std::cout << ordered_json{{"written", written}}.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive social network simulator and sweep harness"};
  app.require_subcommand(1);
  GlobalFlags g;
  app.add_option("--seed", g.seed, "Run seed (run) or training seed (fit)");
  app.add_option("--out", g.out, "Output file (directory for heatmap)");
  app.add_flag("--quiet", g.quiet, "Suppress progress on stderr");

  SimParams p;
  std::string snapshot_path;
  std::size_t snapshot_every = 100;
  auto* run = app.add_subcommand("run", "Run one simulation and print its outcome vector")->fallthrough();
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("--n", p.n, "Node count")->capture_default_str();
  run->add_option("--c", p.c, "Social conformity")->capture_default_str();
  run->add_option("--h", p.h, "Homophily")->capture_default_str();
  run->add_option("--a", p.a, "Attention to novelty")->capture_default_str();
  run->add_option("--theta-h", p.theta_h, "Homophily kernel value at zero distance")->capture_default_str();
  run->add_option("--theta-a", p.theta_a, "Novelty kernel threshold")->capture_default_str();
  run->add_option("--noise", p.noise_sigma, "Per-step noise standard deviation")->capture_default_str();
  run->add_option("--dt", p.dt, "Euler time step")->capture_default_str();
  run->add_option("--t-end", p.t_end, "Simulation horizon")->capture_default_str();
  run->add_option("--snapshot", snapshot_path, "Write JSON-lines trajectory snapshots to this file");
  run->add_option("--snapshot-every", snapshot_every, "Steps between snapshots")->capture_default_str();

  std::string spec_path;
  std::size_t workers = 1;
  std::size_t max_runs = 0;
  bool timing = false;
  auto* sweep = app.add_subcommand("sweep", "Execute (or resume) a parameter sweep")->fallthrough();
  sweep->add_option("--spec", spec_path, "Sweep specification (JSON)")->required();
  sweep->add_option("--workers", workers, "Parallel workers")->capture_default_str()->check(CLI::PositiveNumber);
  sweep->add_option("--max-runs", max_runs, "Stop after this many new runs (0 = all)")->capture_default_str();
  sweep->add_flag("--timing", timing, "Record wall_time per run (records become non-reproducible)");

  std::string records_path;
  auto* agg = app.add_subcommand("aggregate", "Average replicates into a CSV table")->fallthrough();
  agg->add_option("--records", records_path, "Record file (JSON lines)")->required();

  std::string table_path;
  std::size_t fit_n = 0;
  TrainConfig cfg;
  auto* fit = app.add_subcommand("fit", "Train a surrogate for one network size")->fallthrough();
  fit->add_option("--table", table_path, "Aggregated CSV table")->required();
  fit->add_option("--n", fit_n, "Network size to select")->required();
  fit->add_option("--epochs", cfg.epochs, "Training epochs")->capture_default_str();
  fit->add_option("--batch-size", cfg.batch_size, "Mini-batch size")->capture_default_str();
  fit->add_option("--lr", cfg.learning_rate, "Adam learning rate")->capture_default_str();
  fit->add_option("--hidden", cfg.hidden, "Hidden layer sizes")->delimiter(',')->capture_default_str();

  std::string model_path;
  std::vector<double> c_values{0.003, 0.01, 0.03, 0.1, 0.3, 1.0};
  SliceSpec slice;
  std::vector<std::string> measures{"all"};
  std::size_t resolution = 60;
  std::size_t scale = 1;
  auto* heat = app.add_subcommand("heatmap", "Emit phase-diagram tables and images")->fallthrough();
  heat->add_option("--model", model_path, "Surrogate model file")->required();
  heat->add_option("--c", c_values, "Conformity slices")->delimiter(',')->capture_default_str();
  heat->add_option("--theta-h", slice.theta_h, "Fixed theta_h")->capture_default_str();
  heat->add_option("--theta-a", slice.theta_a, "Fixed theta_a")->capture_default_str();
  heat->add_option("--measure", measures, "Measures to render, or 'all'")->delimiter(',')->capture_default_str();
  heat->add_option("--resolution", resolution, "Cells per axis")->capture_default_str()->check(CLI::Range(2, 10000));
  heat->add_option("--scale", scale, "Pixels per cell")->capture_default_str()->check(CLI::Range(1, 64));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(g, p, snapshot_path, snapshot_every);
    if (*sweep) return cmd_sweep(g, spec_path, workers, max_runs, timing);
    if (*agg) return cmd_aggregate(g, records_path);
    if (*fit) return cmd_fit(g, table_path, fit_n, cfg);
    if (*heat) return cmd_heatmap(g, model_path, c_values, slice, measures, resolution, scale);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
