#pragma once

#include <string>
#include <vector>

#include "cfgflow/config.hpp"

namespace cfgflow {

/// One evaluation row. Wall-clock time is recorded in the run manifest,
/// not here, so reruns of the same (config, seed) stay byte-identical.
struct MetricsRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t outer = 0;
  std::string scheme;
  std::string loss;
  std::size_t n_d = 0;
  std::size_t m = 0;
  double frechet = 0.0;
  double kl = 0.0;
  std::size_t modes_covered = 0;
  double quality_fraction = 0.0;
  double score_gap = 0.0;
};

std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsRecord& r);

// --- file formats ---------------------------------------------------------

/// FIELD v1 <nx> <ny> <xmin> <xmax> <ymin> <ymax>, then `x y gx gy` per
/// grid node, row-major.
void write_field(const std::string& path, const FieldDump& field);
FieldDump read_field(const std::string& path);

/// SAMPLES v1 <n> <d>, then one point per line.
void write_samples(const std::string& path, const Tensor& points);
Tensor read_samples(const std::string& path);

/// MODEL v1 <layers>, then per layer LAYER <in> <out> <activation>
/// followed by weight rows and the bias row.
void write_model(const std::string& path, const NetParams& net);
NetParams read_model(const std::string& path);

std::uint64_t fnv1a64_file(const std::string& path);

// --- orchestration --------------------------------------------------------

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 when any seed aborted
  std::string run_id;
  std::vector<std::string> outputs;  // paths relative to out_dir
  std::vector<std::string> errors;
};

/// Executes the experiment for every seed (possibly concurrently; the
/// CFG_ANNEAL_THREADS environment variable caps the parallelism), writes
/// metrics.csv, per-seed dumps, and the manifest into out_dir.
RunResult run_experiment(const RunConfig& cfg, const std::string& out_dir, bool quiet = false);

struct CompareRow {
  std::string label;
  double value = 0.0;
  std::size_t seeds = 0;
};

struct CompareTable {
  std::string metric;
  std::string aggregation;
  std::vector<CompareRow> rows;  // ascending by value
};

/// Aggregates the final evaluation row of each seed across run
/// directories. metric: frechet | kl | modes_covered | quality_fraction |
/// score_gap; aggregation: median | min | mean. Runs must share
/// dataset.spec and run.eval_every.
CompareTable compare_runs(const std::vector<std::string>& run_dirs, const std::string& metric,
                          const std::string& aggregation);

std::string format_table(const CompareTable& table);

/// Grid box that covers all component means with a 3-sigma margin.
GridSpec auto_grid(const GaussianMixture& mix, std::size_t nx = 21, std::size_t ny = 21);

}  // namespace cfgflow
