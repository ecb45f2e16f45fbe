#pragma once

#include <optional>
#include <string>

#include "cfgflow/cfg_engine.hpp"
#include "cfgflow/dataset.hpp"
#include "cfgflow/gan_engine.hpp"
#include "cfgflow/metrics.hpp"

namespace cfgflow {

enum class ExperimentKind {
  flow,
  train_cfg,
  train_gan,
  sample_langevin,
  eval,
  dump_field,
  grad_check,
};

std::string kind_name(ExperimentKind kind);

/// Deferred schedule description; materialized once the length is known.
struct ScheduleSpec {
  enum class Kind { geometric, constant, reverse };
  Kind kind = Kind::geometric;
  double a = 1.0;
  double b = 0.01;

  WeightSchedule materialize(std::size_t length) const;
  bool operator==(const ScheduleSpec&) const = default;
};

struct DeltaSpec {
  DeltaMode mode = DeltaMode::constant;
  double value = 1.0;
  bool operator==(const DeltaSpec&) const = default;
};

/// Single-point isotropic Gaussian as a dataset spec, the form behind
/// `gaussian(mx, my, sigma)`.
DatasetSpec gaussian_spec(double mx, double my, double sigma);

struct ModelConfig {
  std::size_t latent_dim = 4;
  std::size_t gen_hidden = 64;
  std::size_t gen_depth = 2;
  std::size_t disc_hidden = 64;
  std::size_t disc_depth = 2;
  OptimizerKind optimizer = OptimizerKind::adam;
  double gen_lr = 2e-4;
  double disc_lr = 2e-4;
  double adam_beta1 = 0.5;
  double adam_beta2 = 0.999;
  bool operator==(const ModelConfig&) const = default;
};

struct GanSection {
  Scheme scheme = Scheme::nats;
  GanLoss loss = GanLoss::original;
  std::size_t outer = 2000;
  std::size_t disc_steps = 1;
  std::size_t n_d = 5;
  std::size_t batch = 64;
  ScheduleSpec schedule;
  double wgan_clip = 0.05;
  bool operator==(const GanSection&) const = default;
};

struct CfgSection {
  std::size_t steps = 15;
  std::size_t disc_updates = 1;
  std::size_t examples = 640;
  std::size_t batch = 64;
  double eta_flow = 0.25;
  ScheduleSpec schedule;
  DeltaSpec delta;
  double s_scale = 1.0;
  Phi0 phi0 = Phi0::identity;
  std::size_t epochs = 200;
  std::size_t distill_passes = 5;
  bool operator==(const CfgSection&) const = default;
};

struct FlowSection {
  DatasetSpec target = gaussian_spec(1.0, 0.0, 1.0);
  DatasetSpec start = gaussian_spec(0.0, 0.0, 1.0);
  ScheduleSpec schedule;
  std::size_t steps = 15;
  double eta = 0.1;
  std::size_t particles = 2000;
  DeltaSpec delta;
  double s_scale = 1.0;
  Phi0 phi0 = Phi0::identity;
  RefitCadence refit = RefitCadence::per_step;
  std::size_t epochs = 1;
};

struct ChainSection {
  bool annealed = true;
  std::size_t steps = 100;  // K per level
  double epsilon = 1e-4;
  std::size_t chains = 5000;
  std::size_t levels = 10;
  double sigma_first = 8.0;
  double gamma = 0.0;  // 0 = auto via select_gamma(dim)
  DatasetSpec prior = gaussian_spec(8.0, 0.0, 1.0);
  double bound = 1e3;
};

struct FieldSection {
  DatasetSpec target = gaussian_spec(1.0, 0.0, 1.0);
  DatasetSpec start = gaussian_spec(0.0, 0.0, 1.0);
  bool analytic = false;  // trained logistic D unless set
  std::size_t train_steps = 2000;
  std::size_t train_batch = 256;
  GridSpec grid;
};

struct GradSection {
  std::size_t nets = 100;
  double tolerance = 1e-4;
  std::size_t batch = 4;
  bool operator==(const GradSection&) const = default;
};

struct EvalSection {
  std::string samples_file;
  bool operator==(const EvalSection&) const = default;
};

struct RunSection {
  std::vector<std::uint64_t> seeds = {1};
  std::size_t eval_every = 50;
  std::size_t eval_samples = 10000;
  double quality_sigmas = 3.0;
  bool operator==(const RunSection&) const = default;
};

bool operator==(const DatasetSpec& a, const DatasetSpec& b);
bool operator==(const FlowSection& a, const FlowSection& b);
bool operator==(const ChainSection& a, const ChainSection& b);
bool operator==(const FieldSection& a, const FieldSection& b);
bool operator==(const GridSpec& a, const GridSpec& b);

struct RunConfig {
  ExperimentKind kind = ExperimentKind::train_gan;
  DatasetSpec dataset;
  bool has_dataset = false;
  ModelConfig model;
  GanSection gan;
  CfgSection cfg;
  FlowSection flow;
  ChainSection chain;
  FieldSection field;
  GradSection grad;
  EvalSection eval;
  RunSection run;

  /// Canonical text form; parse(emit()) reproduces the config exactly.
  std::string emit() const;

  bool operator==(const RunConfig& other) const;
};

/// Parses the line-oriented `section.key = value` grammar. Unknown keys,
/// duplicate keys, malformed values, and keys from engine sections not
/// matching experiment.kind are rejected with the offending line.
RunConfig parse_config(const std::string& text);

RunConfig parse_config_file(const std::string& path);

}  // namespace cfgflow
