#include "cfgflow/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "cfgflow/errors.hpp"
#include "cfgflow/schedules.hpp"

namespace cfgflow {

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::flow: return "flow";
    case ExperimentKind::train_cfg: return "train-cfg";
    case ExperimentKind::train_gan: return "train-gan";
    case ExperimentKind::sample_langevin: return "sample-langevin";
    case ExperimentKind::eval: return "eval";
    case ExperimentKind::dump_field: return "dump-field";
    case ExperimentKind::grad_check: return "grad-check";
  }
  return "?";
}

WeightSchedule ScheduleSpec::materialize(std::size_t length) const {
  switch (kind) {
    case Kind::geometric: return geometric_schedule(length, a, b);
    case Kind::constant: return constant_schedule(length, a);
    case Kind::reverse: return reverse_schedule(geometric_schedule(length, a, b));
  }
  throw ScheduleError("unknown schedule kind");
}

DatasetSpec gaussian_spec(double mx, double my, double sigma) {
  DatasetSpec spec;
  spec.kind = DatasetKind::gaussian_point;
  spec.cx = mx;
  spec.cy = my;
  spec.sigma = sigma;
  return spec;
}

namespace {

bool component_eq(const GaussianComponent& a, const GaussianComponent& b) {
  return a.weight() == b.weight() && a.mean() == b.mean() && a.cov() == b.cov();
}

}  // namespace

bool operator==(const DatasetSpec& a, const DatasetSpec& b) {
  if (a.kind != b.kind || a.modes != b.modes || a.radius != b.radius ||
      a.spacing != b.spacing || a.sigma != b.sigma || a.cx != b.cx || a.cy != b.cy ||
      a.samples != b.samples || a.custom.size() != b.custom.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.custom.size(); ++i) {
    if (!component_eq(a.custom[i], b.custom[i])) return false;
  }
  return true;
}

bool operator==(const GridSpec& a, const GridSpec& b) {
  return a.nx == b.nx && a.ny == b.ny && a.xmin == b.xmin && a.xmax == b.xmax &&
         a.ymin == b.ymin && a.ymax == b.ymax;
}

bool operator==(const FlowSection& a, const FlowSection& b) {
  return a.target == b.target && a.start == b.start && a.schedule == b.schedule &&
         a.steps == b.steps && a.eta == b.eta && a.particles == b.particles &&
         a.delta == b.delta && a.s_scale == b.s_scale && a.phi0 == b.phi0 &&
         a.refit == b.refit && a.epochs == b.epochs;
}

bool operator==(const ChainSection& a, const ChainSection& b) {
  return a.annealed == b.annealed && a.steps == b.steps && a.epsilon == b.epsilon &&
         a.chains == b.chains && a.levels == b.levels && a.sigma_first == b.sigma_first &&
         a.gamma == b.gamma && a.prior == b.prior && a.bound == b.bound;
}

bool operator==(const FieldSection& a, const FieldSection& b) {
  return a.target == b.target && a.start == b.start && a.analytic == b.analytic &&
         a.train_steps == b.train_steps && a.train_batch == b.train_batch &&
         a.grid == b.grid;
}

bool RunConfig::operator==(const RunConfig& other) const {
  if (kind != other.kind || run != other.run) return false;
  if (has_dataset != other.has_dataset) return false;
  if (has_dataset && !(dataset == other.dataset)) return false;
  switch (kind) {
    case ExperimentKind::flow: return flow == other.flow;
    case ExperimentKind::train_cfg: return model == other.model && cfg == other.cfg;
    case ExperimentKind::train_gan: return model == other.model && gan == other.gan;
    case ExperimentKind::sample_langevin: return chain == other.chain;
    case ExperimentKind::eval: return eval == other.eval;
    case ExperimentKind::dump_field: return model == other.model && field == other.field;
    case ExperimentKind::grad_check: return grad == other.grad;
  }
  return false;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct RawEntry {
  std::string value;
  int line = 0;
  int column = 0;
  bool used = false;
};

struct Parser {
  std::map<std::string, RawEntry> entries;

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    auto it = entries.find(key);
    int line = it != entries.end() ? it->second.line : 0;
    throw ConfigError("line " + std::to_string(line) + ": key '" + key + "': " + msg, line);
  }

  bool has(const std::string& key) const { return entries.count(key) > 0; }

  const std::string* get(const std::string& key) {
    auto it = entries.find(key);
    if (it == entries.end()) return nullptr;
    it->second.used = true;
    return &it->second.value;
  }

  double number(const std::string& key, const std::string& v) {
    try {
      std::size_t pos = 0;
      double parsed = std::stod(v, &pos);
      if (pos != v.size()) fail(key, "trailing characters in number '" + v + "'");
      return parsed;
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception&) {
      fail(key, "expected a number, got '" + v + "'");
    }
  }

  void number_into(const std::string& key, double& out) {
    if (const std::string* v = get(key)) out = number(key, *v);
  }

  void count_into(const std::string& key, std::size_t& out) {
    if (const std::string* v = get(key)) {
      double d = number(key, *v);
      if (d < 0 || d != static_cast<double>(static_cast<std::size_t>(d))) {
        fail(key, "expected a non-negative integer");
      }
      out = static_cast<std::size_t>(d);
    }
  }

  void bool_into(const std::string& key, bool& out) {
    if (const std::string* v = get(key)) {
      if (*v == "true") {
        out = true;
      } else if (*v == "false") {
        out = false;
      } else {
        fail(key, "expected true or false");
      }
    }
  }

  /// Parses `name(a, b, ...)` into (name, args). A bare word is a call
  /// with no arguments.
  std::pair<std::string, std::vector<double>> call(const std::string& key,
                                                   const std::string& v) {
    std::size_t open = v.find('(');
    if (open == std::string::npos) return {v, {}};
    if (v.back() != ')') fail(key, "missing ')' in '" + v + "'");
    std::string name = trim(v.substr(0, open));
    std::string inner = v.substr(open + 1, v.size() - open - 2);
    std::vector<double> args;
    std::stringstream ss(inner);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      if (part.empty()) fail(key, "empty argument in '" + v + "'");
      args.push_back(number(key, part));
    }
    return {name, args};
  }

  void schedule_into(const std::string& key, ScheduleSpec& out) {
    const std::string* v = get(key);
    if (!v) return;
    auto [name, args] = call(key, *v);
    if (name == "geometric" && args.size() == 2) {
      out = {ScheduleSpec::Kind::geometric, args[0], args[1]};
    } else if (name == "constant" && args.size() == 1) {
      out = {ScheduleSpec::Kind::constant, args[0], 0.0};
    } else if (name == "reverse" && args.size() == 2) {
      out = {ScheduleSpec::Kind::reverse, args[0], args[1]};
    } else {
      fail(key, "expected geometric(a, b), constant(a), or reverse(a, b)");
    }
  }

  void delta_into(const std::string& key, DeltaSpec& out) {
    const std::string* v = get(key);
    if (!v) return;
    auto [name, args] = call(key, *v);
    if (name == "constant" && args.size() == 1) {
      out = {DeltaMode::constant, args[0]};
    } else if (name == "computed" && args.empty()) {
      out = {DeltaMode::computed, 0.0};
    } else {
      fail(key, "expected constant(value) or computed");
    }
  }

  void mixture_into(const std::string& key, DatasetSpec& out) {
    const std::string* v = get(key);
    if (!v) return;
    auto [name, args] = call(key, *v);
    if (name == "ring" && args.size() == 3) {
      out.kind = DatasetKind::ring;
      out.modes = static_cast<int>(args[0]);
      out.radius = args[1];
      out.sigma = args[2];
    } else if (name == "grid" && args.size() == 3) {
      out.kind = DatasetKind::grid;
      out.modes = static_cast<int>(args[0]);
      out.spacing = args[1];
      out.sigma = args[2];
    } else if (name == "two_gaussian" && args.size() == 2) {
      out.kind = DatasetKind::two_gaussian;
      out.radius = args[0];
      out.sigma = args[1];
    } else if (name == "gaussian" && args.size() == 3) {
      out.kind = DatasetKind::gaussian_point;
      out.cx = args[0];
      out.cy = args[1];
      out.sigma = args[2];
    } else {
      fail(key, "expected ring(modes, radius, sigma), grid(n, spacing, sigma), "
                "two_gaussian(radius, sigma), or gaussian(mx, my, sigma)");
    }
  }

  void seeds_into(const std::string& key, std::vector<std::uint64_t>& out) {
    const std::string* v = get(key);
    if (!v) return;
    out.clear();
    std::stringstream ss(*v);
    std::string part;
    while (std::getline(ss, part, ',')) {
      part = trim(part);
      try {
        out.push_back(std::stoull(part));
      } catch (const std::exception&) {
        fail(key, "expected a comma-separated list of seeds, got '" + part + "'");
      }
    }
    if (out.empty()) fail(key, "seed list is empty");
  }

  void choice_into(const std::string& key, const std::vector<std::string>& names,
                   std::size_t& index) {
    const std::string* v = get(key);
    if (!v) return;
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (*v == names[i]) {
        index = i;
        return;
      }
    }
    std::string options;
    for (const auto& n : names) options += (options.empty() ? "" : " | ") + n;
    fail(key, "expected one of " + options + ", got '" + *v + "'");
  }
};

std::string dataset_value(const DatasetSpec& spec) {
  std::ostringstream os;
  switch (spec.kind) {
    case DatasetKind::ring:
      os << "ring(" << spec.modes << ", " << fmt(spec.radius) << ", " << fmt(spec.sigma) << ")";
      break;
    case DatasetKind::grid:
      os << "grid(" << spec.modes << ", " << fmt(spec.spacing) << ", " << fmt(spec.sigma) << ")";
      break;
    case DatasetKind::two_gaussian:
      os << "two_gaussian(" << fmt(spec.radius) << ", " << fmt(spec.sigma) << ")";
      break;
    case DatasetKind::gaussian_point:
      os << "gaussian(" << fmt(spec.cx) << ", " << fmt(spec.cy) << ", " << fmt(spec.sigma)
         << ")";
      break;
    case DatasetKind::custom_mixture:
      throw ConfigError("custom mixtures have no config form");
  }
  return os.str();
}

std::string schedule_value(const ScheduleSpec& s) {
  switch (s.kind) {
    case ScheduleSpec::Kind::geometric:
      return "geometric(" + fmt(s.a) + ", " + fmt(s.b) + ")";
    case ScheduleSpec::Kind::constant:
      return "constant(" + fmt(s.a) + ")";
    case ScheduleSpec::Kind::reverse:
      return "reverse(" + fmt(s.a) + ", " + fmt(s.b) + ")";
  }
  return "?";
}

std::string delta_value_str(const DeltaSpec& d) {
  return d.mode == DeltaMode::constant ? "constant(" + fmt(d.value) + ")" : "computed";
}

const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::cts: return "cts";
    case Scheme::nts: return "nts";
    case Scheme::nats: return "nats";
  }
  return "?";
}

const char* loss_name(GanLoss l) {
  switch (l) {
    case GanLoss::original: return "original";
    case GanLoss::lsgan: return "lsgan";
    case GanLoss::wgan: return "wgan";
    case GanLoss::hinge: return "hinge";
  }
  return "?";
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  Parser p;
  std::stringstream stream(text);
  std::string raw;
  int lineno = 0;
  while (std::getline(stream, raw)) {
    ++lineno;
    std::string line = raw;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::string stripped = trim(line);
    if (stripped.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'section.key = value'",
                        lineno);
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || key.find('.') == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                        "' is not of the form section.key", lineno);
    }
    if (value.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' has no value",
                        lineno);
    }
    auto [it, inserted] = p.entries.emplace(
        key, RawEntry{value, lineno, static_cast<int>(line.find(value, eq) + 1), false});
    if (!inserted) {
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key +
                        "' (first defined on line " + std::to_string(it->second.line) + ")",
                        lineno);
    }
  }

  RunConfig out;

  const std::string* kind_str = p.get("experiment.kind");
  if (!kind_str) throw ConfigError("missing required key experiment.kind");
  static const std::vector<std::pair<std::string, ExperimentKind>> kKinds = {
      {"flow", ExperimentKind::flow},
      {"train-cfg", ExperimentKind::train_cfg},
      {"train-gan", ExperimentKind::train_gan},
      {"sample-langevin", ExperimentKind::sample_langevin},
      {"eval", ExperimentKind::eval},
      {"dump-field", ExperimentKind::dump_field},
      {"grad-check", ExperimentKind::grad_check},
  };
  bool kind_ok = false;
  for (const auto& [name, kind] : kKinds) {
    if (*kind_str == name) {
      out.kind = kind;
      kind_ok = true;
    }
  }
  if (!kind_ok) p.fail("experiment.kind", "unknown experiment kind '" + *kind_str + "'");

  // Engine sections must match the experiment kind.
  static const std::map<ExperimentKind, std::string> kEngineSection = {
      {ExperimentKind::flow, "flow"},          {ExperimentKind::train_cfg, "cfg"},
      {ExperimentKind::train_gan, "gan"},      {ExperimentKind::sample_langevin, "chain"},
      {ExperimentKind::eval, "eval"},          {ExperimentKind::dump_field, "field"},
      {ExperimentKind::grad_check, "grad"},
  };
  static const std::vector<std::string> kEngineSections = {"flow", "cfg", "gan",
                                                           "chain", "eval", "field", "grad"};
  const std::string& my_section = kEngineSection.at(out.kind);
  bool dataset_allowed = out.kind == ExperimentKind::train_cfg ||
                         out.kind == ExperimentKind::train_gan ||
                         out.kind == ExperimentKind::sample_langevin ||
                         out.kind == ExperimentKind::eval;
  bool model_allowed = out.kind == ExperimentKind::train_cfg ||
                       out.kind == ExperimentKind::train_gan ||
                       out.kind == ExperimentKind::dump_field;
  for (const auto& [key, entry] : p.entries) {
    std::string section = key.substr(0, key.find('.'));
    bool is_engine =
        std::find(kEngineSections.begin(), kEngineSections.end(), section) != kEngineSections.end();
    if (is_engine && section != my_section) {
      throw ConfigError("line " + std::to_string(entry.line) + ": section '" + section +
                        "' does not belong to experiment kind '" + kind_name(out.kind) + "'",
                        entry.line);
    }
    if (section == "dataset" && !dataset_allowed) {
      throw ConfigError("line " + std::to_string(entry.line) +
                        ": dataset section is not used by experiment kind '" +
                        kind_name(out.kind) + "'", entry.line);
    }
    if (section == "model" && !model_allowed) {
      throw ConfigError("line " + std::to_string(entry.line) +
                        ": model section is not used by experiment kind '" +
                        kind_name(out.kind) + "'", entry.line);
    }
  }

  // dataset
  if (p.has("dataset.spec")) {
    p.mixture_into("dataset.spec", out.dataset);
    out.has_dataset = true;
  }
  p.count_into("dataset.samples", out.dataset.samples);
  if (dataset_allowed && !out.has_dataset) {
    throw ConfigError("experiment kind '" + kind_name(out.kind) + "' requires dataset.spec");
  }

  // model
  p.count_into("model.latent_dim", out.model.latent_dim);
  p.count_into("model.gen_hidden", out.model.gen_hidden);
  p.count_into("model.gen_depth", out.model.gen_depth);
  p.count_into("model.disc_hidden", out.model.disc_hidden);
  p.count_into("model.disc_depth", out.model.disc_depth);
  {
    std::size_t idx = out.model.optimizer == OptimizerKind::sgd ? 0 : 1;
    p.choice_into("model.optimizer", {"sgd", "adam"}, idx);
    out.model.optimizer = idx == 0 ? OptimizerKind::sgd : OptimizerKind::adam;
  }
  p.number_into("model.gen_lr", out.model.gen_lr);
  p.number_into("model.disc_lr", out.model.disc_lr);
  p.number_into("model.adam_beta1", out.model.adam_beta1);
  p.number_into("model.adam_beta2", out.model.adam_beta2);

  // gan
  {
    std::size_t idx = static_cast<std::size_t>(out.gan.scheme);
    p.choice_into("gan.scheme", {"cts", "nts", "nats"}, idx);
    out.gan.scheme = static_cast<Scheme>(idx);
    idx = static_cast<std::size_t>(out.gan.loss);
    p.choice_into("gan.loss", {"original", "lsgan", "wgan", "hinge"}, idx);
    out.gan.loss = static_cast<GanLoss>(idx);
  }
  p.count_into("gan.outer", out.gan.outer);
  p.count_into("gan.disc_steps", out.gan.disc_steps);
  p.count_into("gan.n_d", out.gan.n_d);
  p.count_into("gan.batch", out.gan.batch);
  p.schedule_into("gan.schedule", out.gan.schedule);
  p.number_into("gan.wgan_clip", out.gan.wgan_clip);

  // cfg
  p.count_into("cfg.steps", out.cfg.steps);
  p.count_into("cfg.disc_updates", out.cfg.disc_updates);
  p.count_into("cfg.examples", out.cfg.examples);
  p.count_into("cfg.batch", out.cfg.batch);
  p.number_into("cfg.eta_flow", out.cfg.eta_flow);
  p.schedule_into("cfg.schedule", out.cfg.schedule);
  p.delta_into("cfg.delta", out.cfg.delta);
  p.number_into("cfg.s_scale", out.cfg.s_scale);
  {
    std::size_t idx = out.cfg.phi0 == Phi0::identity ? 0 : 1;
    p.choice_into("cfg.phi0", {"identity", "sign"}, idx);
    out.cfg.phi0 = idx == 0 ? Phi0::identity : Phi0::sign;
  }
  p.count_into("cfg.epochs", out.cfg.epochs);
  p.count_into("cfg.distill_passes", out.cfg.distill_passes);

  // flow
  p.mixture_into("flow.target", out.flow.target);
  p.mixture_into("flow.start", out.flow.start);
  p.schedule_into("flow.schedule", out.flow.schedule);
  p.count_into("flow.steps", out.flow.steps);
  p.number_into("flow.eta", out.flow.eta);
  p.count_into("flow.particles", out.flow.particles);
  p.delta_into("flow.delta", out.flow.delta);
  p.number_into("flow.s_scale", out.flow.s_scale);
  {
    std::size_t idx = out.flow.phi0 == Phi0::identity ? 0 : 1;
    p.choice_into("flow.phi0", {"identity", "sign"}, idx);
    out.flow.phi0 = idx == 0 ? Phi0::identity : Phi0::sign;
    idx = out.flow.refit == RefitCadence::per_step ? 0 : 1;
    p.choice_into("flow.refit", {"per_step", "per_epoch"}, idx);
    out.flow.refit = idx == 0 ? RefitCadence::per_step : RefitCadence::per_epoch;
  }
  p.count_into("flow.epochs", out.flow.epochs);
  if (p.has("flow.start") && out.flow.start.kind != DatasetKind::gaussian_point) {
    p.fail("flow.start", "start must be a single gaussian(mx, my, sigma)");
  }

  // chain
  {
    std::size_t idx = out.chain.annealed ? 1 : 0;
    p.choice_into("chain.kind", {"plain", "annealed"}, idx);
    out.chain.annealed = idx == 1;
  }
  p.count_into("chain.steps", out.chain.steps);
  p.number_into("chain.epsilon", out.chain.epsilon);
  p.count_into("chain.chains", out.chain.chains);
  p.count_into("chain.levels", out.chain.levels);
  p.number_into("chain.sigma_first", out.chain.sigma_first);
  if (const std::string* v = p.get("chain.gamma")) {
    if (*v == "auto") {
      out.chain.gamma = 0.0;
    } else {
      out.chain.gamma = p.number("chain.gamma", *v);
    }
  }
  p.mixture_into("chain.prior", out.chain.prior);
  p.number_into("chain.bound", out.chain.bound);
  if (p.has("chain.prior") && out.chain.prior.kind != DatasetKind::gaussian_point) {
    p.fail("chain.prior", "prior must be a single gaussian(mx, my, sigma)");
  }

  // field
  p.mixture_into("field.target", out.field.target);
  p.mixture_into("field.start", out.field.start);
  {
    std::size_t idx = out.field.analytic ? 1 : 0;
    p.choice_into("field.disc", {"trained", "analytic"}, idx);
    out.field.analytic = idx == 1;
  }
  p.count_into("field.train_steps", out.field.train_steps);
  p.count_into("field.train_batch", out.field.train_batch);
  p.count_into("field.nx", out.field.grid.nx);
  p.count_into("field.ny", out.field.grid.ny);
  p.number_into("field.xmin", out.field.grid.xmin);
  p.number_into("field.xmax", out.field.grid.xmax);
  p.number_into("field.ymin", out.field.grid.ymin);
  p.number_into("field.ymax", out.field.grid.ymax);

  // grad
  p.count_into("grad.nets", out.grad.nets);
  p.number_into("grad.tolerance", out.grad.tolerance);
  p.count_into("grad.batch", out.grad.batch);

  // eval
  if (const std::string* v = p.get("eval.samples_file")) out.eval.samples_file = *v;
  if (out.kind == ExperimentKind::eval && out.eval.samples_file.empty()) {
    throw ConfigError("experiment kind 'eval' requires eval.samples_file");
  }

  // run
  p.seeds_into("run.seeds", out.run.seeds);
  p.count_into("run.eval_every", out.run.eval_every);
  p.count_into("run.eval_samples", out.run.eval_samples);
  p.number_into("run.quality_sigmas", out.run.quality_sigmas);

  for (const auto& [key, entry] : p.entries) {
    if (!entry.used) {
      throw ConfigError("line " + std::to_string(entry.line) + ": unknown key '" + key + "'",
                        entry.line);
    }
  }

  // Semantic checks that do not need an engine run.
  if (out.run.eval_every < 1) throw ConfigError("run.eval_every must be >= 1");
  if (out.kind == ExperimentKind::train_gan && out.gan.scheme == Scheme::nats) {
    out.gan.schedule.materialize(out.gan.n_d);  // throws on bad endpoints
  }
  return out;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string RunConfig::emit() const {
  std::ostringstream os;
  os << "experiment.kind = " << kind_name(kind) << "\n";
  if (has_dataset) {
    os << "dataset.spec = " << dataset_value(dataset) << "\n";
    os << "dataset.samples = " << dataset.samples << "\n";
  }
  bool model_relevant = kind == ExperimentKind::train_cfg || kind == ExperimentKind::train_gan ||
                        kind == ExperimentKind::dump_field;
  if (model_relevant) {
    os << "model.latent_dim = " << model.latent_dim << "\n";
    os << "model.gen_hidden = " << model.gen_hidden << "\n";
    os << "model.gen_depth = " << model.gen_depth << "\n";
    os << "model.disc_hidden = " << model.disc_hidden << "\n";
    os << "model.disc_depth = " << model.disc_depth << "\n";
    os << "model.optimizer = " << (model.optimizer == OptimizerKind::sgd ? "sgd" : "adam") << "\n";
    os << "model.gen_lr = " << fmt(model.gen_lr) << "\n";
    os << "model.disc_lr = " << fmt(model.disc_lr) << "\n";
    os << "model.adam_beta1 = " << fmt(model.adam_beta1) << "\n";
    os << "model.adam_beta2 = " << fmt(model.adam_beta2) << "\n";
  }
  switch (kind) {
    case ExperimentKind::train_gan:
      os << "gan.scheme = " << scheme_name(gan.scheme) << "\n";
      os << "gan.loss = " << loss_name(gan.loss) << "\n";
      os << "gan.outer = " << gan.outer << "\n";
      os << "gan.disc_steps = " << gan.disc_steps << "\n";
      os << "gan.n_d = " << gan.n_d << "\n";
      os << "gan.batch = " << gan.batch << "\n";
      os << "gan.schedule = " << schedule_value(gan.schedule) << "\n";
      os << "gan.wgan_clip = " << fmt(gan.wgan_clip) << "\n";
      break;
    case ExperimentKind::train_cfg:
      os << "cfg.steps = " << cfg.steps << "\n";
      os << "cfg.disc_updates = " << cfg.disc_updates << "\n";
      os << "cfg.examples = " << cfg.examples << "\n";
      os << "cfg.batch = " << cfg.batch << "\n";
      os << "cfg.eta_flow = " << fmt(cfg.eta_flow) << "\n";
      os << "cfg.schedule = " << schedule_value(cfg.schedule) << "\n";
      os << "cfg.delta = " << delta_value_str(cfg.delta) << "\n";
      os << "cfg.s_scale = " << fmt(cfg.s_scale) << "\n";
      os << "cfg.phi0 = " << (cfg.phi0 == Phi0::identity ? "identity" : "sign") << "\n";
      os << "cfg.epochs = " << cfg.epochs << "\n";
      os << "cfg.distill_passes = " << cfg.distill_passes << "\n";
      break;
    case ExperimentKind::flow:
      os << "flow.target = " << dataset_value(flow.target) << "\n";
      os << "flow.start = " << dataset_value(flow.start) << "\n";
      os << "flow.schedule = " << schedule_value(flow.schedule) << "\n";
      os << "flow.steps = " << flow.steps << "\n";
      os << "flow.eta = " << fmt(flow.eta) << "\n";
      os << "flow.particles = " << flow.particles << "\n";
      os << "flow.delta = " << delta_value_str(flow.delta) << "\n";
      os << "flow.s_scale = " << fmt(flow.s_scale) << "\n";
      os << "flow.phi0 = " << (flow.phi0 == Phi0::identity ? "identity" : "sign") << "\n";
      os << "flow.refit = " << (flow.refit == RefitCadence::per_step ? "per_step" : "per_epoch")
         << "\n";
      os << "flow.epochs = " << flow.epochs << "\n";
      break;
    case ExperimentKind::sample_langevin:
      os << "chain.kind = " << (chain.annealed ? "annealed" : "plain") << "\n";
      os << "chain.steps = " << chain.steps << "\n";
      os << "chain.epsilon = " << fmt(chain.epsilon) << "\n";
      os << "chain.chains = " << chain.chains << "\n";
      os << "chain.levels = " << chain.levels << "\n";
      os << "chain.sigma_first = " << fmt(chain.sigma_first) << "\n";
      os << "chain.gamma = " << (chain.gamma == 0.0 ? std::string("auto") : fmt(chain.gamma))
         << "\n";
      os << "chain.prior = " << dataset_value(chain.prior) << "\n";
      os << "chain.bound = " << fmt(chain.bound) << "\n";
      break;
    case ExperimentKind::dump_field:
      os << "field.target = " << dataset_value(field.target) << "\n";
      os << "field.start = " << dataset_value(field.start) << "\n";
      os << "field.disc = " << (field.analytic ? "analytic" : "trained") << "\n";
      os << "field.train_steps = " << field.train_steps << "\n";
      os << "field.train_batch = " << field.train_batch << "\n";
      os << "field.nx = " << field.grid.nx << "\n";
      os << "field.ny = " << field.grid.ny << "\n";
      os << "field.xmin = " << fmt(field.grid.xmin) << "\n";
      os << "field.xmax = " << fmt(field.grid.xmax) << "\n";
      os << "field.ymin = " << fmt(field.grid.ymin) << "\n";
      os << "field.ymax = " << fmt(field.grid.ymax) << "\n";
      break;
    case ExperimentKind::grad_check:
      os << "grad.nets = " << grad.nets << "\n";
      os << "grad.tolerance = " << fmt(grad.tolerance) << "\n";
      os << "grad.batch = " << grad.batch << "\n";
      break;
    case ExperimentKind::eval:
      os << "eval.samples_file = " << eval.samples_file << "\n";
      break;
  }
  os << "run.seeds = ";
  for (std::size_t i = 0; i < run.seeds.size(); ++i) {
    if (i) os << ",";
    os << run.seeds[i];
  }
  os << "\n";
  os << "run.eval_every = " << run.eval_every << "\n";
  os << "run.eval_samples = " << run.eval_samples << "\n";
  os << "run.quality_sigmas = " << fmt(run.quality_sigmas) << "\n";
  return os.str();
}

}  // namespace cfgflow
