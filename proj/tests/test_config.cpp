#include <doctest.h>

#include <string>

#include "cfgflow/config.hpp"
#include "cfgflow/errors.hpp"

using namespace cfgflow;

TEST_CASE("parse_config: minimal flow config fills defaults") {
  RunConfig cfg = parse_config("experiment.kind = flow\n");
  CHECK(cfg.kind == ExperimentKind::flow);
  CHECK(cfg.flow.steps == 15);
  CHECK(cfg.flow.particles == 2000);
  CHECK(cfg.flow.target.kind == DatasetKind::gaussian_point);
  CHECK(cfg.flow.target.cx == 1.0);
  CHECK(cfg.run.seeds == std::vector<std::uint64_t>{1});
  CHECK(cfg.run.eval_every == 50);
}

TEST_CASE("parse_config: nats schedule materializes to the nested length") {
  RunConfig cfg = parse_config(
      "experiment.kind = train-gan\n"
      "dataset.spec = ring(8, 2, 0.05)\n"
      "gan.scheme = nats\n"
      "gan.n_d = 4\n"
      "gan.schedule = geometric(1, 0.01)\n");
  WeightSchedule s = cfg.gan.schedule.materialize(cfg.gan.n_d);
  WeightSchedule oracle = geometric_schedule(4, 1.0, 0.01);
  REQUIRE(s.length() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(s.weights[i] == oracle.weights[i]);
}

TEST_CASE("parse_config: duplicate keys name both lines") {
  try {
    parse_config(
        "experiment.kind = flow\n"
        "flow.steps = 10\n"
        "flow.eta = 0.1\n"
        "flow.steps = 12\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("duplicate key 'flow.steps'") != std::string::npos);
    CHECK(msg.find("line 4") != std::string::npos);
    CHECK(msg.find("line 2") != std::string::npos);
  }
}

TEST_CASE("parse_config: unknown keys are rejected with the line number") {
  try {
    parse_config(
        "experiment.kind = flow\n"
        "flow.stepz = 10\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("unknown key 'flow.stepz'") != std::string::npos);
    CHECK(e.line() == 2);
  }
}

TEST_CASE("parse_config: engine sections must match the experiment kind") {
  try {
    parse_config(
        "experiment.kind = train-gan\n"
        "dataset.spec = ring(8, 2, 0.05)\n"
        "cfg.steps = 15\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    std::string msg = e.what();
    CHECK(msg.find("'cfg'") != std::string::npos);
    CHECK(msg.find("train-gan") != std::string::npos);
  }
}

TEST_CASE("parse_config: malformed values carry the key and line") {
  CHECK_THROWS_AS(parse_config("experiment.kind = flow\nflow.eta = fast\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.kind = flow\nflow.schedule = geometric(1)\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.kind = flow\nflow.delta = constant\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.kind = warp\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("flow.steps = 3\n"), ConfigError);  // kind missing
  CHECK_THROWS_AS(parse_config("experiment.kind = train-gan\n"), ConfigError);  // no dataset
}

TEST_CASE("parse_config: comments, blanks, and inline comments") {
  RunConfig cfg = parse_config(
      "# a flow experiment\n"
      "\n"
      "experiment.kind = flow\n"
      "flow.steps = 7   # sweep length\n"
      "run.seeds = 4,5,6\n");
  CHECK(cfg.flow.steps == 7);
  CHECK(cfg.run.seeds == std::vector<std::uint64_t>{4, 5, 6});
}

TEST_CASE("config round-trip: parse(emit(cfg)) == cfg for every kind") {
  std::vector<std::string> texts = {
      "experiment.kind = flow\n"
      "flow.target = gaussian(1, 0, 1)\n"
      "flow.start = gaussian(0, 0, 1)\n"
      "flow.schedule = reverse(1, 0.01)\n"
      "flow.steps = 15\n"
      "flow.eta = 0.5\n"
      "flow.phi0 = sign\n"
      "flow.delta = computed\n"
      "flow.refit = per_epoch\n"
      "run.seeds = 1,2,3\n",

      "experiment.kind = train-gan\n"
      "dataset.spec = ring(8, 2, 0.05)\n"
      "dataset.samples = 4096\n"
      "model.disc_hidden = 32\n"
      "model.optimizer = adam\n"
      "gan.scheme = nats\n"
      "gan.loss = hinge\n"
      "gan.n_d = 4\n"
      "gan.schedule = geometric(1, 0.01)\n"
      "gan.outer = 120\n",

      "experiment.kind = train-cfg\n"
      "dataset.spec = two_gaussian(1, 1)\n"
      "cfg.steps = 15\n"
      "cfg.delta = constant(1)\n"
      "cfg.eta_flow = 0.25\n"
      "cfg.epochs = 10\n",

      "experiment.kind = sample-langevin\n"
      "dataset.spec = two_gaussian(4, 0.1)\n"
      "chain.kind = annealed\n"
      "chain.epsilon = 5e-06\n"
      "chain.gamma = auto\n"
      "chain.prior = gaussian(8, 0, 1)\n",

      "experiment.kind = dump-field\n"
      "field.target = gaussian(1, 0, 1)\n"
      "field.start = gaussian(0, 0, 1)\n"
      "field.disc = trained\n"
      "field.train_steps = 50\n"
      "model.disc_lr = 0.001\n",

      "experiment.kind = grad-check\n"
      "grad.nets = 10\n"
      "grad.tolerance = 0.0001\n",

      "experiment.kind = eval\n"
      "dataset.spec = grid(5, 1, 0.05)\n"
      "eval.samples_file = out/samples.samples\n",
  };
  for (const auto& text : texts) {
    RunConfig cfg = parse_config(text);
    RunConfig again = parse_config(cfg.emit());
    CHECK(again == cfg);
    CHECK(again.emit() == cfg.emit());
  }
}

TEST_CASE("parse_config: chain prior and flow start must be single gaussians") {
  CHECK_THROWS_AS(parse_config("experiment.kind = sample-langevin\n"
                               "dataset.spec = ring(8, 2, 0.05)\n"
                               "chain.prior = ring(8, 2, 0.05)\n"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("experiment.kind = flow\n"
                               "flow.start = ring(8, 2, 0.05)\n"),
                  ConfigError);
}

TEST_CASE("dataset section is rejected where it is meaningless") {
  CHECK_THROWS_AS(parse_config("experiment.kind = grad-check\n"
                               "dataset.spec = ring(8, 2, 0.05)\n"),
                  ConfigError);
}
