#include "oracles.hpp"
#include "test_util.hpp"

#include "mdcr/optimizer.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace mdcr;

namespace {

PairedDataset separable_synthetic() {
  SyntheticSpec spec;
  spec.classes = 4;
  spec.per_class = 25;
  spec.image_dim = 12;
  spec.text_dim = 9;
  spec.separation = 10.0;
  spec.noise = 0.2;
  spec.seed = 7;
  return make_synthetic(spec);
}

// step size / thresholds sized for the separation-10 synthetic scale
TrainConfig working_config() {
  TrainConfig cfg;
  cfg.hp = Hyperparams{0.5, 0.5, 0.5};
  cfg.mu = 1e-4;
  cfg.epsilon = 1e-3;
  cfg.outer_tolerance = 1e-4;
  return cfg;
}

bool non_increasing(const std::vector<TraceEntry>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i)
    if (trace[i].objective > trace[i - 1].objective) return false;
  return true;
}

}  // namespace

TEST_CASE("step_block is a no-op at a zero-gradient point", "[optimizer]") {
  std::mt19937_64 gen(3);
  const auto inst = testutil::random_instance(5, 3, 2, 2, gen, false);
  // lambda = 1 and eta1 = 0: every dV term carries V or W, so dV(0, 0) = 0
  const TaskObjective objective(Task::I2T, inst.x, inst.t, inst.s,
                                Hyperparams{1.0, 0.0, 0.5});
  const Matrix v0 = Matrix::Zero(2, 3);
  const Matrix w0 = Matrix::Zero(2, 2);
  const StepResult step = step_block(v0, w0, Block::V, objective, 0.05);
  REQUIRE(step.updated == v0);
  REQUIRE(step.new_objective == objective.value(v0, w0));
}

TEST_CASE("step_block with mu=0 changes nothing", "[optimizer]") {
  std::mt19937_64 gen(5);
  const auto inst = testutil::random_instance(5, 3, 2, 2, gen);
  const TaskObjective objective(Task::T2I, inst.x, inst.t, inst.s, inst.hp);
  const StepResult step = step_block(inst.v, inst.w, Block::V, objective, 0.0);
  REQUIRE(step.updated == inst.v);
  REQUIRE(step.new_objective == objective.value(inst.v, inst.w));
}

TEST_CASE("a small step along the negative gradient descends", "[optimizer]") {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    const auto inst = testutil::random_instance(6, 4, 3, 2, gen);
    for (Task task : {Task::I2T, Task::T2I, Task::Unified}) {
      const TaskObjective objective(task, inst.x, inst.t, inst.s, inst.hp);
      const double before = objective.value(inst.v, inst.w);
      const StepResult sv = step_block(inst.v, inst.w, Block::V, objective, 1e-6);
      const StepResult sw = step_block(inst.w, inst.v, Block::W, objective, 1e-6);
      REQUIRE(sv.new_objective <= before);
      REQUIRE(sw.new_objective <= before);
    }
  }
}

TEST_CASE("block descent approaches the closed-form block minimizer",
          "[optimizer]") {
  // with the other block fixed, each subproblem is ridge regression with an
  // explicit solution; repeated descent steps must converge to it
  std::mt19937_64 gen(31);
  const auto inst = testutil::random_instance(8, 4, 3, 2, gen);
  const Matrix gxx = inst.x.transpose() * inst.x;
  const Matrix gtt = inst.t.transpose() * inst.t;
  const double lambda = inst.hp.lambda;

  SECTION("V block of the I2T objective") {
    const TaskObjective objective(Task::I2T, inst.x, inst.t, inst.s, inst.hp);
    // V* solves V (X'X + eta1 I) = lambda W T'X + (1-lambda) S'X
    const Matrix rhs = lambda * inst.w * inst.t.transpose() * inst.x +
                       (1.0 - lambda) * inst.s.transpose() * inst.x;
    const Matrix system =
        gxx + inst.hp.eta1 * Matrix::Identity(gxx.rows(), gxx.cols());
    const Matrix v_star = system.ldlt().solve(rhs.transpose()).transpose();
    Matrix v = inst.v;
    for (int iter = 0; iter < 5000; ++iter)
      v = step_block(v, inst.w, Block::V, objective, 0.01).updated;
    REQUIRE((v - v_star).norm() <= 1e-6 * std::max(1.0, v_star.norm()));
  }
  SECTION("W block of the T2I objective") {
    const TaskObjective objective(Task::T2I, inst.x, inst.t, inst.s, inst.hp);
    const Matrix rhs = lambda * inst.v * inst.x.transpose() * inst.t +
                       (1.0 - lambda) * inst.s.transpose() * inst.t;
    const Matrix system =
        gtt + inst.hp.eta2 * Matrix::Identity(gtt.rows(), gtt.cols());
    const Matrix w_star = system.ldlt().solve(rhs.transpose()).transpose();
    Matrix w = inst.w;
    for (int iter = 0; iter < 5000; ++iter)
      w = step_block(w, inst.v, Block::W, objective, 0.01).updated;
    REQUIRE((w - w_star).norm() <= 1e-6 * std::max(1.0, w_star.norm()));
  }
}

TEST_CASE("training trace is non-increasing and converges with the default "
          "step size", "[optimizer]") {
  // mu = 0.02 overshoots on this data scale: the optimizer must reject the
  // bad steps, keep the trace monotone, and still terminate as Converged
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg;
  cfg.hp = Hyperparams{0.5, 0.5, 0.5};
  cfg.mu = 0.02;
  cfg.epsilon = 1e-4;
  const TrainReport report = train(data, Task::I2T, cfg);
  REQUIRE(report.stop_reason == StopReason::Converged);
  REQUIRE(non_increasing(report.trace));
  REQUIRE(report.final_objective <= report.initial_objective);
  REQUIRE(report.final_pair.V.allFinite());
  REQUIRE(report.final_pair.W.allFinite());
}

TEST_CASE("training makes real progress with a scale-appropriate step size",
          "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  for (Task task : {Task::I2T, Task::T2I, Task::Unified}) {
    const TrainReport report = train(data, task, working_config());
    INFO("task " << to_string(task));
    REQUIRE(report.stop_reason == StopReason::Converged);
    REQUIRE(report.outer_iterations <= 100);
    REQUIRE(non_increasing(report.trace));
    REQUIRE(report.trace.size() > 50);
    REQUIRE(report.final_objective < 0.02 * report.initial_objective);
  }
}

TEST_CASE("inner loops respect max_inner_iters", "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg = working_config();
  cfg.epsilon = 1e-12;  // improvement threshold effectively never fires
  cfg.max_inner_iters = 3;
  cfg.max_outer_iters = 2;
  const TrainReport report = train(data, Task::I2T, cfg);
  int current_outer = 0;
  Block current_block = Block::V;
  int run = 0;
  for (const auto& entry : report.trace) {
    if (entry.outer != current_outer || entry.block != current_block) {
      current_outer = entry.outer;
      current_block = entry.block;
      run = 0;
    }
    ++run;
    REQUIRE(entry.inner <= cfg.max_inner_iters);
    REQUIRE(run <= cfg.max_inner_iters);
  }
  REQUIRE(report.stop_reason == StopReason::MaxIters);
}

TEST_CASE("invalid configs are rejected up front", "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg = working_config();
  SECTION("zero outer iterations") {
    cfg.max_outer_iters = 0;
    REQUIRE_THROWS_AS(train(data, Task::I2T, cfg), ValidationError);
  }
  SECTION("negative step size") {
    cfg.mu = -1.0;
    REQUIRE_THROWS_AS(train(data, Task::I2T, cfg), ValidationError);
  }
  SECTION("zero epsilon") {
    cfg.epsilon = 0.0;
    REQUIRE_THROWS_AS(train(data, Task::I2T, cfg), ValidationError);
  }
}

TEST_CASE("identical runs produce bit-identical reports", "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg = working_config();
  cfg.init = InitPolicy::SeededGaussian;
  cfg.init_seed = 11;
  const TrainReport a = train(data, Task::T2I, cfg);
  const TrainReport b = train(data, Task::T2I, cfg);
  REQUIRE(a.final_pair.V == b.final_pair.V);
  REQUIRE(a.final_pair.W == b.final_pair.W);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i)
    REQUIRE(a.trace[i].objective == b.trace[i].objective);

  cfg.init_seed = 12;
  const TrainReport c = train(data, Task::T2I, cfg);
  REQUIRE(a.final_pair.V != c.final_pair.V);
}

TEST_CASE("a hopeless step size stops as StepRejected with finite output",
          "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg = working_config();
  cfg.mu = 1e12;
  cfg.init = InitPolicy::SeededGaussian;  // both blocks have nonzero gradients
  cfg.init_seed = 4;
  const TrainReport report = train(data, Task::I2T, cfg);
  REQUIRE(report.stop_reason == StopReason::StepRejected);
  REQUIRE(report.trace.empty());
  REQUIRE(!report.diagnostics.empty());
  REQUIRE(report.final_pair.V.allFinite());
  REQUIRE(report.final_pair.W.allFinite());
}

TEST_CASE("step halving rescues an oversized step size", "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  TrainConfig cfg = working_config();
  cfg.mu = 0.02;
  cfg.halve_on_reject = true;
  const TrainReport report = train(data, Task::I2T, cfg);
  REQUIRE(non_increasing(report.trace));
  REQUIRE(report.final_objective < 0.05 * report.initial_objective);
}

TEST_CASE("the two tasks yield genuinely different projection pairs",
          "[optimizer]") {
  const PairedDataset data = separable_synthetic();
  const TrainReport i2t = train(data, Task::I2T, working_config());
  const TrainReport t2i = train(data, Task::T2I, working_config());
  REQUIRE(i2t.final_pair.task == Task::I2T);
  REQUIRE(t2i.final_pair.task == Task::T2I);
  REQUIRE((i2t.final_pair.V - t2i.final_pair.V).norm() > 1e-3);
}

TEST_CASE("default configs carry the published settings", "[optimizer]") {
  const TrainConfig wiki_i2t = default_config(Task::I2T, DatasetPreset::Wikipedia);
  REQUIRE(wiki_i2t.hp.lambda == 0.1);
  REQUIRE(wiki_i2t.hp.eta1 == 0.5);
  REQUIRE(wiki_i2t.hp.eta2 == 0.5);
  REQUIRE(wiki_i2t.mu == 0.02);
  REQUIRE(wiki_i2t.epsilon == 1e-4);

  const TrainConfig wiki_t2i = default_config(Task::T2I, DatasetPreset::Wikipedia);
  REQUIRE(wiki_t2i.hp.lambda == 0.5);
  REQUIRE(wiki_t2i.hp.eta1 == 0.5);
  REQUIRE(wiki_t2i.hp.eta2 == 0.5);

  for (Task task : {Task::I2T, Task::T2I, Task::Unified}) {
    const TrainConfig pascal = default_config(task, DatasetPreset::PascalSentence);
    REQUIRE(pascal.hp.lambda == 0.5);
    const TrainConfig inria = default_config(task, DatasetPreset::InriaWebsearch);
    REQUIRE(inria.hp.lambda == 0.5);
  }
  const TrainConfig custom = default_config(Task::I2T, DatasetPreset::Custom);
  REQUIRE(custom.hp.lambda == 0.5);
  REQUIRE(custom.hp.eta1 == 0.5);
  REQUIRE(custom.hp.eta2 == 0.5);
  REQUIRE(custom.mu == 0.02);
  REQUIRE(custom.epsilon == 1e-4);
}
