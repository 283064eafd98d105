// mdcr command-line tool: synthesize data, train projection pairs, run
// cross-modal retrieval, evaluate mAP/PR, check gradients, and reproduce the
// published Wikipedia benchmark numbers.

#include "mdcr/mdcr.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailure = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;

std::string g_config_path;  // set after parsing when --config was used

std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

void write_text_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw mdcr::IoError(path.string() + ": cannot open for writing");
  out << contents;
  out.flush();
  if (!out) throw mdcr::IoError(path.string() + ": write failed");
}

void write_json_file(const fs::path& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

// Every command drops a manifest next to its outputs; re-running the recorded
// argv reproduces the outputs byte for byte.
json base_manifest(const std::string& command,
                   const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "mdcr";
  m["version"] = mdcr::kVersion;
  m["command"] = command;
  m["argv"] = argv;
  m["configFile"] = g_config_path;
  return m;
}

json label_mapping_json(const mdcr::LabelMapping& mapping) {
  json j = json::array();
  for (std::size_t k = 0; k < mapping.originals.size(); ++k)
    j.push_back({{"class", k}, {"original", mapping.originals[k]}});
  return j;
}

std::string trace_csv(const mdcr::TrainReport& report) {
  std::string csv = "outer,block,inner,objective\n";
  for (const auto& entry : report.trace) {
    csv += std::to_string(entry.outer);
    csv += ',';
    csv += mdcr::to_string(entry.block);
    csv += ',';
    csv += std::to_string(entry.inner);
    csv += ',';
    csv += mdcr::detail::format_double(entry.objective);
    csv += '\n';
  }
  return csv;
}

json train_report_json(const mdcr::TrainReport& report) {
  json j;
  j["task"] = mdcr::to_string(report.final_pair.task);
  j["stopReason"] = mdcr::to_string(report.stop_reason);
  j["initialObjective"] = report.initial_objective;
  j["finalObjective"] = report.final_objective;
  j["outerIterations"] = report.outer_iterations;
  j["acceptedSteps"] = report.trace.size();
  j["diagnostics"] = report.diagnostics;
  return j;
}

json config_json(const mdcr::TrainConfig& cfg) {
  json j;
  j["lambda"] = cfg.hp.lambda;
  j["eta1"] = cfg.hp.eta1;
  j["eta2"] = cfg.hp.eta2;
  j["mu"] = cfg.mu;
  j["epsilon"] = cfg.epsilon;
  j["maxOuterIters"] = cfg.max_outer_iters;
  j["maxInnerIters"] = cfg.max_inner_iters;
  j["outerTolerance"] = cfg.outer_tolerance;
  j["init"] = cfg.init == mdcr::InitPolicy::Zeros ? "zeros" : "gaussian";
  j["initScale"] = cfg.init_scale;
  j["initSeed"] = cfg.init_seed;
  j["halveOnReject"] = cfg.halve_on_reject;
  return j;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string task;
  std::string images, texts, labels;
  std::string preset = "custom";
  std::string out;
  std::string init = "zeros";
  double lambda = 0.5, eta1 = 0.5, eta2 = 0.5, mu = 0.02, epsilon = 1e-4;
  double outer_tol = 1e-6, init_scale = 0.01;
  int max_outer = 100, max_inner = 500;
  std::uint64_t seed = 0;
  bool zscore = false;
  bool halve_on_reject = false;
};

struct TrainOptions {
  TrainArgs args;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* eta1_opt = nullptr;
  CLI::Option* eta2_opt = nullptr;
  CLI::Option* mu_opt = nullptr;
  CLI::Option* epsilon_opt = nullptr;
};

mdcr::TrainConfig resolve_config(const TrainOptions& opts, mdcr::Task task,
                                 json* overrides) {
  const auto preset = mdcr::preset_from_string(opts.args.preset);
  mdcr::TrainConfig cfg = mdcr::default_config(task, preset);
  const auto apply = [&](CLI::Option* opt, const char* name, double value,
                         double& slot) {
    if (opt == nullptr || opt->count() == 0) return;
    if (preset != mdcr::DatasetPreset::Custom && value != slot) {
      std::cerr << "note: --" << name << "=" << value
                << " overrides the " << opts.args.preset << " preset value "
                << slot << "\n";
      (*overrides)[name] = {{"preset", slot}, {"flag", value}};
    }
    slot = value;
  };
  apply(opts.lambda_opt, "lambda", opts.args.lambda, cfg.hp.lambda);
  apply(opts.eta1_opt, "eta1", opts.args.eta1, cfg.hp.eta1);
  apply(opts.eta2_opt, "eta2", opts.args.eta2, cfg.hp.eta2);
  apply(opts.mu_opt, "mu", opts.args.mu, cfg.mu);
  apply(opts.epsilon_opt, "epsilon", opts.args.epsilon, cfg.epsilon);
  cfg.max_outer_iters = opts.args.max_outer;
  cfg.max_inner_iters = opts.args.max_inner;
  cfg.outer_tolerance = opts.args.outer_tol;
  cfg.halve_on_reject = opts.args.halve_on_reject;
  if (opts.args.init == "gaussian") {
    cfg.init = mdcr::InitPolicy::SeededGaussian;
    cfg.init_scale = opts.args.init_scale;
    cfg.init_seed = opts.args.seed;
  } else if (opts.args.init != "zeros") {
    throw mdcr::ValidationError("--init must be zeros or gaussian");
  }
  return cfg;
}

int run_train(const TrainOptions& opts, const std::vector<std::string>& argv) {
  const TrainArgs& a = opts.args;
  const mdcr::Task task = mdcr::task_from_string(a.task);
  json overrides = json::object();
  const mdcr::TrainConfig cfg = resolve_config(opts, task, &overrides);
  cfg.validate();

  // validate and load every input before touching the output directory
  mdcr::PairedDataset data;
  data.image_features = mdcr::load_matrix(a.images);
  data.text_features = mdcr::load_matrix(a.texts);
  auto [labels, mapping] = mdcr::remap_labels(mdcr::load_labels(a.labels));
  data.labels = std::move(labels);
  data.class_count = mapping.class_count();
  data.validate();

  std::optional<mdcr::ZscoreStats> image_stats, text_stats;
  if (a.zscore) {
    auto [zi, si] = mdcr::zscore_fit(data.image_features);
    auto [zt, st] = mdcr::zscore_fit(data.text_features);
    data.image_features = std::move(zi);
    data.text_features = std::move(zt);
    image_stats = std::move(si);
    text_stats = std::move(st);
  }

  const mdcr::TrainReport report = mdcr::train(data, task, cfg);

  mdcr::Model model;
  model.pair = report.final_pair;
  model.hp = cfg.hp;
  model.mu = cfg.mu;
  model.epsilon = cfg.epsilon;
  model.label_map = mapping;
  model.image_stats = image_stats;
  model.text_stats = text_stats;

  const fs::path out(a.out);
  fs::create_directories(out);
  mdcr::save_model(model, (out / "model.mdcr").string());
  write_text_file(out / "trace.csv", trace_csv(report));
  write_json_file(out / "train_report.json", train_report_json(report));

  json manifest = base_manifest("train", argv);
  manifest["task"] = mdcr::to_string(task);
  manifest["preset"] = a.preset;
  manifest["presetOverrides"] = overrides;
  manifest["inputs"] = {{"images", fs::absolute(a.images).string()},
                        {"texts", fs::absolute(a.texts).string()},
                        {"labels", fs::absolute(a.labels).string()}};
  manifest["config"] = config_json(cfg);
  manifest["zscore"] = a.zscore;
  manifest["seed"] = a.seed;
  manifest["labelMapping"] = label_mapping_json(mapping);
  manifest["outputDir"] = fs::absolute(out).string();
  manifest["outputs"] = {"model.mdcr", "trace.csv", "train_report.json"};
  write_json_file(out / "manifest.json", manifest);

  std::cout << "trained " << mdcr::to_string(task) << ": objective "
            << report.initial_objective << " -> " << report.final_objective
            << " in " << report.outer_iterations << " outer iterations ("
            << mdcr::to_string(report.stop_reason) << ", "
            << report.trace.size() << " accepted steps)\n"
            << "model written to " << (out / "model.mdcr").string() << "\n";
  if (report.stop_reason == mdcr::StopReason::Converged &&
      !report.diagnostics.empty() &&
      report.final_objective == report.initial_objective)
    std::cerr << "warning: training made no progress; the step size likely "
                 "overshoots this feature scale (try a smaller --mu or "
                 "--halve-on-reject)\n";
  if (report.stop_reason == mdcr::StopReason::StepRejected) {
    std::cerr << "error: optimization diverged; see trace.csv and "
                 "train_report.json diagnostics (try a smaller --mu or "
                 "--zscore)\n";
    return kExitDivergence;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / query

struct EvalArgs {
  std::string model;
  std::string images, texts, labels;
  std::string direction;
  std::string out;
  int pr_points = 11;
};

struct LoadedEvalData {
  mdcr::Model model;
  mdcr::Matrix images, texts;
  mdcr::LabelVector labels;
  mdcr::Task direction = mdcr::Task::I2T;
};

LoadedEvalData load_eval_data(const EvalArgs& a) {
  LoadedEvalData d;
  d.model = mdcr::load_model(a.model);
  d.direction = mdcr::task_from_string(a.direction);
  mdcr::detail::require(d.direction != mdcr::Task::Unified,
                        "--direction must be i2t or t2i");
  d.images = mdcr::load_matrix(a.images);
  d.texts = mdcr::load_matrix(a.texts);
  const auto raw = mdcr::load_labels(a.labels);
  if (!d.model.label_map.originals.empty()) {
    d.labels = mdcr::apply_label_mapping(raw, d.model.label_map);
  } else {
    d.labels.reserve(raw.size());
    for (long long v : raw) d.labels.push_back(static_cast<int>(v));
  }
  mdcr::detail::require(
      d.images.cols() == d.model.pair.V.cols(),
      "model expects " + std::to_string(d.model.pair.V.cols()) +
          "-dimensional image features, " + a.images + " has " +
          std::to_string(d.images.cols()));
  mdcr::detail::require(
      d.texts.cols() == d.model.pair.W.cols(),
      "model expects " + std::to_string(d.model.pair.W.cols()) +
          "-dimensional text features, " + a.texts + " has " +
          std::to_string(d.texts.cols()));
  mdcr::detail::require(d.images.rows() == d.texts.rows() &&
                            d.labels.size() ==
                                static_cast<std::size_t>(d.images.rows()),
                        "image/text/label counts disagree");
  if (d.model.image_stats) {
    d.images = mdcr::zscore_apply(d.images, *d.model.image_stats);
    d.texts = mdcr::zscore_apply(d.texts, *d.model.text_stats);
  }
  return d;
}

std::vector<mdcr::RankedResult> retrieve(const LoadedEvalData& d) {
  if (d.direction == mdcr::Task::I2T)
    return mdcr::cross_retrieve(d.model.pair, d.images, d.labels, d.texts,
                                d.labels, mdcr::Task::I2T);
  return mdcr::cross_retrieve(d.model.pair, d.texts, d.labels, d.images,
                              d.labels, mdcr::Task::T2I);
}

json per_class_json(const mdcr::EvalReport& report,
                    const mdcr::LabelMapping& mapping) {
  json per_class = json::object();
  for (const auto& [label, value] : report.per_class_map) {
    const std::string key =
        mapping.originals.empty()
            ? std::to_string(label)
            : std::to_string(
                  mapping.originals[static_cast<std::size_t>(label)]);
    per_class[key] = value;
  }
  return per_class;
}

int run_eval(const EvalArgs& a, const std::vector<std::string>& argv) {
  const LoadedEvalData d = load_eval_data(a);
  const auto results = retrieve(d);
  const mdcr::EvalReport report = mdcr::evaluate(results, a.pr_points);

  const fs::path out(a.out);
  fs::create_directories(out);
  json report_json = mdcr::eval_report_json(report);
  report_json["perClassMAP"] = per_class_json(report, d.model.label_map);
  report_json["direction"] = mdcr::to_string(d.direction);
  report_json["modelTask"] = mdcr::to_string(d.model.pair.task);
  report_json["queries"] = results.size();
  write_json_file(out / "eval.json", report_json);
  mdcr::write_pr_csv(report.pr_curve, (out / "pr.csv").string());

  json manifest = base_manifest("eval", argv);
  manifest["inputs"] = {{"model", fs::absolute(a.model).string()},
                        {"images", fs::absolute(a.images).string()},
                        {"texts", fs::absolute(a.texts).string()},
                        {"labels", fs::absolute(a.labels).string()}};
  manifest["direction"] = mdcr::to_string(d.direction);
  manifest["prPoints"] = a.pr_points;
  manifest["outputDir"] = fs::absolute(out).string();
  manifest["outputs"] = {"eval.json", "pr.csv"};
  write_json_file(out / "manifest.json", manifest);

  std::cout << mdcr::to_string(d.direction) << " mAP " << fmt3(report.map)
            << " over " << results.size() << " queries (model task "
            << mdcr::to_string(d.model.pair.task) << ")\n"
            << "report written to " << (out / "eval.json").string() << "\n";
  return kExitOk;
}

int run_query(const EvalArgs& a, const std::vector<std::string>& argv) {
  const LoadedEvalData d = load_eval_data(a);
  const auto results = retrieve(d);

  const fs::path out(a.out);
  fs::create_directories(out);
  std::string lines;
  for (const auto& r : results) {
    json j;
    j["queryIndex"] = r.query_index;
    j["ordering"] = r.ordering;
    j["distances"] = r.distances;
    j["relevance"] = r.relevance;
    lines += j.dump();
    lines += '\n';
  }
  write_text_file(out / "rankings.jsonl", lines);

  json manifest = base_manifest("query", argv);
  manifest["inputs"] = {{"model", fs::absolute(a.model).string()},
                        {"images", fs::absolute(a.images).string()},
                        {"texts", fs::absolute(a.texts).string()},
                        {"labels", fs::absolute(a.labels).string()}};
  manifest["direction"] = mdcr::to_string(d.direction);
  manifest["outputDir"] = fs::absolute(out).string();
  manifest["outputs"] = {"rankings.jsonl"};
  write_json_file(out / "manifest.json", manifest);

  std::cout << "wrote " << results.size() << " rankings to "
            << (out / "rankings.jsonl").string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckArgs {
  int n = 20, p = 7, q = 5, c = 3, points = 20;
  std::uint64_t seed = 1;
  double tolerance = 1e-5;
  double step = 1e-6;
  std::string out;
};

int run_gradcheck(const GradcheckArgs& a,
                  const std::vector<std::string>& argv) {
  mdcr::detail::require(a.n >= 1 && a.p >= 1 && a.q >= 1 && a.c >= 1,
                        "dimensions must be >= 1");
  mdcr::detail::require(a.points >= 1, "--points must be >= 1");
  mdcr::detail::require(a.tolerance > 0 && a.step > 0,
                        "--tolerance and --step must be > 0");
  std::mt19937_64 gen(a.seed);
  const auto uniform = [&]() {
    return (static_cast<double>(gen() >> 11) * 0x1.0p-53) * 2.0 - 1.0;
  };
  // boundary hyperparameters first, random draws after
  const std::vector<mdcr::Hyperparams> sweep = {
      {0.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, {1.0, 0.0, 0.0}, {0.5, 0.5, 0.5}};
  mdcr::GradCheckWorst worst;
  for (int point = 0; point < a.points; ++point) {
    mdcr::Matrix x(a.n, a.p), t(a.n, a.q), v(a.c, a.p), w(a.c, a.q);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform();
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = uniform();
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = uniform();
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = uniform();
    mdcr::LabelVector labels(static_cast<std::size_t>(a.n));
    for (auto& label : labels)
      label = static_cast<int>(gen() % static_cast<std::uint64_t>(a.c));
    const mdcr::Matrix s = mdcr::build_semantic_matrix(labels, a.c);
    mdcr::Hyperparams hp;
    if (point < static_cast<int>(sweep.size())) {
      hp = sweep[static_cast<std::size_t>(point)];
    } else {
      hp.lambda = (uniform() + 1.0) / 2.0;
      hp.eta1 = (uniform() + 1.0) / 2.0;
      hp.eta2 = (uniform() + 1.0) / 2.0;
    }
    for (mdcr::Task task :
         {mdcr::Task::I2T, mdcr::Task::T2I, mdcr::Task::Unified}) {
      const mdcr::TaskObjective objective(task, x, t, s, hp);
      mdcr::gradcheck_compare(objective, v, w, a.step, worst);
    }
  }
  const bool pass = worst.rel_error <= a.tolerance;
  std::cout << "gradcheck: " << a.points << " points, dims n=" << a.n
            << " p=" << a.p << " q=" << a.q << " c=" << a.c << ", step "
            << a.step << "\n"
            << "max relative error " << worst.rel_error << " (tolerance "
            << a.tolerance << ")\n"
            << "worst coordinate: task " << mdcr::to_string(worst.task)
            << ", block " << worst.block << ", entry (" << worst.row << ","
            << worst.col << "), analytic " << worst.analytic << ", numeric "
            << worst.numeric << "\n"
            << (pass ? "PASS" : "FAIL") << "\n";
  if (!a.out.empty()) {
    const fs::path out(a.out);
    fs::create_directories(out);
    json j;
    j["pass"] = pass;
    j["maxRelativeError"] = worst.rel_error;
    j["tolerance"] = a.tolerance;
    j["step"] = a.step;
    j["points"] = a.points;
    j["dims"] = {{"n", a.n}, {"p", a.p}, {"q", a.q}, {"c", a.c}};
    j["worst"] = {{"task", mdcr::to_string(worst.task)},
                  {"block", std::string(1, worst.block)},
                  {"row", worst.row},
                  {"col", worst.col},
                  {"analytic", worst.analytic},
                  {"numeric", worst.numeric}};
    write_json_file(out / "gradcheck.json", j);
    json manifest = base_manifest("gradcheck", argv);
    manifest["seed"] = a.seed;
    manifest["outputDir"] = fs::absolute(out).string();
    manifest["outputs"] = {"gradcheck.json"};
    write_json_file(out / "manifest.json", manifest);
  }
  return pass ? kExitOk : kExitCheckFailure;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  mdcr::SyntheticSpec spec;
  double split_fraction = 0.0;  // 0 = no split
  std::uint64_t split_seed = 0;
  std::string out;
};

void write_dataset(const mdcr::PairedDataset& data, const fs::path& dir,
                   const std::string& prefix) {
  mdcr::save_matrix(data.image_features,
                    (dir / (prefix + "images.bin")).string(),
                    mdcr::MatrixFormat::Binary);
  mdcr::save_matrix(data.text_features,
                    (dir / (prefix + "texts.bin")).string(),
                    mdcr::MatrixFormat::Binary);
  std::vector<long long> raw(data.labels.begin(), data.labels.end());
  mdcr::save_labels(raw, (dir / (prefix + "labels.txt")).string());
}

int run_synth(const SynthArgs& a, const std::vector<std::string>& argv) {
  const mdcr::PairedDataset data = mdcr::make_synthetic(a.spec);
  const fs::path out(a.out);
  fs::create_directories(out);
  write_dataset(data, out, "");
  json info;
  info["classes"] = a.spec.classes;
  info["perClass"] = a.spec.per_class;
  info["imageDim"] = a.spec.image_dim;
  info["textDim"] = a.spec.text_dim;
  info["separation"] = a.spec.separation;
  info["noise"] = a.spec.noise;
  info["seed"] = a.spec.seed;
  if (a.split_fraction > 0.0) {
    const mdcr::SplitResult parts =
        mdcr::split(data, a.split_fraction, a.split_seed);
    write_dataset(parts.train, out, "train_");
    write_dataset(parts.test, out, "test_");
    info["splitFraction"] = a.split_fraction;
    info["splitSeed"] = a.split_seed;
    info["trainIndices"] = parts.train_indices;
    info["testIndices"] = parts.test_indices;
  }
  write_json_file(out / "dataset.json", info);
  json manifest = base_manifest("synth", argv);
  manifest["seed"] = a.spec.seed;
  manifest["outputDir"] = fs::absolute(out).string();
  write_json_file(out / "manifest.json", manifest);
  std::cout << "wrote synthetic dataset (" << data.size() << " pairs, "
            << a.spec.classes << " classes) to " << out.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// reproduce

struct ReproduceArgs {
  std::string data_dir;
  std::string which = "table1";
  std::string out;
  bool zscore = false;
  bool parallel = false;
  bool synthetic = false;
  bool halve_on_reject = false;
};

constexpr const char* kFeatureDownloadUrl =
    "https://sites.google.com/site/yunchaosite/mdcr";

// Published Wikipedia mAP scores for the public 128-d SIFT / 10-d LDA
// features: per-task models, cross-applied models, and the unified ablation.
struct PublishedScores {
  double i2t_model_i2t = 0.287;
  double i2t_model_t2i = 0.146;
  double t2i_model_i2t = 0.165;
  double t2i_model_t2i = 0.225;
  double unified_i2t = 0.236;
  double unified_t2i = 0.216;
  double average = 0.256;
};

std::string find_feature_file(const fs::path& dir, const std::string& stem,
                              std::vector<std::string>* missing) {
  for (const char* ext : {".bin", ".txt"}) {
    const fs::path candidate = dir / (stem + ext);
    if (fs::exists(candidate)) return candidate.string();
  }
  missing->push_back(stem + ".bin (or .txt)");
  return {};
}

struct ReproduceData {
  mdcr::PairedDataset train;
  mdcr::Matrix test_images, test_texts;
  mdcr::LabelVector test_labels;
  mdcr::LabelMapping mapping;
};

ReproduceData load_reproduce_data(const ReproduceArgs& a) {
  ReproduceData d;
  if (a.synthetic) {
    mdcr::SyntheticSpec spec;
    spec.classes = 10;
    spec.per_class = 60;
    spec.image_dim = 16;
    spec.text_dim = 12;
    spec.separation = 10.0;
    spec.noise = 1.0;
    spec.seed = 2025;
    const mdcr::PairedDataset data = mdcr::make_synthetic(spec);
    mdcr::SplitResult parts = mdcr::split(data, 0.7, 1);
    d.train = std::move(parts.train);
    d.test_images = parts.test.image_features;
    d.test_texts = parts.test.text_features;
    d.test_labels = parts.test.labels;
    for (int k = 0; k < spec.classes; ++k) d.mapping.originals.push_back(k);
    return d;
  }
  if (a.data_dir.empty())
    throw mdcr::ValidationError(
        "no dataset directory: pass --data DIR or set MDCR_DATA_DIR, or use "
        "--synthetic for the dataset-free property run");
  const fs::path dir(a.data_dir);
  std::vector<std::string> missing;
  const std::string train_images = find_feature_file(dir, "train_images", &missing);
  const std::string train_texts = find_feature_file(dir, "train_texts", &missing);
  const std::string test_images = find_feature_file(dir, "test_images", &missing);
  const std::string test_texts = find_feature_file(dir, "test_texts", &missing);
  for (const char* stem : {"train_labels.txt", "test_labels.txt"})
    if (!fs::exists(dir / stem)) missing.push_back(stem);
  if (!missing.empty()) {
    std::string msg = "dataset incomplete under " + dir.string() +
                      "; missing:";
    for (const auto& f : missing) msg += "\n  " + f;
    msg += "\nDownload the public Wikipedia features from ";
    msg += kFeatureDownloadUrl;
    msg += "\nand convert them with tools/convert_features.py (see README).";
    throw mdcr::ValidationError(msg);
  }
  d.train.image_features = mdcr::load_matrix(train_images);
  d.train.text_features = mdcr::load_matrix(train_texts);
  auto [labels, mapping] =
      mdcr::remap_labels(mdcr::load_labels((dir / "train_labels.txt").string()));
  d.train.labels = std::move(labels);
  d.mapping = std::move(mapping);
  d.train.class_count = d.mapping.class_count();
  d.train.validate();
  d.test_images = mdcr::load_matrix(test_images);
  d.test_texts = mdcr::load_matrix(test_texts);
  d.test_labels = mdcr::apply_label_mapping(
      mdcr::load_labels((dir / "test_labels.txt").string()), d.mapping);
  return d;
}

int run_reproduce(const ReproduceArgs& a,
                  const std::vector<std::string>& argv) {
  mdcr::detail::require(a.which == "table1" || a.which == "table2",
                        "--which must be table1 or table2");
  ReproduceData d = load_reproduce_data(a);

  std::optional<mdcr::ZscoreStats> image_stats, text_stats;
  if (a.zscore) {
    auto [zi, si] = mdcr::zscore_fit(d.train.image_features);
    auto [zt, st] = mdcr::zscore_fit(d.train.text_features);
    d.train.image_features = std::move(zi);
    d.train.text_features = std::move(zt);
    d.test_images = mdcr::zscore_apply(d.test_images, si);
    d.test_texts = mdcr::zscore_apply(d.test_texts, st);
    image_stats = std::move(si);
    text_stats = std::move(st);
  }

  const auto config_for = [&](mdcr::Task task) {
    mdcr::TrainConfig cfg =
        mdcr::default_config(task, a.synthetic ? mdcr::DatasetPreset::Custom
                                               : mdcr::DatasetPreset::Wikipedia);
    if (a.synthetic) {
      // scale-appropriate settings for the synthetic generator
      cfg.mu = 1e-4;
      cfg.epsilon = 1e-3;
      cfg.outer_tolerance = 1e-4;
    }
    cfg.halve_on_reject = a.halve_on_reject;
    return cfg;
  };

  const std::vector<mdcr::Task> tasks = {mdcr::Task::I2T, mdcr::Task::T2I,
                                         mdcr::Task::Unified};
  std::vector<mdcr::TrainReport> reports(tasks.size());
  const auto train_one = [&](std::size_t i) {
    reports[i] = mdcr::train(d.train, tasks[i], config_for(tasks[i]));
  };
  if (a.parallel) {
    std::vector<std::thread> workers;
    for (std::size_t i = 0; i < tasks.size(); ++i)
      workers.emplace_back(train_one, i);
    for (auto& worker : workers) worker.join();
  } else {
    for (std::size_t i = 0; i < tasks.size(); ++i) train_one(i);
  }

  const fs::path out(a.out);
  fs::create_directories(out);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const fs::path model_dir = out / mdcr::to_string(tasks[i]);
    fs::create_directories(model_dir);
    mdcr::Model model;
    model.pair = reports[i].final_pair;
    const mdcr::TrainConfig cfg = config_for(tasks[i]);
    model.hp = cfg.hp;
    model.mu = cfg.mu;
    model.epsilon = cfg.epsilon;
    model.label_map = d.mapping;
    model.image_stats = image_stats;
    model.text_stats = text_stats;
    mdcr::save_model(model, (model_dir / "model.mdcr").string());
    write_text_file(model_dir / "trace.csv", trace_csv(reports[i]));
    write_json_file(model_dir / "train_report.json",
                    train_report_json(reports[i]));
  }

  const auto map_for = [&](const mdcr::ProjectionPair& pair,
                           mdcr::Task direction) {
    const auto results =
        direction == mdcr::Task::I2T
            ? mdcr::cross_retrieve(pair, d.test_images, d.test_labels,
                                   d.test_texts, d.test_labels, direction)
            : mdcr::cross_retrieve(pair, d.test_texts, d.test_labels,
                                   d.test_images, d.test_labels, direction);
    return mdcr::mean_ap(results).map;
  };

  const PublishedScores published;
  struct Cell {
    std::string model, direction;
    double ours;
    std::optional<double> reference;
  };
  std::vector<Cell> cells;
  const double i2t_i2t = map_for(reports[0].final_pair, mdcr::Task::I2T);
  const double t2i_t2i = map_for(reports[1].final_pair, mdcr::Task::T2I);
  const auto ref = [&](double value) -> std::optional<double> {
    if (a.synthetic) return std::nullopt;
    return value;
  };
  if (a.which == "table1") {
    cells.push_back({"i2t", "i2t", i2t_i2t, ref(published.i2t_model_i2t)});
    cells.push_back({"t2i", "t2i", t2i_t2i, ref(published.t2i_model_t2i)});
    cells.push_back({"average", "-", (i2t_i2t + t2i_t2i) / 2.0,
                     ref(published.average)});
  } else {
    const double i2t_t2i = map_for(reports[0].final_pair, mdcr::Task::T2I);
    const double t2i_i2t = map_for(reports[1].final_pair, mdcr::Task::I2T);
    const double uni_i2t = map_for(reports[2].final_pair, mdcr::Task::I2T);
    const double uni_t2i = map_for(reports[2].final_pair, mdcr::Task::T2I);
    cells.push_back({"i2t", "i2t", i2t_i2t, ref(published.i2t_model_i2t)});
    cells.push_back({"t2i", "i2t", t2i_i2t, ref(published.t2i_model_i2t)});
    cells.push_back({"unified", "i2t", uni_i2t, ref(published.unified_i2t)});
    cells.push_back({"i2t", "t2i", i2t_t2i, ref(published.i2t_model_t2i)});
    cells.push_back({"t2i", "t2i", t2i_t2i, ref(published.t2i_model_t2i)});
    cells.push_back({"unified", "t2i", uni_t2i, ref(published.unified_t2i)});
  }

  json cells_json = json::array();
  std::cout << "model     direction  ours    published  delta\n";
  for (const auto& cell : cells) {
    json j;
    j["model"] = cell.model;
    j["direction"] = cell.direction;
    j["ours"] = cell.ours;
    std::string ref_str = "n/a", delta_str = "n/a";
    if (cell.reference) {
      j["published"] = *cell.reference;
      j["delta"] = cell.ours - *cell.reference;
      ref_str = fmt3(*cell.reference);
      delta_str = fmt3(cell.ours - *cell.reference);
    } else {
      j["published"] = nullptr;
      j["delta"] = nullptr;
    }
    cells_json.push_back(j);
    std::printf("%-9s %-10s %-7s %-10s %s\n", cell.model.c_str(),
                cell.direction.c_str(), fmt3(cell.ours).c_str(),
                ref_str.c_str(), delta_str.c_str());
  }

  json report;
  report["which"] = a.which;
  report["synthetic"] = a.synthetic;
  report["zscore"] = a.zscore;
  report["cells"] = cells_json;
  for (std::size_t i = 0; i < tasks.size(); ++i)
    report["training"][mdcr::to_string(tasks[i])] =
        train_report_json(reports[i]);
  if (a.synthetic) {
    // dataset-free mode: descent and determinism properties instead of
    // published-number comparison
    bool monotone = true;
    for (const auto& r : reports)
      for (std::size_t i = 1; i < r.trace.size(); ++i)
        monotone &= r.trace[i].objective <= r.trace[i - 1].objective;
    report["properties"] = {
        {"monotoneTraces", monotone},
        {"allConverged",
         std::all_of(reports.begin(), reports.end(), [](const auto& r) {
           return r.stop_reason == mdcr::StopReason::Converged;
         })}};
  }
  write_json_file(out / "reproduce_report.json", report);

  json manifest = base_manifest("reproduce", argv);
  manifest["which"] = a.which;
  manifest["synthetic"] = a.synthetic;
  manifest["zscore"] = a.zscore;
  manifest["dataDir"] =
      a.data_dir.empty() ? "" : fs::absolute(a.data_dir).string();
  manifest["outputDir"] = fs::absolute(out).string();
  write_json_file(out / "manifest.json", manifest);

  for (const auto& r : reports)
    if (r.stop_reason == mdcr::StopReason::StepRejected) {
      std::cerr << "error: a training run diverged; see its trace.csv (try "
                   "--zscore or --halve-on-reject)\n";
      return kExitDivergence;
    }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"mdcr: modality-dependent cross-media retrieval toolkit"};
  app.require_subcommand(1);
  app.set_config("--config", "", "read options from an INI file");

  TrainOptions train_opts;
  auto* train_cmd = app.add_subcommand(
      "train", "learn a projection pair from paired image/text features");
  train_cmd->add_option("--task", train_opts.args.task,
                        "retrieval task: i2t, t2i or unified")
      ->required();
  train_cmd->add_option("--images", train_opts.args.images,
                        "image feature matrix (text or binary format)")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--texts", train_opts.args.texts,
                        "text feature matrix")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--labels", train_opts.args.labels,
                        "label file, one integer per line")
      ->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--preset", train_opts.args.preset,
                        "hyperparameter preset: wikipedia, pascal-sentence, "
                        "inria-websearch or custom");
  train_opts.lambda_opt = train_cmd->add_option(
      "--lambda", train_opts.args.lambda, "correlation/regression tradeoff");
  train_opts.eta1_opt = train_cmd->add_option("--eta1", train_opts.args.eta1,
                                              "image-side ridge weight");
  train_opts.eta2_opt = train_cmd->add_option("--eta2", train_opts.args.eta2,
                                              "text-side ridge weight");
  train_opts.mu_opt =
      train_cmd->add_option("--mu", train_opts.args.mu, "step size");
  train_opts.epsilon_opt = train_cmd->add_option(
      "--epsilon", train_opts.args.epsilon, "inner-loop improvement threshold");
  train_cmd->add_option("--max-outer", train_opts.args.max_outer,
                        "outer iteration cap");
  train_cmd->add_option("--max-inner", train_opts.args.max_inner,
                        "inner iteration cap per block");
  train_cmd->add_option("--outer-tol", train_opts.args.outer_tol,
                        "relative objective change for outer convergence");
  train_cmd->add_option("--init", train_opts.args.init,
                        "initialization: zeros or gaussian");
  train_cmd->add_option("--init-scale", train_opts.args.init_scale,
                        "gaussian init scale");
  train_cmd->add_option("--seed", train_opts.args.seed,
                        "seed for gaussian init");
  train_cmd->add_flag("--zscore", train_opts.args.zscore,
                      "z-score features (stats learned here are stored in "
                      "the model and reapplied at evaluation)");
  train_cmd->add_flag("--halve-on-reject", train_opts.args.halve_on_reject,
                      "halve the step size when a step is rejected");
  train_cmd->add_option("--out", train_opts.args.out, "output directory")
      ->required();

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand(
      "eval", "evaluate a model on a paired test set (mAP, per-class mAP, PR)");
  EvalArgs query_args;
  auto* query_cmd = app.add_subcommand(
      "query", "rank the cross-modal gallery for every query, as JSON lines");
  for (auto [cmd, a] : {std::pair{eval_cmd, &eval_args},
                        std::pair{query_cmd, &query_args}}) {
    cmd->add_option("--model", a->model, "model file from train")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--images", a->images, "image feature matrix")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--texts", a->texts, "text feature matrix")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--labels", a->labels, "label file")
        ->required()->check(CLI::ExistingFile);
    cmd->add_option("--direction", a->direction,
                    "retrieval direction: i2t or t2i")
        ->required();
    cmd->add_option("--out", a->out, "output directory")->required();
  }
  eval_cmd->add_option("--pr-points", eval_args.pr_points,
                       "recall levels in the PR curve");

  GradcheckArgs grad_args;
  auto* grad_cmd = app.add_subcommand(
      "gradcheck",
      "validate analytic gradients against central finite differences");
  grad_cmd->add_option("--n", grad_args.n, "instances per random draw");
  grad_cmd->add_option("--p", grad_args.p, "image feature dimension");
  grad_cmd->add_option("--q", grad_args.q, "text feature dimension");
  grad_cmd->add_option("--c", grad_args.c, "class count");
  grad_cmd->add_option("--points", grad_args.points, "number of random draws");
  grad_cmd->add_option("--seed", grad_args.seed, "rng seed");
  grad_cmd->add_option("--tolerance", grad_args.tolerance,
                       "max allowed relative error");
  grad_cmd->add_option("--step", grad_args.step, "finite difference step");
  grad_cmd->add_option("--out", grad_args.out,
                       "optional output directory for the JSON report");

  SynthArgs synth_args;
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a separable synthetic paired dataset");
  synth_cmd->add_option("--classes", synth_args.spec.classes, "class count");
  synth_cmd->add_option("--per-class", synth_args.spec.per_class,
                        "instances per class");
  synth_cmd->add_option("--image-dim", synth_args.spec.image_dim,
                        "image feature dimension");
  synth_cmd->add_option("--text-dim", synth_args.spec.text_dim,
                        "text feature dimension");
  synth_cmd->add_option("--sep", synth_args.spec.separation,
                        "center separation");
  synth_cmd->add_option("--noise", synth_args.spec.noise, "isotropic noise");
  synth_cmd->add_option("--seed", synth_args.spec.seed, "rng seed");
  synth_cmd->add_option("--split", synth_args.split_fraction,
                        "also write a stratified train/test split with this "
                        "train fraction");
  synth_cmd->add_option("--split-seed", synth_args.split_seed, "split seed");
  synth_cmd->add_option("--out", synth_args.out, "output directory")
      ->required();

  ReproduceArgs repro_args;
  if (const char* env = std::getenv("MDCR_DATA_DIR")) repro_args.data_dir = env;
  auto* repro_cmd = app.add_subcommand(
      "reproduce",
      "train all three models with the published presets and compare mAP "
      "against the published Wikipedia scores");
  repro_cmd->add_option("--data", repro_args.data_dir,
                        "dataset directory (default: $MDCR_DATA_DIR)");
  repro_cmd->add_option("--which", repro_args.which, "table1 or table2");
  repro_cmd->add_flag("--zscore", repro_args.zscore,
                      "z-score features before training");
  repro_cmd->add_flag("--parallel", repro_args.parallel,
                      "train the three models concurrently");
  repro_cmd->add_flag("--synthetic", repro_args.synthetic,
                      "dataset-free mode: synthetic data, published columns "
                      "reported as n/a");
  repro_cmd->add_flag("--halve-on-reject", repro_args.halve_on_reject,
                      "halve the step size when a step is rejected");
  repro_cmd->add_option("--out", repro_args.out, "output directory")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }
  if (const auto* config_opt = app.get_config_ptr())
    if (config_opt->count() > 0) g_config_path = config_opt->as<std::string>();

  try {
    if (train_cmd->parsed()) return run_train(train_opts, args);
    if (eval_cmd->parsed()) return run_eval(eval_args, args);
    if (query_cmd->parsed()) return run_query(query_args, args);
    if (grad_cmd->parsed()) return run_gradcheck(grad_args, args);
    if (synth_cmd->parsed()) return run_synth(synth_args, args);
    if (repro_cmd->parsed()) return run_reproduce(repro_args, args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitValidation;
}
