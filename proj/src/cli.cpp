#include "wtpgmr/cli.hpp"

#include "wtpgmr/dataio.hpp"
#include "wtpgmr/errors.hpp"
#include "wtpgmr/evalx.hpp"
#include "wtpgmr/generators.hpp"
#include "wtpgmr/parallel.hpp"
#include "wtpgmr/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wtpgmr::cli {

namespace {

namespace fs = std::filesystem;

json input_ref(const std::string& path) { return {{"path", path}, {"sha256", sha256_file(path)}}; }

json metadata(const std::string& command, json config, json inputs = json::object()) {
  return {{"tool", "wtpgmr"},
          {"schema_version", kSchemaVersion},
          {"command", command},
          {"config", std::move(config)},
          {"inputs", std::move(inputs)}};
}

/// CSV outputs carry their metadata in a sibling "<file>.meta.json".
void write_csv_with_meta(const std::string& path, const std::string& csv, const json& meta) {
  export_csv(path, csv);
  write_text(path + ".meta.json", canonical_dump(meta));
}

std::string replace_extension(const std::string& path, const std::string& ext) {
  return fs::path(path).replace_extension(ext).string();
}

const std::map<std::string, Method> kMethods{{"tpgmr", Method::TPGMR}, {"wtpgmr", Method::WTPGMR}};

struct GenArgs {
  std::string kind;
  int M = 4;
  int T = 200;
  std::uint64_t seed = 0;
  std::optional<double> noise;
  bool clustered = false;
  std::string out;
};

void cmd_gen(const GenArgs& a) {
  Dataset ds;
  json cfg = {{"kind", a.kind}, {"M", a.M}, {"T", a.T}, {"seed", a.seed}};
  if (a.kind == "reaching") {
    const double noise = a.noise.value_or(0.0);
    cfg["noise"] = noise;
    ds = gen_reaching(a.M, a.T, a.seed, noise);
  } else {
    TraySpec tray;
    tray.clustered = a.clustered;
    if (a.noise) tray.noise_std = *a.noise;
    cfg["noise"] = tray.noise_std;
    cfg["clustered"] = tray.clustered;
    ds = gen_pickplace(a.M, a.T, a.seed, tray);
  }
  save_dataset(ds, a.out, metadata("gen-data", cfg));
}

struct TrainArgs {
  std::string data;
  int K = 3;
  int n_pts = 10;
  double margin = 0.05;
  double step_rel_eps = kDefaultRelativeEps;
  double step_abs_eps = 1e-12;
  std::string out;
};

void cmd_train(const TrainArgs& a) {
  const Dataset ds = load_dataset(a.data);
  TrainConfig cfg;
  cfg.K = a.K;
  cfg.step.rel_eps = a.step_rel_eps;
  cfg.step.abs_eps = a.step_abs_eps;
  cfg.boxes.n_pts = a.n_pts;
  cfg.boxes.margin = a.margin;
  const auto model = train_model(ds, cfg);
  const json config = {{"K", cfg.K},
                       {"em",
                        {{"tol", cfg.em.tol},
                         {"max_iters", cfg.em.max_iters},
                         {"rel_eps", cfg.em.rel_eps},
                         {"abs_eps", cfg.em.abs_eps},
                         {"min_mass", cfg.em.min_mass},
                         {"max_restarts", cfg.em.max_restarts}}},
                       {"step_eps", {{"rel", cfg.step.rel_eps}, {"abs", cfg.step.abs_eps}}},
                       {"boxes", {{"n_pts", cfg.boxes.n_pts}, {"margin", cfg.boxes.margin}}}};
  save_model(model, a.out, metadata("train", config, {{"data", input_ref(a.data)}}));
}

struct AlphaArgs {
  std::string model;
  std::string data;
  std::vector<double> bounds{-8.0, 8.0};
  int scan = 33;
  int window = 0;
  double tol = 1e-3;
  std::string loss_mode = "inverse";
  std::string out;
  std::string trace;
};

void cmd_alpha(const AlphaArgs& a) {
  if (a.bounds.size() != 2 || !(a.bounds[0] < a.bounds[1])) throw ValidationError("--bounds: expected lo < hi");
  if (a.window < 0 || (a.window > 0 && a.window % 2 == 0)) throw ValidationError("--window: must be 0 or a positive odd integer");
  AlphaSearchConfig cfg;
  cfg.lo = a.bounds[0];
  cfg.hi = a.bounds[1];
  cfg.scan_points = a.scan;
  cfg.window = a.window;
  cfg.tol = a.tol;
  cfg.loss.weight_mode = weight_mode_from_string(a.loss_mode);
  auto model = load_model(a.model);
  const Dataset ds = load_dataset(a.data);
  const auto res = fit_alpha(model, ds, cfg);
  const json config = {{"bounds", {cfg.lo, cfg.hi}}, {"scan", cfg.scan_points}, {"window", res.window},
                       {"tol", cfg.tol},            {"max_iters", cfg.max_iters}, {"loss_mode", to_string(cfg.loss.weight_mode)},
                       {"step_eps", {{"rel", cfg.step.rel_eps}, {"abs", cfg.step.abs_eps}}},  {"alpha_star", res.alpha_star}, {"loss_star", res.loss_star}};
  const json meta = metadata("optimize-alpha", config, {{"model", input_ref(a.model)}, {"data", input_ref(a.data)}});
  save_model(model, a.out, meta);
  const std::string trace = a.trace.empty() ? replace_extension(a.out, ".trace.csv") : a.trace;
  write_csv_with_meta(trace, trace_csv(res.evaluations), meta);
}

struct ReproArgs {
  std::string model;
  std::string frames;
  std::string method = "wtpgmr";
  std::optional<double> alpha;
  std::string out;
};

void cmd_reproduce(const ReproArgs& a) {
  auto model = load_model(a.model);
  const auto frames = frames_from_json(read_json(a.frames));
  if (static_cast<int>(frames.size()) != model.gmm.P()) {
    throw ValidationError("--frames: expected " + std::to_string(model.gmm.P()) + " frames");
  }
  for (const auto& f : frames) {
    if (f.dim() != model.gmm.D()) throw ValidationError("--frames: frame dimension does not match the model");
  }
  const Method method = kMethods.at(a.method);
  if (a.alpha) model.alpha = a.alpha;
  const auto traj = model.bundle(method).generate(frames);
  json config = {{"method", a.method}, {"window", model.window}};
  config["alpha"] = method == Method::WTPGMR ? json(*model.alpha) : json(nullptr);
  write_csv_with_meta(a.out, trajectory_csv(traj, model.meta.channel_names),
                      metadata("reproduce", config, {{"model", input_ref(a.model)}, {"frames", input_ref(a.frames)}}));
}

struct CvArgs {
  std::string data;
  int K = 3;
  std::string method = "wtpgmr";
  std::string report;
};

void cmd_cv(const CvArgs& a) {
  const Dataset ds = load_dataset(a.data);
  LooConfig cfg;
  cfg.K = a.K;
  cfg.threads = thread_count();
  const Method method = kMethods.at(a.method);
  const auto res = loo_cross_validate(ds, method, cfg);
  json folds = json::array();
  for (const auto& f : res.folds) {
    json row = {{"held_out", f.held_out}, {"rmse", f.rmse}};
    if (method == Method::WTPGMR) row["alpha"] = f.alpha;
    folds.push_back(row);
  }
  const json config = {{"K", cfg.K},
                       {"method", a.method},
                       {"alpha_search",
                        {{"bounds", {cfg.alpha.lo, cfg.alpha.hi}},
                         {"scan", cfg.alpha.scan_points},
                         {"tol", cfg.alpha.tol},
                         {"loss_mode", to_string(cfg.alpha.loss.weight_mode)}}}};
  const json meta = metadata("cross-validate", config, {{"data", input_ref(a.data)}});
  const json report = {{"metadata", meta},
                       {"method", a.method},
                       {"folds", folds},
                       {"rmse", {{"mean", res.rmse_mean}, {"std", res.rmse_std}}}};
  write_text(a.report, canonical_dump(report));
  write_csv_with_meta(replace_extension(a.report, ".csv"), loo_csv(res), meta);
}

struct GridArgs {
  std::string model;
  double extent = 10.0;
  int cells = 21;
  std::string orientation = "demo-mean";
  double angle = 0.0;
  std::string method = "both";
  std::string report;
};

void cmd_grid(const GridArgs& a) {
  const auto model = load_model(a.model);
  std::vector<std::string> methods;
  if (a.method == "both") {
    methods = {"tpgmr", "wtpgmr"};
  } else {
    methods = {a.method};
  }
  for (const auto& m : methods) {
    if (kMethods.at(m) == Method::WTPGMR && !model.alpha) {
      throw ValidationError("grid-eval: model has no alpha; run optimize-alpha first");
    }
  }
  const auto rule = a.orientation == "fixed" ? OrientationRule::Fixed : OrientationRule::DemoMean;
  const auto grid = make_grid_spec(model.demo_frames, a.extent, a.cells, rule, a.angle, model.boxes.start_frame,
                                   model.boxes.goal_frame);
  const json config = {{"grid_extent", a.extent},      {"cells", a.cells},
                       {"orientation", a.orientation}, {"start_angle", grid.start_angle},
                       {"methods", methods},           {"alpha", model.alpha ? json(*model.alpha) : json(nullptr)},
                       {"window", model.window}};
  const json meta = metadata("grid-eval", config, {{"model", input_ref(a.model)}});
  json summaries = json::object();
  json tables = json::object();
  for (const auto& m : methods) {
    const auto rep = grid_eval(model.bundle(kMethods.at(m)), grid, model.boxes, model.meta.position_dims, thread_count());
    const std::string csv = replace_extension(a.report, "." + m + ".csv");
    write_csv_with_meta(csv, grid_csv(rep), meta);
    summaries[m] = summary_to_json(rep.summary);
    tables[m] = fs::path(csv).filename().string();
  }
  write_text(a.report, canonical_dump({{"metadata", meta}, {"summary", summaries}, {"tables", tables}}));
}

struct WeightsArgs {
  std::string model;
  std::optional<double> alpha;
  int window = 0;
  std::string out;
};

void cmd_weights(const WeightsArgs& a) {
  auto model = load_model(a.model);
  if (a.window < 0 || (a.window > 0 && a.window % 2 == 0)) throw ValidationError("--window: must be 0 or a positive odd integer");
  if (a.window > 0) model.window = a.window;
  const auto profile = model.profile(a.alpha);
  write_csv_with_meta(a.out, profile_csv(profile),
                      metadata("weights", {{"alpha", profile.alpha}, {"window", profile.window}},
                               {{"model", input_ref(a.model)}}));
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Task-parameterised GMM/GMR with per-step frame relevance weights", "wtpgmr"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen-data", "Generate a synthetic dataset");
  g->add_option("kind", gen.kind, "reaching or pickplace")->required()->check(CLI::IsMember({"reaching", "pickplace"}));
  g->add_option("--M", gen.M, "Number of demonstrations")->capture_default_str();
  g->add_option("--T", gen.T, "Samples per demonstration")->capture_default_str();
  g->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  g->add_option("--noise", gen.noise, "Noise std on spatial channels")->check(CLI::NonNegativeNumber);
  g->add_flag("--clustered", gen.clustered, "pickplace: draw targets from two tray regions");
  g->add_option("--out", gen.out, "Output dataset JSON")->required();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Fit the TP-GMM and per-step Gaussians");
  t->add_option("--data", train.data)->required()->check(CLI::ExistingFile);
  t->add_option("--K", train.K, "Mixture components")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--n-pts", train.n_pts, "Constraint box points")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--margin", train.margin, "Constraint box margin")->capture_default_str()->check(CLI::NonNegativeNumber);
  t->add_option("--step-rel-eps", train.step_rel_eps, "Per-step regulariser relative to the mean variance")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  t->add_option("--step-abs-eps", train.step_abs_eps, "Per-step regulariser floor")->capture_default_str()->check(CLI::PositiveNumber);
  t->add_option("--out", train.out, "Output model JSON")->required();

  AlphaArgs alpha;
  auto* o = app.add_subcommand("optimize-alpha", "Search the relevance exponent");
  o->add_option("--model", alpha.model)->required()->check(CLI::ExistingFile);
  o->add_option("--data", alpha.data)->required()->check(CLI::ExistingFile);
  o->add_option("--bounds", alpha.bounds, "lo hi")->expected(2)->capture_default_str();
  o->add_option("--scan", alpha.scan, "Coarse scan points (0 = none)")->capture_default_str();
  o->add_option("--window", alpha.window, "Smoothing window (0 = default)")->capture_default_str();
  o->add_option("--tol", alpha.tol, "Golden-section tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  o->add_option("--loss-mode", alpha.loss_mode)->capture_default_str()->check(CLI::IsMember({"inverse", "literal"}));
  o->add_option("--out", alpha.out, "Output model JSON")->required();
  o->add_option("--trace", alpha.trace, "Evaluation trace CSV (default <out>.trace.csv)");

  ReproArgs repro;
  auto* r = app.add_subcommand("reproduce", "Generate a trajectory for new frames");
  r->add_option("--model", repro.model)->required()->check(CLI::ExistingFile);
  r->add_option("--frames", repro.frames, "Frames JSON")->required()->check(CLI::ExistingFile);
  r->add_option("--method", repro.method)->capture_default_str()->check(CLI::IsMember({"tpgmr", "wtpgmr"}));
  r->add_option("--alpha", repro.alpha, "Override the stored alpha");
  r->add_option("--out", repro.out, "Output trajectory CSV")->required();

  CvArgs cv;
  auto* c = app.add_subcommand("cross-validate", "Leave-one-out RMSE");
  c->add_option("--data", cv.data)->required()->check(CLI::ExistingFile);
  c->add_option("--K", cv.K)->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--method", cv.method)->capture_default_str()->check(CLI::IsMember({"tpgmr", "wtpgmr"}));
  c->add_option("--report", cv.report, "Report JSON (fold CSV written alongside)")->required();

  GridArgs grid;
  auto* ge = app.add_subcommand("grid-eval", "Evaluate start positions on a grid");
  ge->add_option("--model", grid.model)->required()->check(CLI::ExistingFile);
  ge->add_option("--grid-extent", grid.extent, "Side length of the square grid")->capture_default_str()->check(CLI::PositiveNumber);
  ge->add_option("--cells", grid.cells, "Cells per side")->capture_default_str()->check(CLI::PositiveNumber);
  ge->add_option("--orientation", grid.orientation)->capture_default_str()->check(CLI::IsMember({"demo-mean", "fixed"}));
  ge->add_option("--angle", grid.angle, "Start angle for --orientation fixed")->capture_default_str();
  ge->add_option("--method", grid.method)->capture_default_str()->check(CLI::IsMember({"tpgmr", "wtpgmr", "both"}));
  ge->add_option("--report", grid.report, "Summary JSON (per-method CSVs written alongside)")->required();

  WeightsArgs weights;
  auto* w = app.add_subcommand("weights", "Export the relevance profile");
  w->add_option("--model", weights.model)->required()->check(CLI::ExistingFile);
  w->add_option("--alpha", weights.alpha, "Exponent (default: stored alpha)");
  w->add_option("--window", weights.window, "Smoothing window (0 = stored)")->capture_default_str();
  w->add_option("--out", weights.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (g->parsed()) cmd_gen(gen);
    if (t->parsed()) cmd_train(train);
    if (o->parsed()) cmd_alpha(alpha);
    if (r->parsed()) cmd_reproduce(repro);
    if (c->parsed()) cmd_cv(cv);
    if (ge->parsed()) cmd_grid(grid);
    if (w->parsed()) cmd_weights(weights);
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace wtpgmr::cli
