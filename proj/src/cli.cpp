// Copyright 2026 The dynmf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dynmf/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>
#include <json.hpp>

#include "dynmf/analysis.hpp"
#include "dynmf/anomaly.hpp"
#include "dynmf/cp_als.hpp"
#include "dynmf/cube_io.hpp"
#include "dynmf/error.hpp"
#include "dynmf/ingest.hpp"
#include "dynmf/model_io.hpp"
#include "dynmf/run_manifest.hpp"
#include "dynmf/synth.hpp"
#include "dynmf/text.hpp"
#include "dynmf/trainer.hpp"

namespace dynmf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct FitOptions {
  std::string cube;
  Index rank = 10;
  std::int64_t iters = 20000;
  std::uint64_t seed = 42;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double l2 = 0.0;
  double init_std = 0.1;
  Index minibatch = 0;
  std::int64_t trace_every = 100;
  bool early_stop = false;
  bool reproducible = true;
  int threads = 0;

  FitConfig config() const {
    FitConfig c;
    c.rank = rank;
    c.max_iter = iters;
    c.seed = seed;
    c.init_std = init_std;
    c.adam = {alpha, beta1, beta2, epsilon};
    c.l2_lambda = l2;
    if (minibatch > 0) c.minibatch_slices = minibatch;
    c.trace_every = trace_every;
    c.reproducible_reduction = reproducible;
    c.early_stop = early_stop;
    return c;
  }
};

json config_json(const FitConfig& c) {
  return {{"k", c.rank},
          {"iters", c.max_iter},
          {"seed", c.seed},
          {"init_std", c.init_std},
          {"alpha", c.adam.alpha},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"l2", c.l2_lambda},
          {"minibatch", c.minibatch_slices ? json(*c.minibatch_slices) : json(nullptr)},
          {"trace_every", c.trace_every},
          {"reproducible", c.reproducible_reduction},
          {"early_stop", c.early_stop}};
}

void add_threads_option(CLI::App* cmd, int& threads) {
  cmd->add_option("--threads", threads, "Worker thread cap (0 = runtime default)")
      ->check(CLI::NonNegativeNumber);
}

void add_fit_options(CLI::App* cmd, FitOptions& o) {
  cmd->add_option("--cube", o.cube, "Cube directory")->required();
  cmd->add_option("--iters", o.iters, "Adam iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Initialization seed");
  cmd->add_option("--alpha", o.alpha, "Adam step size")->check(CLI::PositiveNumber);
  cmd->add_option("--beta1", o.beta1, "Adam first-moment decay")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--beta2", o.beta2, "Adam second-moment decay")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--epsilon", o.epsilon, "Adam denominator term")->check(CLI::PositiveNumber);
  cmd->add_option("--l2", o.l2, "L2 penalty weight")->check(CLI::NonNegativeNumber);
  cmd->add_option("--init-std", o.init_std, "Std of factor initialization")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--minibatch", o.minibatch, "Time slices sampled per step (0 = full batch)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--trace-every", o.trace_every, "Objective trace stride")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--early-stop", o.early_stop, "Stop on relative change < 1e-8 per 100 steps");
  cmd->add_flag("--reproducible,!--no-reproducible", o.reproducible,
                "Fixed-order reductions (default on)");
  add_threads_option(cmd, o.threads);
}

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

void write_trace_csv(const FitReport& report, const std::string& path) {
  auto out = text::open_output(path);
  out << "iteration,objective\n";
  for (const auto& p : report.objective_trace) {
    out << p.iteration << ',' << text::format_double(p.objective) << '\n';
  }
}

json report_json(const FitReport& report) {
  return {{"final_objective", report.final_objective},
          {"final_avg_abs_error", report.final_avg_abs_error},
          {"iterations_run", report.iterations_run},
          {"config", config_json(report.config)},
          {"warnings", report.warnings}};
}

std::string one_line(std::string message) {
  std::replace(message.begin(), message.end(), '\n', ' ');
  return message;
}

std::string sibling_summary_path(const std::string& output) {
  fs::path p(output);
  const std::string stem = p.stem().string();
  return (p.parent_path() / (stem + "_summary.csv")).string();
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dynamic matrix factorization of node x metric usage telemetry", "dynmf"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  std::function<void()> action;
  auto warn = [&](const std::string& msg) { err << "dynmf: warning: " << msg << '\n'; };

  // ingest
  struct {
    std::string input, format = "long", missing = "reject", output;
    bool normalize = false;
  } ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Load usage CSV into a cube directory");
  ingest_cmd->add_option("--input", ingest.input, "Input CSV")->required();
  ingest_cmd->add_option("--format", ingest.format, "long or wide")
      ->check(CLI::IsMember({"long", "wide"}));
  ingest_cmd->add_option("--missing", ingest.missing, "reject or impute-zero")
      ->check(CLI::IsMember({"reject", "impute-zero"}));
  ingest_cmd->add_flag("--normalize", ingest.normalize, "Z-score each metric");
  ingest_cmd->add_option("--output", ingest.output, "Cube directory")->required();
  ingest_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("ingest");
      IngestConfig config;
      config.format = parse_csv_format(ingest.format);
      config.missing = parse_missing_policy(ingest.missing);
      config.normalization = ingest.normalize ? Normalization::kZScore : Normalization::kNone;
      const UsageCube cube = load_csv(ingest.input, config);
      save_cube(cube, ingest.output);
      manifest.set_config({{"format", ingest.format},
                           {"missing", ingest.missing},
                           {"normalize", ingest.normalize}});
      manifest.add_input("csv", ingest.input);
      manifest.add_output("cube", ingest.output);
      manifest.write(ingest.output);
      out << "cube: " << cube.num_nodes() << " nodes, " << cube.num_metrics() << " metrics, "
          << cube.num_times() << " timesteps, " << cube.observed_count() << " observed cells\n";
    };
  });

  // fit
  FitOptions fit_opts;
  std::string fit_output, fit_trace;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the dynamic factor model with Adam");
  add_fit_options(fit_cmd, fit_opts);
  fit_cmd->add_option("--k", fit_opts.rank, "Latent dimension")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--output", fit_output, "Model directory")->required();
  fit_cmd->add_option("--trace", fit_trace, "Objective trace CSV");
  fit_cmd->callback([&] {
    action = [&] {
      apply_threads(fit_opts.threads);
      RunManifest manifest("fit");
      const UsageCube cube = load_cube(fit_opts.cube);
      const FitConfig config = fit_opts.config();
      auto [model, report] = fit(cube, config);
      for (const auto& w : report.warnings) warn(w);
      save_model(model, fit_output);
      {
        auto f = text::open_output((fs::path(fit_output) / "fit_report.json").string());
        f << report_json(report).dump(2) << '\n';
      }
      json cfg = config_json(config);
      cfg["threads"] = fit_opts.threads;
      manifest.set_config(cfg);
      manifest.add_input("cube", fit_opts.cube);
      if (!fit_trace.empty()) {
        write_trace_csv(report, fit_trace);
        manifest.add_output("trace", fit_trace);
      }
      manifest.add_output("model", fit_output);
      manifest.write(fit_output);
      out << "final_objective=" << text::format_double(report.final_objective)
          << " final_avg_abs_error=" << text::format_double(report.final_avg_abs_error) << '\n';
    };
  });

  // sweep
  FitOptions sweep_opts;
  std::vector<Index> sweep_ks;
  std::string sweep_output;
  auto* sweep_cmd = app.add_subcommand("sweep", "Fit once per latent dimension");
  add_fit_options(sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--ks", sweep_ks, "Comma-separated latent dimensions")
      ->required()
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--output", sweep_output, "Output directory")->required();
  sweep_cmd->callback([&] {
    action = [&] {
      apply_threads(sweep_opts.threads);
      RunManifest manifest("sweep");
      const UsageCube cube = load_cube(sweep_opts.cube);
      const FitConfig config = sweep_opts.config();
      const auto reports = k_sweep(cube, sweep_ks, config);
      fs::create_directories(sweep_output);
      auto summary = text::open_output((fs::path(sweep_output) / "summary.csv").string());
      summary << "k,final_objective,final_avg_abs_error\n";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        for (const auto& w : r.warnings) warn(w);
        const auto repeats = std::count(sweep_ks.begin(), sweep_ks.begin() + i, sweep_ks[i]);
        std::string name = "trace_k" + std::to_string(sweep_ks[i]);
        if (repeats > 0) name += "_" + std::to_string(repeats);
        write_trace_csv(r, (fs::path(sweep_output) / (name + ".csv")).string());
        summary << sweep_ks[i] << ',' << text::format_double(r.final_objective) << ','
                << text::format_double(r.final_avg_abs_error) << '\n';
        out << "k=" << sweep_ks[i] << " final_objective=" << text::format_double(r.final_objective)
            << '\n';
      }
      summary.close();
      json cfg = config_json(config);
      cfg.erase("k");
      cfg["ks"] = sweep_ks;
      cfg["threads"] = sweep_opts.threads;
      manifest.set_config(cfg);
      manifest.add_input("cube", sweep_opts.cube);
      manifest.add_output("sweep", sweep_output);
      manifest.write(sweep_output);
    };
  });

  // score
  struct {
    std::string cube, model, output, flag;
    int threads = 0;
  } score_opts;
  auto* score_cmd = app.add_subcommand("score", "Per-node, per-timestep anomaly scores");
  score_cmd->add_option("--cube", score_opts.cube, "Cube directory")->required();
  score_cmd->add_option("--model", score_opts.model, "Model directory")->required();
  score_cmd->add_option("--output", score_opts.output, "Scores CSV")->required();
  score_cmd->add_option("--flag", score_opts.flag, "quantile:<q> or zscore:<k>");
  add_threads_option(score_cmd, score_opts.threads);
  score_cmd->callback([&] {
    action = [&] {
      apply_threads(score_opts.threads);
      RunManifest manifest("score");
      const UsageCube cube = load_cube(score_opts.cube);
      const LatentModel model = load_model(score_opts.model);
      AnomalyScoreSeries scores = score(model, cube);
      if (!score_opts.flag.empty()) scores = flag(scores, FlagMethod::parse(score_opts.flag));
      write_scores_csv(scores, score_opts.output);
      manifest.set_config({{"flag", score_opts.flag.empty() ? json(nullptr)
                                                            : json(score_opts.flag)},
                           {"threshold", scores.threshold ? json(*scores.threshold)
                                                          : json(nullptr)}});
      manifest.add_input("cube", score_opts.cube);
      manifest.add_input("model", score_opts.model);
      manifest.add_output("scores", score_opts.output);
      manifest.write(score_opts.output);
    };
  });

  // flag
  struct {
    std::string scores, method = "quantile:0.99", output;
  } flag_opts;
  auto* flag_cmd = app.add_subcommand("flag", "Threshold an existing scores CSV");
  flag_cmd->add_option("--scores", flag_opts.scores, "Scores CSV")->required();
  flag_cmd->add_option("--method", flag_opts.method, "quantile:<q> or zscore:<k>");
  flag_cmd->add_option("--output", flag_opts.output, "Flagged scores CSV")->required();
  flag_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("flag");
      const auto flagged = flag(read_scores_csv(flag_opts.scores), FlagMethod::parse(flag_opts.method));
      write_scores_csv(flagged, flag_opts.output);
      manifest.set_config({{"method", flag_opts.method}, {"threshold", *flagged.threshold}});
      manifest.add_input("scores", flag_opts.scores);
      manifest.add_output("scores", flag_opts.output);
      manifest.write(flag_opts.output);
    };
  });

  // align
  struct {
    std::string scores, events, output, summary;
    std::int64_t window = 600;
  } align_opts;
  auto* align_cmd = app.add_subcommand("align", "Align error events with flagged scores");
  align_cmd->add_option("--scores", align_opts.scores, "Flagged scores CSV")->required();
  align_cmd->add_option("--events", align_opts.events, "Events CSV")->required();
  align_cmd->add_option("--window-seconds", align_opts.window, "Symmetric inclusive window")
      ->check(CLI::PositiveNumber);
  align_cmd->add_option("--output", align_opts.output, "Per-event alignment CSV")->required();
  align_cmd->add_option("--summary", align_opts.summary,
                        "Per-error-type summary CSV (default <output>_summary.csv)");
  align_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("align");
      const auto scores = read_scores_csv(align_opts.scores);
      const auto events = read_events_csv(align_opts.events);
      const auto report = align_events(scores, events, align_opts.window);
      const std::string summary =
          align_opts.summary.empty() ? sibling_summary_path(align_opts.output) : align_opts.summary;
      write_alignment_csv(report, align_opts.output);
      write_alignment_summary_csv(report, summary);
      if (!report.unresolved.empty()) {
        warn(std::to_string(report.unresolved.size()) + " event(s) name nodes absent from scores");
      }
      manifest.set_config({{"window_seconds", align_opts.window}});
      manifest.add_input("scores", align_opts.scores);
      manifest.add_input("events", align_opts.events);
      manifest.add_output("alignment", align_opts.output);
      manifest.add_output("summary", summary);
      manifest.write(align_opts.output);
      for (const auto& s : report.by_type) {
        out << s.error_type << ": cooccurrence_rate=" << text::format_double(s.cooccurrence_rate)
            << " (" << s.cooccurring << "/" << s.resolved << ")\n";
      }
    };
  });

  // project
  struct {
    std::string model, target = "metrics", output;
  } project_opts;
  auto* project_cmd = app.add_subcommand("project", "2-D PCA projection of model factors");
  project_cmd->add_option("--model", project_opts.model, "Model directory")->required();
  project_cmd->add_option("--target", project_opts.target, "metrics or nodes-static")
      ->check(CLI::IsMember({"metrics", "nodes-static"}));
  project_cmd->add_option("--output", project_opts.output, "Projection CSV")->required();
  project_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("project");
      const LatentModel model = load_model(project_opts.model);
      const bool metrics = project_opts.target == "metrics";
      const Matrix rows = metrics ? Matrix(model.factors.metrics())
                                  : Matrix(model.factors.static_nodes());
      const auto projection = pca_2d(rows, metrics ? model.metric_ids : model.node_ids);
      write_projection_csv(projection, project_opts.output);
      manifest.set_config({{"target", project_opts.target},
                           {"explained_variance", projection.explained_variance}});
      manifest.add_input("model", project_opts.model);
      manifest.add_output("projection", project_opts.output);
      manifest.write(project_opts.output);
      out << "explained_variance=" << text::format_double(projection.explained_variance[0])
          << "," << text::format_double(projection.explained_variance[1]) << '\n';
    };
  });

  // correlate
  struct {
    std::string model, output;
  } corr_opts;
  auto* corr_cmd = app.add_subcommand("correlate", "Correlation among latent dimensions");
  corr_cmd->add_option("--model", corr_opts.model, "Model directory")->required();
  corr_cmd->add_option("--output", corr_opts.output, "Correlation CSV")->required();
  corr_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("correlate");
      const auto corr = latent_correlations(load_model(corr_opts.model));
      write_correlation_csv(corr, corr_opts.output);
      if (!corr.degenerate_dimensions.empty()) {
        warn(std::to_string(corr.degenerate_dimensions.size()) +
             " latent dimension(s) have zero variance");
      }
      manifest.set_config({{"degenerate_dimensions", corr.degenerate_dimensions}});
      manifest.add_input("model", corr_opts.model);
      manifest.add_output("correlation", corr_opts.output);
      manifest.write(corr_opts.output);
    };
  });

  // baseline
  struct {
    std::string cube, output, flag, trace;
    Index rank = 10;
    std::int64_t iters = 200;
    std::uint64_t seed = 42;
  } base_opts;
  auto* base_cmd = app.add_subcommand("baseline", "CP-ALS tensor reconstruction scores");
  base_cmd->add_option("--cube", base_opts.cube, "Cube directory")->required();
  base_cmd->add_option("--rank", base_opts.rank, "CP rank")->check(CLI::PositiveNumber);
  base_cmd->add_option("--iters", base_opts.iters, "ALS sweeps")->check(CLI::PositiveNumber);
  base_cmd->add_option("--seed", base_opts.seed, "Initialization seed");
  base_cmd->add_option("--output", base_opts.output, "Scores CSV")->required();
  base_cmd->add_option("--flag", base_opts.flag, "quantile:<q> or zscore:<k>");
  base_cmd->add_option("--trace", base_opts.trace, "Per-sweep error CSV");
  base_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("baseline");
      const UsageCube cube = load_cube(base_opts.cube);
      const CPFit cp = cp_als_fit(cube, base_opts.rank, base_opts.iters, base_opts.seed);
      if (cp.least_norm_fallbacks > 0) {
        warn(std::to_string(cp.least_norm_fallbacks) +
             " singular normal-equation solve(s) used the least-norm fallback");
      }
      AnomalyScoreSeries scores = cp_node_scores(cp.model, cube);
      if (!base_opts.flag.empty()) scores = flag(scores, FlagMethod::parse(base_opts.flag));
      write_scores_csv(scores, base_opts.output);
      manifest.set_config({{"rank", base_opts.rank},
                           {"iters", base_opts.iters},
                           {"seed", base_opts.seed},
                           {"flag", base_opts.flag.empty() ? json(nullptr) : json(base_opts.flag)},
                           {"least_norm_fallbacks", cp.least_norm_fallbacks}});
      manifest.add_input("cube", base_opts.cube);
      manifest.add_output("scores", base_opts.output);
      if (!base_opts.trace.empty()) {
        auto f = text::open_output(base_opts.trace);
        f << "sweep,error\n";
        for (std::size_t i = 0; i < cp.error_trace.size(); ++i) {
          f << i + 1 << ',' << text::format_double(cp.error_trace[i]) << '\n';
        }
        f.close();
        manifest.add_output("trace", base_opts.trace);
      }
      manifest.write(base_opts.output);
      out << "final_error=" << text::format_double(cp.error_trace.back()) << '\n';
    };
  });

  // synth
  struct {
    std::string spec, preset, output, truth, planted;
    std::optional<std::uint64_t> seed;
  } synth_opts;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a planted-model cube");
  auto* spec_opt = synth_cmd->add_option("--spec", synth_opts.spec, "JSON spec file");
  synth_cmd->add_option("--preset", synth_opts.preset, "Built-in spec")
      ->check(CLI::IsMember({"standard"}))
      ->excludes(spec_opt);
  synth_cmd->add_option("--seed", synth_opts.seed, "Overrides the spec seed");
  synth_cmd->add_option("--output", synth_opts.output, "Cube directory")->required();
  synth_cmd->add_option("--truth", synth_opts.truth, "Ground-truth CSV");
  synth_cmd->add_option("--planted", synth_opts.planted, "Directory for the planted model");
  synth_cmd->callback([&] {
    if (synth_opts.spec.empty() && synth_opts.preset.empty()) {
      throw CLI::RequiredError("--spec or --preset");
    }
    action = [&] {
      RunManifest manifest("synth");
      SynthSpec spec;
      if (!synth_opts.preset.empty()) {
        spec = standard_benchmark_spec(synth_opts.seed.value_or(42));
      } else {
        std::ifstream in(synth_opts.spec);
        if (!in) throw DataError("cannot open '" + synth_opts.spec + "'");
        json doc;
        try {
          doc = json::parse(in);
        } catch (const json::exception& e) {
          throw DataError("malformed spec JSON: " + std::string(e.what()));
        }
        if (synth_opts.seed) doc["seed"] = *synth_opts.seed;
        spec = synth_spec_from_json(doc);
        manifest.add_input("spec", synth_opts.spec);
      }
      const SynthResult result = generate(spec);
      save_cube(result.cube, synth_opts.output);
      manifest.set_config({{"spec", synth_spec_to_json(spec)},
                           {"preset", synth_opts.preset.empty() ? json(nullptr)
                                                                : json(synth_opts.preset)}});
      manifest.add_output("cube", synth_opts.output);
      if (!synth_opts.truth.empty()) {
        write_truth_csv(result.truth, synth_opts.truth);
        manifest.add_output("truth", synth_opts.truth);
      }
      if (!synth_opts.planted.empty()) {
        save_model(result.planted, synth_opts.planted);
        manifest.add_output("planted", synth_opts.planted);
      }
      manifest.write(synth_opts.output);
      out << "cube: " << spec.nodes << " nodes, " << spec.metrics << " metrics, " << spec.times
          << " timesteps, " << result.truth.positives() << " injected cells\n";
    };
  });

  // eval
  struct {
    std::string scores, truth, output;
    std::vector<std::string> flags;
  } eval_opts;
  auto* eval_cmd = app.add_subcommand("eval", "Score a detector against ground truth");
  eval_cmd->add_option("--scores", eval_opts.scores, "Scores CSV")->required();
  eval_cmd->add_option("--truth", eval_opts.truth, "Ground-truth CSV")->required();
  eval_cmd->add_option("--output", eval_opts.output, "Metrics CSV")->required();
  eval_cmd->add_option("--flag", eval_opts.flags, "Extra thresholds (repeatable)");
  eval_cmd->callback([&] {
    action = [&] {
      RunManifest manifest("eval");
      const auto scores = read_scores_csv(eval_opts.scores);
      const auto truth = read_truth_csv(eval_opts.truth, scores);
      std::vector<FlagMethod> methods;
      for (const auto& f : eval_opts.flags) methods.push_back(FlagMethod::parse(f));
      const auto metrics = evaluate_detector(scores, truth, methods);
      write_metrics_csv(metrics, eval_opts.output);
      manifest.set_config({{"flags", eval_opts.flags}});
      manifest.add_input("scores", eval_opts.scores);
      manifest.add_input("truth", eval_opts.truth);
      manifest.add_output("metrics", eval_opts.output);
      manifest.write(eval_opts.output);
      out << "auc=" << (metrics.auc ? text::format_double(*metrics.auc) : "undefined") << '\n';
    };
  });

  std::vector<std::string> argv_storage{"dynmf"};
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : argv_storage) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << "dynmf: usage error: " << e.what() << '\n';
    const CLI::App* failing = &app;
    for (const auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return 2;
  }

  try {
    if (action) action();
    return 0;
  } catch (const DataError& e) {
    err << "dynmf: error: data: " << one_line(e.what()) << '\n';
  } catch (const DimensionError& e) {
    err << "dynmf: error: dimension: " << one_line(e.what()) << '\n';
  } catch (const NumericalError& e) {
    err << "dynmf: error: numerical: " << one_line(e.what()) << '\n';
  } catch (const std::invalid_argument& e) {
    err << "dynmf: error: invalid-argument: " << one_line(e.what()) << '\n';
  } catch (const std::exception& e) {
    err << "dynmf: error: runtime: " << one_line(e.what()) << '\n';
  }
  return 1;
}

}  // namespace dynmf
