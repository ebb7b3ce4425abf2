// hpotts: command-line front end for the hidden Potts pipeline.
//
//   simulate    Potts realization by Swendsen-Wang           -> LMAP
//   emit        Gaussian observations for a label map        -> RIMG
//   classify    per-pixel maximum likelihood classification  -> LMAP
//   icm         iterated conditional modes segmentation      -> LMAP
//   estimate    pseudolikelihood estimate of beta            -> CSV
//   curve       score function over a beta grid              -> CSV
//   check       root existence condition for a label map
//   experiment  Monte Carlo study from a config file         -> CSVs
//
// Exit status: 0 success, 1 usage or input error, 2 degenerate or
// non-convergent estimation.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "hpotts/emission.hpp"
#include "hpotts/error.hpp"
#include "hpotts/estimator.hpp"
#include "hpotts/experiments.hpp"
#include "hpotts/io.hpp"
#include "hpotts/rng.hpp"
#include "hpotts/sampler.hpp"
#include "hpotts/segmentation.hpp"

namespace fs = std::filesystem;
using namespace hpotts;

namespace {

constexpr int kUsageError = 1;
constexpr int kDegenerate = 2;

std::string bool_text(bool b) { return b ? "true" : "false"; }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  return out;
}

// Evidence flags shared by estimate and curve.
struct EvidenceArgs {
  std::string image;
  std::string model;

  std::optional<ScoreContext> context(const LabelField& map, Neighborhood nbhd,
                                      Method method) const {
    if (image.empty() != model.empty()) {
      throw CLI::ValidationError("--image and --model go together");
    }
    if (method == Method::post && image.empty()) {
      throw CLI::ValidationError("--method post needs --image and --model");
    }
    if (image.empty()) return ScoreContext(map, nbhd);
    return ScoreContext(map, load_rimg(image), load_emit(model), nbhd);
  }
};

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t comma = text.find(',', pos);
    const std::string item =
        text.substr(pos, comma == std::string::npos ? std::string::npos
                                                    : comma - pos);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw CLI::ValidationError("--grid: cannot parse '" + item + "'");
    }
    if (used != item.size()) {
      throw CLI::ValidationError("--grid: cannot parse '" + item + "'");
    }
    grid.push_back(v);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return grid;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden Potts model: simulation, segmentation and "
               "pseudolikelihood estimation of the smoothness parameter"};
  app.require_subcommand(1);

  std::string nbhd_text = "second";
  std::string out;
  int exit_code = 0;

  const auto add_nbhd = [&](CLI::App* sub) {
    sub->add_option("--neighborhood", nbhd_text, "first|second")
        ->check(CLI::IsMember({"first", "second", "1", "2"}));
  };

  // simulate
  int rows = 128, cols = 128, classes = 2, sweeps = 1000;
  double beta = 0.3;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Draw a Potts realization");
  simulate->add_option("--rows", rows)->check(CLI::PositiveNumber);
  simulate->add_option("--cols", cols)->check(CLI::PositiveNumber);
  simulate->add_option("--classes", classes, "number of classes L")
      ->check(CLI::Range(2, 1 << 20));
  simulate->add_option("--beta", beta)->required();
  simulate->add_option("--sweeps", sweeps, "Swendsen-Wang sweeps")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--seed", seed);
  simulate->add_option("--out", out, "LMAP output")->required();
  add_nbhd(simulate);

  // emit
  std::string map_path, model_path, model_out, image_path, init_path;
  double sigma = 15.0, base_mean = 70.0, k = 1.0;
  auto* emit = app.add_subcommand("emit", "Gaussian observations for a map");
  emit->add_option("--map", map_path, "LMAP input")->required();
  auto* emit_model = emit->add_option("--model", model_path, "EMIT model");
  emit->add_option("--sigma", sigma)->excludes(emit_model);
  emit->add_option("--base-mean", base_mean)->excludes(emit_model);
  emit->add_option("--k", k, "class mean separation in sigmas")
      ->excludes(emit_model);
  emit->add_option("--model-out", model_out, "write the model used (EMIT)");
  emit->add_option("--seed", seed);
  emit->add_option("--out", out, "RIMG output")->required();

  // classify
  auto* classify = app.add_subcommand("classify", "Per-pixel ML classes");
  classify->add_option("--image", image_path)->required();
  classify->add_option("--model", model_path)->required();
  classify->add_option("--out", out, "LMAP output")->required();

  // icm
  int max_sweeps = 100;
  bool debug_objective = false;
  auto* icm_cmd = app.add_subcommand("icm", "Iterated conditional modes");
  icm_cmd->add_option("--image", image_path)->required();
  icm_cmd->add_option("--model", model_path)->required();
  icm_cmd->add_option("--init", init_path, "initial LMAP")->required();
  icm_cmd->add_option("--beta", beta)->required();
  icm_cmd->add_option("--max-sweeps", max_sweeps)->check(CLI::PositiveNumber);
  icm_cmd->add_flag("--debug-objective", debug_objective,
                    "verify the posterior objective never decreases");
  icm_cmd->add_option("--out", out, "LMAP output")->required();
  add_nbhd(icm_cmd);

  // estimate / curve share method + evidence
  std::string method_text = "prior";
  EvidenceArgs evidence;
  SolverOptions solver;
  auto* estimate = app.add_subcommand("estimate", "Pseudolikelihood beta");
  estimate->add_option("--method", method_text)
      ->check(CLI::IsMember({"prior", "post"}));
  estimate->add_option("--map", map_path)->required();
  estimate->add_option("--image", evidence.image);
  estimate->add_option("--model", evidence.model);
  estimate->add_option("--f-tol", solver.f_tolerance)->check(CLI::PositiveNumber);
  estimate->add_option("--beta-tol", solver.beta_tolerance)
      ->check(CLI::PositiveNumber);
  estimate->add_option("--max-iter", solver.max_iterations)
      ->check(CLI::PositiveNumber);
  estimate->add_option("--halfwidth", solver.initial_bracket_halfwidth)
      ->check(CLI::PositiveNumber);
  estimate->add_option("--out", out, "CSV output")->required();
  add_nbhd(estimate);

  std::string grid_text, variant;
  auto* curve = app.add_subcommand("curve", "Score function over a grid");
  curve->add_option("--method", method_text)
      ->check(CLI::IsMember({"prior", "post"}));
  curve->add_option("--map", map_path)->required();
  curve->add_option("--image", evidence.image);
  curve->add_option("--model", evidence.model);
  curve->add_option("--grid", grid_text, "comma separated increasing betas")
      ->required();
  curve->add_option("--variant", variant,
                    "label for the variant column (default: method)");
  curve->add_option("--out", out, "CSV output")->required();
  add_nbhd(curve);

  auto* check = app.add_subcommand("check", "Root existence condition");
  check->add_option("--map", map_path)->required();
  check->add_option("--out", out, "result file")->required();
  add_nbhd(check);

  std::string config_path, out_dir;
  unsigned threads = 0;
  auto* experiment = app.add_subcommand("experiment", "Monte Carlo study");
  experiment->add_option("--config", config_path)->required();
  experiment->add_option("--out-dir", out_dir)->required();
  experiment->add_option("--threads", threads, "worker cap (0: all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? 0 : kUsageError;
  }

  try {
    const Neighborhood nbhd = parse_neighborhood(nbhd_text);
    const Method method = parse_method(method_text);

    if (simulate->parsed()) {
      SamplerConfig cfg{beta, sweeps, seed, nbhd};
      const LabelField field = simulate_potts(GridDims(rows, cols), classes, cfg);
      save_lmap(out, field);
      write_metadata(out, {{"command", "simulate"},
                           {"rows", std::to_string(rows)},
                           {"cols", std::to_string(cols)},
                           {"L", std::to_string(classes)},
                           {"beta", format_double(beta)},
                           {"sweeps", std::to_string(sweeps)},
                           {"seed", std::to_string(seed)},
                           {"rng", std::string(Rng::kAlgorithm)},
                           {"neighborhood", to_string(nbhd)}});
    } else if (emit->parsed()) {
      const LabelField field = load_lmap(map_path);
      const EmissionModel model =
          model_path.empty()
              ? build_separated_model(field.num_classes(), base_mean, sigma, k)
              : load_emit(model_path);
      Rng rng(seed);
      save_rimg(out, sample_emission(field, model, rng));
      if (!model_out.empty()) save_emit(model_out, model);
      Metadata meta{{"command", "emit"}, {"map", map_path}};
      if (model_path.empty()) {
        meta.insert(meta.end(), {{"sigma", format_double(sigma)},
                                 {"base_mean", format_double(base_mean)},
                                 {"k", format_double(k)}});
      } else {
        meta.emplace_back("model", model_path);
      }
      meta.insert(meta.end(), {{"seed", std::to_string(seed)},
                               {"rng", std::string(Rng::kAlgorithm)}});
      write_metadata(out, meta);
    } else if (classify->parsed()) {
      save_lmap(out, ml_classify(load_rimg(image_path), load_emit(model_path)));
      write_metadata(out, {{"command", "classify"},
                           {"image", image_path},
                           {"model", model_path}});
    } else if (icm_cmd->parsed()) {
      IcmOptions opts;
      opts.beta = beta;
      opts.max_sweeps = max_sweeps;
      opts.nbhd = nbhd;
      opts.debug_objective = debug_objective;
      const IcmResult res = icm(load_rimg(image_path), load_emit(model_path),
                                load_lmap(init_path), opts);
      save_lmap(out, res.field);
      const std::string summary = "sweeps=" + std::to_string(res.sweeps) +
                                  ", converged=" + bool_text(res.converged);
      std::cout << summary << '\n';
      Metadata meta{{"command", "icm"},
                    {"image", image_path},
                    {"model", model_path},
                    {"init", init_path},
                    {"beta", format_double(beta)},
                    {"max_sweeps", std::to_string(max_sweeps)},
                    {"neighborhood", to_string(nbhd)},
                    {"sweeps", std::to_string(res.sweeps)},
                    {"converged", bool_text(res.converged)}};
      if (debug_objective) {
        const auto& t = res.trace;
        const std::int64_t bad = t.decreases + t.sweep_decreases + t.drift_failures;
        std::cout << "objective_decreases=" << bad << '\n';
        meta.emplace_back("objective_decreases", std::to_string(bad));
      }
      write_metadata(out, meta);
    } else if (estimate->parsed()) {
      const LabelField map = load_lmap(map_path);
      const auto ctx = evidence.context(map, nbhd, method);
      auto csv = open_output(out);
      csv << "method,beta_hat,residual,iterations,degenerate\n";
      Metadata meta{{"command", "estimate"},
                    {"method", to_string(method)},
                    {"map", map_path},
                    {"image", evidence.image},
                    {"model", evidence.model},
                    {"neighborhood", to_string(nbhd)},
                    {"f_tolerance", format_double(solver.f_tolerance)},
                    {"beta_tolerance", format_double(solver.beta_tolerance)},
                    {"max_iterations", std::to_string(solver.max_iterations)},
                    {"initial_bracket_halfwidth",
                     format_double(solver.initial_bracket_halfwidth)}};
      try {
        const EstimationResult r = estimate_beta(*ctx, method, solver);
        if (r.degenerate) {
          csv << to_string(method) << ",NA,NA,0,1\n";
          meta.emplace_back("status", "degenerate");
          std::cerr << "root condition fails: no unique estimate\n";
          exit_code = kDegenerate;
        } else {
          csv << to_string(method) << ',' << format_double(r.beta_hat) << ','
              << format_double(r.residual) << ',' << r.iterations << ",0\n";
          meta.emplace_back("status", "ok");
        }
      } catch (const NonConvergenceError& e) {
        csv << to_string(method) << ",NA,NA," << solver.max_iterations
            << ",0\n";
        meta.emplace_back("status", "nonconvergent");
        std::cerr << e.what() << '\n';
        exit_code = kDegenerate;
      }
      write_metadata(out, meta);
    } else if (curve->parsed()) {
      const LabelField map = load_lmap(map_path);
      const auto ctx = evidence.context(map, nbhd, method);
      const std::vector<double> grid = parse_grid(grid_text);
      const std::string label = variant.empty() ? to_string(method) : variant;
      auto csv = open_output(out);
      csv << "beta,score,variant\n";
      for (const CurvePoint& p : sample_curve(*ctx, method, grid)) {
        csv << format_double(p.beta) << ',' << format_double(p.score) << ','
            << label << '\n';
      }
      write_metadata(out, {{"command", "curve"},
                           {"method", to_string(method)},
                           {"map", map_path},
                           {"image", evidence.image},
                           {"model", evidence.model},
                           {"grid", grid_text},
                           {"variant", label},
                           {"neighborhood", to_string(nbhd)}});
    } else if (check->parsed()) {
      const bool ok = root_condition(load_lmap(map_path), nbhd);
      const std::string line = "root_condition=" + bool_text(ok);
      std::cout << line << '\n';
      open_output(out) << line << '\n';
      write_metadata(out, {{"command", "check"},
                           {"map", map_path},
                           {"neighborhood", to_string(nbhd)}});
    } else if (experiment->parsed()) {
      ExperimentConfig cfg = load_experiment_config(config_path);
      if (threads != 0) cfg.threads = threads;
      const ExperimentResult result = run_experiment(cfg);
      write_experiment_outputs(out_dir, result);
      Metadata meta = describe(cfg);
      meta.insert(meta.begin(), {{"command", "experiment"}, {"config", config_path}});
      write_metadata(fs::path(out_dir) / "experiment", meta);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsageError;
  } catch (const NonConvergenceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return exit_code;
}
