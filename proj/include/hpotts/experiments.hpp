#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "hpotts/estimator.hpp"
#include "hpotts/io.hpp"
#include "hpotts/lattice.hpp"

namespace hpotts {

// Which map the estimators see: the simulated truth, its per-pixel ML
// classification, or the ICM segmentation started from the ML map.
enum class Scenario { pure, ml, icm };

std::string to_string(Scenario scenario);
Scenario parse_scenario(const std::string& text);

// "prior", "post", "prior_ml", "post_ml", "prior_icm", "post_icm".
std::string variant_name(Method method, Scenario scenario);

struct ExperimentConfig {
  GridDims dims{128, 128};
  std::vector<int> num_classes{2, 3, 4};
  std::vector<double> betas{0.1, 0.2, 0.3, 0.4, 0.45, 0.5,
                            0.6, 0.7, 0.8, 0.9, 1.0};
  std::vector<double> separations{1.0, 2.0, 3.0, 4.0};
  double sigma = 15.0;
  double base_mean = 70.0;
  int replications = 30;
  std::uint64_t master_seed = 20140101;
  std::vector<Scenario> scenarios{Scenario::pure, Scenario::ml, Scenario::icm};
  std::vector<double> curve_grid;  // empty: no curves
  int sweeps = 1000;
  int icm_max_sweeps = 100;
  Neighborhood nbhd = Neighborhood::second;
  SolverOptions solver;
  unsigned threads = 0;  // 0: hardware concurrency
};

// Line-oriented "key = value" text, '#' starts a comment, lists are
// comma separated. Keys: rows, cols, L_values, beta_values, k_values, sigma,
// base_mean, replications, master_seed, scenarios, curve_beta_grid, sweeps,
// icm_max_sweeps, neighborhood, threads. Omitted keys keep their defaults.
ExperimentConfig parse_experiment_config(std::istream& in,
                                         const std::string& source = "config");
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// Resolved parameter set, for metadata sidecars.
Metadata describe(const ExperimentConfig& config);

struct ReplicationParams {
  GridDims dims{128, 128};
  int num_classes = 2;
  double beta = 0.3;
  double k = 1.0;
  double sigma = 15.0;
  double base_mean = 70.0;
  int sweeps = 1000;
  int icm_max_sweeps = 100;
  Neighborhood nbhd = Neighborhood::second;
  std::vector<Scenario> scenarios{Scenario::pure, Scenario::ml, Scenario::icm};
  std::vector<double> curve_grid;
  SolverOptions solver;
};

struct ReplicationSeeds {
  std::uint64_t field = 0;
  std::uint64_t emission = 0;
};

struct EstimateRecord {
  Scenario scenario;
  Method method;
  double beta_hat;  // NaN when degenerate
  bool degenerate;
  double slope;     // f'(beta_hat), NaN when degenerate
};

struct CurveRecord {
  Scenario scenario;
  Method method;
  std::vector<CurvePoint> points;
};

struct ReplicationRecord {
  std::vector<EstimateRecord> estimates;
  std::vector<CurveRecord> curves;

  const EstimateRecord& find(Scenario scenario, Method method) const;
};

// simulate -> emit -> ML classify -> ICM -> estimate on each requested map
// with both methods. Solver non-convergence propagates as
// NonConvergenceError tagged with scenario and method.
ReplicationRecord run_replication(const ReplicationParams& params,
                                  const ReplicationSeeds& seeds);

// Same pipeline on a given true map, so several separations can share one
// simulated field.
ReplicationRecord run_pipeline(const LabelField& truth,
                               const ReplicationParams& params,
                               std::uint64_t emission_seed);

struct AccuracyRow {
  int num_classes;
  double beta;
  double k;
  Method method;
  Scenario scenario;
  bool available;  // false when fewer than 2 non-degenerate estimates
  double rmse;
  double mean;
  double std;      // sample standard deviation, denominator r - 1
  double bias;
  int degenerate_count;
  int used;        // non-degenerate replications r
};

// Summary over one cell's estimates. Degenerate ones are excluded and
// counted; accumulation runs in the given order.
AccuracyRow aggregate(int num_classes, double beta, double k, Method method,
                      Scenario scenario,
                      std::span<const EstimateRecord> records);

struct ReplicationOutcome {
  int num_classes;
  double beta;
  double k;
  int replication;
  ReplicationRecord record;
};

struct ExperimentResult {
  std::vector<AccuracyRow> rows;
  std::vector<ReplicationOutcome> replications;
};

// Seeds: field = derive_seed(master, {L, bits(beta), rep, 0}),
// emission = derive_seed(master, {L, bits(beta), bits(k), rep, 1}).
// Output does not depend on the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

// accuracy.csv: L,beta,k,method,scenario,rmse,mean,std,bias,degenerate_count
void write_accuracy_csv(std::ostream& out, std::span<const AccuracyRow> rows);
// bias.csv: L,k,beta,method,scenario,bias
void export_bias_vs_beta(std::ostream& out, std::span<const AccuracyRow> rows);
// curves.csv: L,true_beta,k,replication,variant,beta,score
void export_curve_bundles(std::ostream& out, const ExperimentResult& result);

// Writes accuracy.csv, bias.csv, curves.csv into `dir`.
void write_experiment_outputs(const std::filesystem::path& dir,
                              const ExperimentResult& result);

}  // namespace hpotts
