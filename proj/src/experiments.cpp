#include "hpotts/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <thread>

#include "hpotts/emission.hpp"
#include "hpotts/error.hpp"
#include "hpotts/rng.hpp"
#include "hpotts/sampler.hpp"
#include "hpotts/segmentation.hpp"

namespace hpotts {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class ConfigLine {
 public:
  ConfigLine(const std::string& source, int line, std::string key)
      : source_(source), line_(line), key_(std::move(key)) {}

  [[noreturn]] void fail(const std::string& why) const {
    throw ParseError(source_ + ": line " + std::to_string(line_) + ", key '" +
                     key_ + "': " + why);
  }

  template <class T>
  T number(const std::string& text) const {
    T value{};
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), last, value);
    if (ec != std::errc() || ptr != last) fail("cannot parse '" + text + "'");
    return value;
  }

  template <class T>
  std::vector<T> list(const std::string& value) const {
    std::vector<T> out;
    for (const auto& item : split_list(value)) out.push_back(number<T>(item));
    return out;
  }

 private:
  const std::string& source_;
  int line_;
  std::string key_;
};

template <class T>
std::string join(const std::vector<T>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_same_v<T, double>) {
      out += format_double(values[i]);
    } else if constexpr (std::is_same_v<T, Scenario>) {
      out += to_string(values[i]);
    } else {
      out += std::to_string(values[i]);
    }
  }
  return out;
}

// Summary statistics of an unavailable cell are written as NA.
std::string csv_number(const AccuracyRow& row, double v) {
  return row.available && !std::isnan(v) ? format_double(v) : "NA";
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

bool contains(const std::vector<Scenario>& set, Scenario s) {
  return std::find(set.begin(), set.end(), s) != set.end();
}

}  // namespace

std::string to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::pure: return "pure";
    case Scenario::ml: return "ml";
    case Scenario::icm: return "icm";
  }
  return "pure";
}

Scenario parse_scenario(const std::string& text) {
  if (text == "pure") return Scenario::pure;
  if (text == "ml") return Scenario::ml;
  if (text == "icm") return Scenario::icm;
  throw ParameterError("unknown scenario '" + text + "' (expected pure|ml|icm)");
}

std::string variant_name(Method method, Scenario scenario) {
  std::string name = to_string(method);
  if (scenario != Scenario::pure) name += "_" + to_string(scenario);
  return name;
}

ExperimentConfig parse_experiment_config(std::istream& in,
                                         const std::string& source) {
  ExperimentConfig cfg;
  int rows = cfg.dims.rows();
  int cols = cfg.dims.cols();
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source + ": line " + std::to_string(line_no) +
                       ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const ConfigLine at(source, line_no, key);

    if (key == "rows") {
      rows = at.number<int>(value);
    } else if (key == "cols") {
      cols = at.number<int>(value);
    } else if (key == "L_values") {
      cfg.num_classes = at.list<int>(value);
    } else if (key == "beta_values") {
      cfg.betas = at.list<double>(value);
    } else if (key == "k_values") {
      cfg.separations = at.list<double>(value);
    } else if (key == "sigma") {
      cfg.sigma = at.number<double>(value);
    } else if (key == "base_mean") {
      cfg.base_mean = at.number<double>(value);
    } else if (key == "replications") {
      cfg.replications = at.number<int>(value);
    } else if (key == "master_seed") {
      cfg.master_seed = at.number<std::uint64_t>(value);
    } else if (key == "scenarios") {
      cfg.scenarios.clear();
      for (const auto& item : split_list(value)) {
        try {
          cfg.scenarios.push_back(parse_scenario(item));
        } catch (const ParameterError& e) {
          at.fail(e.what());
        }
      }
    } else if (key == "curve_beta_grid") {
      cfg.curve_grid = at.list<double>(value);
    } else if (key == "sweeps") {
      cfg.sweeps = at.number<int>(value);
    } else if (key == "icm_max_sweeps") {
      cfg.icm_max_sweeps = at.number<int>(value);
    } else if (key == "neighborhood") {
      try {
        cfg.nbhd = parse_neighborhood(value);
      } catch (const ParameterError& e) {
        at.fail(e.what());
      }
    } else if (key == "threads") {
      cfg.threads = at.number<unsigned>(value);
    } else {
      at.fail("unknown key");
    }

    if (key == "rows" || key == "cols") {
      if (rows < 1 || cols < 1) at.fail("grid dimensions must be positive");
    } else if ((key == "replications" && cfg.replications < 1) ||
               (key == "sweeps" && cfg.sweeps < 1) ||
               (key == "icm_max_sweeps" && cfg.icm_max_sweeps < 1)) {
      at.fail("must be >= 1");
    } else if (key == "sigma" && !(cfg.sigma > 0.0)) {
      at.fail("must be positive");
    } else if (key == "L_values") {
      for (int l : cfg.num_classes) {
        if (l < 2) at.fail("class counts must be >= 2");
      }
    } else if (key == "beta_values") {
      for (double b : cfg.betas) {
        if (!(b >= 0.0) || !std::isfinite(b)) at.fail("betas must be finite and >= 0");
      }
    } else if (key == "k_values") {
      for (double k : cfg.separations) {
        if (!(k > 0.0)) at.fail("separations must be positive");
      }
    } else if (key == "curve_beta_grid") {
      for (std::size_t i = 1; i < cfg.curve_grid.size(); ++i) {
        if (!(cfg.curve_grid[i] > cfg.curve_grid[i - 1])) {
          at.fail("grid must be strictly increasing");
        }
      }
    }
  }
  cfg.dims = GridDims(rows, cols);
  if (cfg.num_classes.empty() || cfg.betas.empty() || cfg.separations.empty() ||
      cfg.scenarios.empty()) {
    throw ParseError(source +
                     ": L_values, beta_values, k_values and scenarios must be "
                     "non-empty");
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return parse_experiment_config(in, path.string());
}

Metadata describe(const ExperimentConfig& c) {
  return {
      {"rows", std::to_string(c.dims.rows())},
      {"cols", std::to_string(c.dims.cols())},
      {"L_values", join(c.num_classes)},
      {"beta_values", join(c.betas)},
      {"k_values", join(c.separations)},
      {"sigma", format_double(c.sigma)},
      {"base_mean", format_double(c.base_mean)},
      {"replications", std::to_string(c.replications)},
      {"master_seed", std::to_string(c.master_seed)},
      {"scenarios", join(c.scenarios)},
      {"curve_beta_grid", join(c.curve_grid)},
      {"sweeps", std::to_string(c.sweeps)},
      {"icm_max_sweeps", std::to_string(c.icm_max_sweeps)},
      {"neighborhood", to_string(c.nbhd)},
      {"rng", std::string(Rng::kAlgorithm)},
      {"f_tolerance", format_double(c.solver.f_tolerance)},
      {"beta_tolerance", format_double(c.solver.beta_tolerance)},
      {"max_iterations", std::to_string(c.solver.max_iterations)},
      {"initial_bracket_halfwidth",
       format_double(c.solver.initial_bracket_halfwidth)},
  };
}

const EstimateRecord& ReplicationRecord::find(Scenario scenario,
                                              Method method) const {
  for (const auto& e : estimates) {
    if (e.scenario == scenario && e.method == method) return e;
  }
  throw std::out_of_range("no estimate for " + variant_name(method, scenario));
}

ReplicationRecord run_pipeline(const LabelField& truth,
                               const ReplicationParams& params,
                               std::uint64_t emission_seed) {
  const EmissionModel model = build_separated_model(
      params.num_classes, params.base_mean, params.sigma, params.k);
  Rng rng(emission_seed);
  const RadiometricImage image = sample_emission(truth, model, rng);

  const bool want_ml = contains(params.scenarios, Scenario::ml);
  const bool want_icm = contains(params.scenarios, Scenario::icm);
  std::optional<LabelField> ml_map;
  std::optional<LabelField> icm_map;
  if (want_ml || want_icm) ml_map = ml_classify(image, model);
  if (want_icm) {
    IcmOptions opts;
    opts.beta = params.beta;
    opts.max_sweeps = params.icm_max_sweeps;
    opts.nbhd = params.nbhd;
    icm_map = icm(image, model, *ml_map, opts).field;
  }

  ReplicationRecord record;
  for (Scenario scenario : params.scenarios) {
    const LabelField& map = scenario == Scenario::pure ? truth
                            : scenario == Scenario::ml ? *ml_map
                                                       : *icm_map;
    const ScoreContext ctx(map, image, model, params.nbhd);
    for (Method method : {Method::prior, Method::post}) {
      EstimationResult est;
      try {
        est = estimate_beta(ctx, method, params.solver);
      } catch (const NonConvergenceError& e) {
        throw NonConvergenceError(std::string(e.what()) + " [scenario=" +
                                      to_string(scenario) + "]",
                                  e.bracket().first, e.bracket().second);
      }
      const double slope =
          est.degenerate ? kNaN : score_derivative(ctx, est.beta_hat, method);
      record.estimates.push_back(
          {scenario, method, est.beta_hat, est.degenerate, slope});
      if (!params.curve_grid.empty()) {
        record.curves.push_back(
            {scenario, method, sample_curve(ctx, method, params.curve_grid)});
      }
    }
  }
  return record;
}

ReplicationRecord run_replication(const ReplicationParams& params,
                                  const ReplicationSeeds& seeds) {
  SamplerConfig sc;
  sc.beta = params.beta;
  sc.sweeps = params.sweeps;
  sc.seed = seeds.field;
  sc.nbhd = params.nbhd;
  const LabelField truth = simulate_potts(params.dims, params.num_classes, sc);
  return run_pipeline(truth, params, seeds.emission);
}

AccuracyRow aggregate(int num_classes, double beta, double k, Method method,
                      Scenario scenario,
                      std::span<const EstimateRecord> records) {
  AccuracyRow row{num_classes, beta, k,    method, scenario, false,
                  kNaN,        kNaN, kNaN, kNaN,   0,        0};
  double sum = 0.0;
  double sum_sq_err = 0.0;
  for (const auto& r : records) {
    if (r.degenerate) {
      ++row.degenerate_count;
      continue;
    }
    ++row.used;
    sum += r.beta_hat;
    sum_sq_err += (r.beta_hat - beta) * (r.beta_hat - beta);
  }
  if (row.used < 2) return row;
  const double n = row.used;
  row.available = true;
  row.mean = sum / n;
  row.bias = row.mean - beta;
  row.rmse = std::sqrt(sum_sq_err / n);
  double ss = 0.0;
  for (const auto& r : records) {
    if (!r.degenerate) ss += (r.beta_hat - row.mean) * (r.beta_hat - row.mean);
  }
  row.std = std::sqrt(ss / (n - 1.0));
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  struct Task {
    int num_classes;
    double beta;
    int replication;
  };
  std::vector<Task> tasks;
  for (int l : config.num_classes) {
    for (double b : config.betas) {
      for (int r = 0; r < config.replications; ++r) tasks.push_back({l, b, r});
    }
  }
  const std::size_t num_k = config.separations.size();
  // slots[task * num_k + k_index]
  std::vector<ReplicationRecord> slots(tasks.size() * num_k);

  const auto run_task = [&](std::size_t i) {
    const Task& t = tasks[i];
    ReplicationParams p;
    p.dims = config.dims;
    p.num_classes = t.num_classes;
    p.beta = t.beta;
    p.sigma = config.sigma;
    p.base_mean = config.base_mean;
    p.sweeps = config.sweeps;
    p.icm_max_sweeps = config.icm_max_sweeps;
    p.nbhd = config.nbhd;
    p.scenarios = config.scenarios;
    p.curve_grid = config.curve_grid;
    p.solver = config.solver;

    SamplerConfig sc;
    sc.beta = t.beta;
    sc.sweeps = config.sweeps;
    sc.nbhd = config.nbhd;
    sc.seed = derive_seed(config.master_seed,
                          {static_cast<std::uint64_t>(t.num_classes),
                           bits(t.beta),
                           static_cast<std::uint64_t>(t.replication), 0});
    const LabelField truth = simulate_potts(config.dims, t.num_classes, sc);
    for (std::size_t ki = 0; ki < num_k; ++ki) {
      p.k = config.separations[ki];
      const std::uint64_t emission_seed = derive_seed(
          config.master_seed,
          {static_cast<std::uint64_t>(t.num_classes), bits(t.beta), bits(p.k),
           static_cast<std::uint64_t>(t.replication), 1});
      slots[i * num_k + ki] = run_pipeline(truth, p, emission_seed);
    }
  };

  unsigned workers = config.threads != 0 ? config.threads
                                         : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, tasks.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        run_task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = tasks.size();
        return;
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  ExperimentResult result;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    for (std::size_t ki = 0; ki < num_k; ++ki) {
      result.replications.push_back({tasks[i].num_classes, tasks[i].beta,
                                     config.separations[ki],
                                     tasks[i].replication,
                                     std::move(slots[i * num_k + ki])});
    }
  }

  // Replications of one (L, beta) block are contiguous per k; gather each
  // cell in replication order.
  const std::size_t reps = config.replications;
  for (std::size_t li = 0; li < config.num_classes.size(); ++li) {
    for (std::size_t bi = 0; bi < config.betas.size(); ++bi) {
      const std::size_t block = (li * config.betas.size() + bi) * reps * num_k;
      for (std::size_t ki = 0; ki < num_k; ++ki) {
        for (Scenario scenario : config.scenarios) {
          for (Method method : {Method::prior, Method::post}) {
            std::vector<EstimateRecord> cell;
            for (std::size_t r = 0; r < reps; ++r) {
              cell.push_back(result.replications[block + r * num_k + ki]
                                 .record.find(scenario, method));
            }
            result.rows.push_back(aggregate(
                config.num_classes[li], config.betas[bi],
                config.separations[ki], method, scenario, cell));
          }
        }
      }
    }
  }
  return result;
}

void write_accuracy_csv(std::ostream& out, std::span<const AccuracyRow> rows) {
  out << "L,beta,k,method,scenario,rmse,mean,std,bias,degenerate_count\n";
  for (const auto& r : rows) {
    out << r.num_classes << ',' << format_double(r.beta) << ','
        << format_double(r.k) << ',' << to_string(r.method) << ','
        << to_string(r.scenario) << ',' << csv_number(r, r.rmse) << ','
        << csv_number(r, r.mean) << ',' << csv_number(r, r.std) << ','
        << csv_number(r, r.bias) << ',' << r.degenerate_count << '\n';
  }
}

void export_bias_vs_beta(std::ostream& out, std::span<const AccuracyRow> rows) {
  out << "L,k,beta,method,scenario,bias\n";
  for (const auto& r : rows) {
    out << r.num_classes << ',' << format_double(r.k) << ','
        << format_double(r.beta) << ',' << to_string(r.method) << ','
        << to_string(r.scenario) << ',' << csv_number(r, r.bias) << '\n';
  }
}

void export_curve_bundles(std::ostream& out, const ExperimentResult& result) {
  out << "L,true_beta,k,replication,variant,beta,score\n";
  for (const auto& rep : result.replications) {
    for (const auto& curve : rep.record.curves) {
      const std::string variant = variant_name(curve.method, curve.scenario);
      for (const auto& pt : curve.points) {
        out << rep.num_classes << ',' << format_double(rep.beta) << ','
            << format_double(rep.k) << ',' << rep.replication << ','
            << variant << ',' << format_double(pt.beta) << ','
            << format_double(pt.score) << '\n';
      }
    }
  }
}

void write_experiment_outputs(const std::filesystem::path& dir,
                              const ExperimentResult& result) {
  std::filesystem::create_directories(dir);
  const auto open = [&](const char* name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  auto accuracy = open("accuracy.csv");
  write_accuracy_csv(accuracy, result.rows);
  auto bias = open("bias.csv");
  export_bias_vs_beta(bias, result.rows);
  auto curves = open("curves.csv");
  export_curve_bundles(curves, result);
}

}  // namespace hpotts
