#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hpotts/emission.hpp"
#include "hpotts/lattice.hpp"

namespace hpotts {

// Which pseudolikelihood is being maximized: the product of prior
// conditionals P(x_s | x_ds), or of posterior conditionals P(x_s | x_ds, I_s).
enum class Method { prior, post };

std::string to_string(Method method);
Method parse_method(const std::string& text);

// Label field plus optional evidence (image, emission model), reduced to the
// per-site statistics the score functions need: U_s(l) for every l and, with
// evidence, ln p(I_s | l).
class ScoreContext {
 public:
  explicit ScoreContext(const LabelField& field,
                        Neighborhood nbhd = Neighborhood::second);
  ScoreContext(const LabelField& field, const RadiometricImage& image,
               const EmissionModel& model,
               Neighborhood nbhd = Neighborhood::second);

  bool has_evidence() const { return !log_lik_.empty(); }
  int num_classes() const { return counts_.num_classes(); }
  std::size_t size() const { return counts_.size(); }
  Neighborhood neighborhood() const { return nbhd_; }
  const NeighborCountTable& counts() const { return counts_; }

  // ln p(I_s | l) for l = 0..L-1. Requires evidence.
  std::span<const double> log_likelihoods(std::size_t site) const {
    return {log_lik_.data() + site * counts_.num_classes(),
            static_cast<std::size_t>(counts_.num_classes())};
  }

 private:
  Neighborhood nbhd_;
  NeighborCountTable counts_;
  std::vector<double> log_lik_;
};

// f(beta) = sum_s U_s(x_s) - sum_s E_beta[U_s(X_s) | .], the conditional
// expectation taken under the prior weights exp{beta U_s(l)} or the posterior
// weights p(I_s|l) exp{beta U_s(l)}. Stabilized per site by subtracting the
// largest exponent, so it stays finite for any finite beta.
double score(const ScoreContext& ctx, double beta, Method method);

double score_prior(const LabelField& field, Neighborhood nbhd, double beta);
double score_post(const ScoreContext& ctx, double beta);

// df/dbeta = -sum_s Var_beta[U_s(X_s) | .] under the same conditional law.
double score_derivative(const ScoreContext& ctx, double beta, Method method);

// Prior score restricted to interior sites (full 8-neighborhood).
double score_prior_interior(const LabelField& field, double beta);

// --- grouped evaluation over neighborhood signatures --------------------

inline constexpr int kSignatureClasses = 22;

// Populations K_1..K_22 of interior sites per signature class, plus the
// interior part of sum_s U_s(x_s).
struct SignatureCounts {
  std::array<std::int64_t, kSignatureClasses> k{};
  std::int64_t interior_agreement = 0;
};

// 1-based class index of a partition of 8, or nullopt for anything else.
std::optional<int> signature_class(const Signature& sig);

// Closed-form expected neighbor agreement for class `index` (1..22):
//   sum_j c_j e^{e_j beta} / (sum_j d_j e^{e_j beta} + L - m).
double grouped_term(int index, int num_classes, double beta);

SignatureCounts count_signature_classes(const LabelField& field);

// Interior-site prior score as a 23-term sum over signature classes.
// Second-order neighborhood only; needs rows, cols >= 3.
double score_prior_grouped(const LabelField& field, double beta);
double score_prior_grouped(const SignatureCounts& counts, int num_classes,
                           double beta);

// --- root existence and solving -----------------------------------------

// True iff some site has U_s(x_s) > min_l U_s(l) and some site has
// U_t(x_t) < max_l U_t(l). Then f is strictly decreasing from a positive to
// a negative limit and has exactly one root.
bool root_condition(const LabelField& field,
                    Neighborhood nbhd = Neighborhood::second);
bool root_condition(const ScoreContext& ctx);

struct ScoreLimits {
  double at_minus_infinity;  // sum_s (U_s(x_s) - min_l U_s(l))
  double at_plus_infinity;   // sum_s (U_s(x_s) - max_l U_s(l))
};

ScoreLimits score_limits(const ScoreContext& ctx);

struct SolverOptions {
  double f_tolerance = 1e-8;
  double beta_tolerance = 1e-10;
  int max_iterations = 100;
  double initial_bracket_halfwidth = 1.0;
};

struct EstimationResult {
  Method method = Method::prior;
  double beta_hat = 0.0;  // NaN when degenerate
  double residual = 0.0;  // |f(beta_hat)|
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  bool degenerate = false;
};

// Root of the score. Brackets by doubling outward from [-h, h], then runs
// Newton steps on the analytic derivative, bisecting whenever a step would
// leave the bracket. A field failing root_condition yields a degenerate
// result rather than an error; exhausting max_iterations throws
// NonConvergenceError.
EstimationResult estimate_beta(const ScoreContext& ctx, Method method,
                               const SolverOptions& opts = {});

struct CurvePoint {
  double beta;
  double score;
};

std::vector<CurvePoint> sample_curve(const ScoreContext& ctx, Method method,
                                     std::span<const double> beta_grid);

}  // namespace hpotts
