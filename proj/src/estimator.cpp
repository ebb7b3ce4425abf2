#include "hpotts/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hpotts/error.hpp"

namespace hpotts {

namespace {

struct Moments {
  double residual = 0.0;  // sum_s (U_s(x_s) - E_s)
  double variance = 0.0;  // sum_s Var_s
};

// Per-site conditional moments of U_s(X_s) under weights
// exp{beta U_s(l) + lw_l}. `weights` is caller scratch of length L.
template <bool WithEvidence>
inline void site_moments(std::span<const int> counts,
                         std::span<const double> log_lik, double beta,
                         std::span<double> weights, double& mean,
                         double& var, bool want_var) {
  const std::size_t n = counts.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < n; ++l) {
    double e = beta * counts[l];
    if constexpr (WithEvidence) e += log_lik[l];
    weights[l] = e;
    top = std::max(top, e);
  }
  double z = 0.0;
  double m1 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    weights[l] = std::exp(weights[l] - top);
    z += weights[l];
    m1 += weights[l] * counts[l];
  }
  mean = m1 / z;
  if (!want_var) return;
  double m2 = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    const double d = counts[l] - mean;
    m2 += weights[l] * d * d;
  }
  var = m2 / z;
}

template <bool WithEvidence, class Include>
Moments accumulate(const ScoreContext& ctx, double beta, bool want_var,
                   Include&& include) {
  const NeighborCountTable& table = ctx.counts();
  std::vector<double> scratch(ctx.num_classes());
  Moments out;
  for (std::size_t s = 0; s < ctx.size(); ++s) {
    if (!include(s)) continue;
    double mean = 0.0;
    double var = 0.0;
    std::span<const double> lw;
    if constexpr (WithEvidence) lw = ctx.log_likelihoods(s);
    site_moments<WithEvidence>(table.counts(s), lw, beta, scratch, mean, var,
                               want_var);
    out.residual += table.own(s) - mean;
    out.variance += var;
  }
  return out;
}

Moments evaluate(const ScoreContext& ctx, double beta, Method method,
                 bool want_var) {
  const auto all = [](std::size_t) { return true; };
  if (method == Method::post) {
    if (!ctx.has_evidence()) {
      throw ContextError("posterior score needs an image and emission model");
    }
    return accumulate<true>(ctx, beta, want_var, all);
  }
  return accumulate<false>(ctx, beta, want_var, all);
}

// Grouped closed forms, one per signature class: numerator and
// denominator are sums of c * e^{x beta}, and the denominator gains L - m
// for the labels absent from the neighborhood.
struct ExpTerm {
  int coef;
  int exponent;
};

struct GroupedTerm {
  std::array<ExpTerm, 3> numerator;
  std::array<ExpTerm, 3> denominator;
  int absent_offset;  // m in "L - m"
};

// K_1 .. K_22 in table order. Unused slots have coef 0.
constexpr std::array<GroupedTerm, kSignatureClasses> kGroupedTerms{{
    {{{{8, 8}}}, {{{1, 8}}}, 1},
    {{{{7, 7}, {1, 1}}}, {{{1, 7}, {1, 1}}}, 2},
    {{{{6, 6}, {2, 2}}}, {{{1, 6}, {1, 2}}}, 2},
    {{{{6, 6}, {2, 1}}}, {{{1, 6}, {2, 1}}}, 3},
    {{{{5, 5}, {3, 3}}}, {{{1, 5}, {1, 3}}}, 2},
    {{{{5, 5}, {2, 2}, {1, 1}}}, {{{1, 5}, {1, 2}, {1, 1}}}, 3},
    {{{{5, 5}, {3, 1}}}, {{{1, 5}, {3, 1}}}, 4},
    {{{{8, 4}}}, {{{2, 4}}}, 2},
    {{{{4, 4}, {3, 3}, {1, 1}}}, {{{1, 4}, {1, 3}, {1, 1}}}, 3},
    {{{{4, 4}, {4, 2}}}, {{{1, 4}, {2, 2}}}, 3},
    {{{{4, 4}, {2, 2}, {2, 1}}}, {{{1, 4}, {1, 2}, {2, 1}}}, 4},
    {{{{4, 4}, {4, 1}}}, {{{1, 4}, {4, 1}}}, 5},
    {{{{6, 3}, {2, 2}}}, {{{2, 3}, {1, 2}}}, 3},
    {{{{6, 3}, {2, 1}}}, {{{2, 3}, {2, 1}}}, 4},
    {{{{3, 3}, {4, 2}, {1, 1}}}, {{{1, 3}, {2, 2}, {1, 1}}}, 4},
    {{{{3, 3}, {2, 2}, {3, 1}}}, {{{1, 3}, {1, 2}, {3, 1}}}, 5},
    {{{{3, 3}, {5, 1}}}, {{{1, 3}, {5, 1}}}, 6},
    {{{{8, 2}}}, {{{4, 2}}}, 4},
    {{{{6, 2}, {2, 1}}}, {{{3, 2}, {2, 1}}}, 5},
    {{{{4, 2}, {4, 1}}}, {{{2, 2}, {4, 1}}}, 6},
    {{{{2, 2}, {6, 1}}}, {{{1, 2}, {6, 1}}}, 7},
    {{{{8, 1}}}, {{{8, 1}}}, 8},
}};

// Closed form implied by a signature, in the same shape as a table entry:
// each distinct part value v with multiplicity r contributes r*v e^{v beta}
// above and r e^{v beta} below.
GroupedTerm term_from_signature(const Signature& sig) {
  GroupedTerm t{};
  std::size_t slot = 0;
  for (std::size_t i = 0; i < sig.size();) {
    std::size_t j = i;
    while (j < sig.size() && sig[j] == sig[i]) ++j;
    const int mult = static_cast<int>(j - i);
    if (slot == t.numerator.size()) return GroupedTerm{};
    t.numerator[slot] = {mult * sig[i], sig[i]};
    t.denominator[slot] = {mult, sig[i]};
    ++slot;
    i = j;
  }
  t.absent_offset = static_cast<int>(sig.size());
  return t;
}

bool same_terms(const std::array<ExpTerm, 3>& a,
                const std::array<ExpTerm, 3>& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].coef != b[i].coef) return false;
    if (a[i].coef != 0 && a[i].exponent != b[i].exponent) return false;
  }
  return true;
}

bool is_interior(const GridDims& dims, std::size_t s) {
  const Site p = dims.site(s);
  return p.row > 0 && p.row < dims.rows() - 1 && p.col > 0 &&
         p.col < dims.cols() - 1;
}

void require_interior(const GridDims& dims) {
  if (dims.rows() < 3 || dims.cols() < 3) {
    throw DomainError("grouped evaluation needs at least 3x3 sites, got " +
                      std::to_string(dims.rows()) + "x" +
                      std::to_string(dims.cols()));
  }
}

}  // namespace

std::string to_string(Method method) {
  return method == Method::prior ? "prior" : "post";
}

Method parse_method(const std::string& text) {
  if (text == "prior") return Method::prior;
  if (text == "post") return Method::post;
  throw ParameterError("unknown method '" + text + "' (expected prior|post)");
}

ScoreContext::ScoreContext(const LabelField& field, Neighborhood nbhd)
    : nbhd_(nbhd), counts_(field, nbhd) {}

ScoreContext::ScoreContext(const LabelField& field,
                           const RadiometricImage& image,
                           const EmissionModel& model, Neighborhood nbhd)
    : nbhd_(nbhd), counts_(field, nbhd) {
  if (!(image.dims() == field.dims())) {
    throw ContextError("image dimensions do not match the label field");
  }
  if (model.num_classes() != field.num_classes()) {
    throw ContextError("emission model has " +
                       std::to_string(model.num_classes()) +
                       " classes, label field has " +
                       std::to_string(field.num_classes()));
  }
  log_lik_ = log_likelihood_table(image, model);
}

double score(const ScoreContext& ctx, double beta, Method method) {
  return evaluate(ctx, beta, method, false).residual;
}

double score_prior(const LabelField& field, Neighborhood nbhd, double beta) {
  return score(ScoreContext(field, nbhd), beta, Method::prior);
}

double score_post(const ScoreContext& ctx, double beta) {
  return score(ctx, beta, Method::post);
}

double score_derivative(const ScoreContext& ctx, double beta, Method method) {
  return -evaluate(ctx, beta, method, true).variance;
}

double score_prior_interior(const LabelField& field, double beta) {
  require_interior(field.dims());
  const ScoreContext ctx(field, Neighborhood::second);
  const GridDims& dims = field.dims();
  return accumulate<false>(ctx, beta, false, [&](std::size_t s) {
           return is_interior(dims, s);
         }).residual;
}

std::optional<int> signature_class(const Signature& sig) {
  int total = 0;
  for (int part : sig) total += part;
  if (total != 8) return std::nullopt;
  const GroupedTerm wanted = term_from_signature(sig);
  for (int i = 0; i < kSignatureClasses; ++i) {
    const GroupedTerm& p = kGroupedTerms[i];
    if (p.absent_offset == wanted.absent_offset &&
        same_terms(p.numerator, wanted.numerator) &&
        same_terms(p.denominator, wanted.denominator)) {
      return i + 1;
    }
  }
  return std::nullopt;
}

double grouped_term(int index, int num_classes, double beta) {
  if (index < 1 || index > kSignatureClasses) {
    throw std::out_of_range("signature class index " + std::to_string(index));
  }
  const GroupedTerm& t = kGroupedTerms[index - 1];
  double shift = 0.0;  // exponent of the constant L - m term
  for (const ExpTerm& d : t.denominator) {
    if (d.coef != 0) shift = std::max(shift, beta * d.exponent);
  }
  double num = 0.0;
  double den = (num_classes - t.absent_offset) * std::exp(-shift);
  for (const ExpTerm& e : t.numerator) {
    if (e.coef != 0) num += e.coef * std::exp(beta * e.exponent - shift);
  }
  for (const ExpTerm& d : t.denominator) {
    if (d.coef != 0) den += d.coef * std::exp(beta * d.exponent - shift);
  }
  return num / den;
}

SignatureCounts count_signature_classes(const LabelField& field) {
  require_interior(field.dims());
  const GridDims& dims = field.dims();
  SignatureCounts out;
  for (int r = 1; r < dims.rows() - 1; ++r) {
    for (int c = 1; c < dims.cols() - 1; ++c) {
      const NeighborCounts nc = neighbor_label_counts(field, {r, c});
      const auto index = signature_class(histogram_signature(nc));
      // Interior sites always have degree 8, so the lookup cannot miss.
      ++out.k[*index - 1];
      out.interior_agreement += nc.counts[field[dims.index({r, c})]];
    }
  }
  return out;
}

double score_prior_grouped(const SignatureCounts& counts, int num_classes,
                           double beta) {
  double total = static_cast<double>(counts.interior_agreement);
  for (int i = 0; i < kSignatureClasses; ++i) {
    if (counts.k[i] != 0) {
      total -= static_cast<double>(counts.k[i]) *
               grouped_term(i + 1, num_classes, beta);
    }
  }
  return total;
}

double score_prior_grouped(const LabelField& field, double beta) {
  return score_prior_grouped(count_signature_classes(field),
                             field.num_classes(), beta);
}

bool root_condition(const ScoreContext& ctx) {
  const NeighborCountTable& table = ctx.counts();
  bool above_min = false;
  bool below_max = false;
  for (std::size_t s = 0; s < table.size() && !(above_min && below_max); ++s) {
    const auto c = table.counts(s);
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    if (table.own(s) > *lo) above_min = true;
    if (table.own(s) < *hi) below_max = true;
  }
  return above_min && below_max;
}

bool root_condition(const LabelField& field, Neighborhood nbhd) {
  return root_condition(ScoreContext(field, nbhd));
}

ScoreLimits score_limits(const ScoreContext& ctx) {
  const NeighborCountTable& table = ctx.counts();
  ScoreLimits out{0.0, 0.0};
  for (std::size_t s = 0; s < table.size(); ++s) {
    const auto c = table.counts(s);
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    out.at_minus_infinity += table.own(s) - *lo;
    out.at_plus_infinity += table.own(s) - *hi;
  }
  return out;
}

EstimationResult estimate_beta(const ScoreContext& ctx, Method method,
                               const SolverOptions& opts) {
  if (!(opts.f_tolerance > 0.0) || !(opts.beta_tolerance > 0.0) ||
      opts.max_iterations < 1 || !(opts.initial_bracket_halfwidth > 0.0)) {
    throw ParameterError("solver options must all be positive");
  }
  if (method == Method::post && !ctx.has_evidence()) {
    throw ContextError("posterior estimate needs an image and emission model");
  }

  EstimationResult result;
  result.method = method;
  if (!root_condition(ctx)) {
    result.degenerate = true;
    result.beta_hat = std::numeric_limits<double>::quiet_NaN();
    result.residual = std::numeric_limits<double>::quiet_NaN();
    result.bracket_lo = result.bracket_hi =
        std::numeric_limits<double>::quiet_NaN();
    return result;
  }

  const auto f = [&](double b) { return score(ctx, b, method); };
  int iterations = 0;
  const auto give_up = [&](double lo, double hi) {
    throw NonConvergenceError(
        to_string(method) + " estimate did not converge in " +
            std::to_string(opts.max_iterations) + " iterations",
        lo, hi);
  };
  const auto finish = [&](double beta, double fb, double lo, double hi) {
    result.beta_hat = beta;
    result.residual = std::abs(fb);
    result.iterations = iterations;
    result.bracket_lo = lo;
    result.bracket_hi = hi;
    return result;
  };

  // f is strictly decreasing: the root lies where f changes from + to -.
  double lo = -opts.initial_bracket_halfwidth;
  double hi = opts.initial_bracket_halfwidth;
  double flo = f(lo);
  double fhi = f(hi);
  while (!(flo >= 0.0 && fhi <= 0.0)) {
    if (++iterations > opts.max_iterations) give_up(lo, hi);
    if (fhi > 0.0) {
      lo = hi;
      flo = fhi;
      hi *= 2.0;
      fhi = f(hi);
    } else {
      hi = lo;
      fhi = flo;
      lo *= 2.0;
      flo = f(lo);
    }
  }
  if (std::abs(flo) <= opts.f_tolerance) return finish(lo, flo, lo, hi);
  if (std::abs(fhi) <= opts.f_tolerance) return finish(hi, fhi, lo, hi);

  double x = std::abs(flo) < std::abs(fhi) ? lo : hi;
  double fx = x == lo ? flo : fhi;
  double dfx = score_derivative(ctx, x, method);
  for (;;) {
    if (++iterations > opts.max_iterations) give_up(lo, hi);
    double next = x - fx / dfx;
    if (!(dfx < 0.0) || !(next > lo && next < hi)) next = 0.5 * (lo + hi);
    x = next;
    const Moments m = evaluate(ctx, x, method, true);
    fx = m.residual;
    dfx = -m.variance;
    if (fx > 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (std::abs(fx) <= opts.f_tolerance || hi - lo <= opts.beta_tolerance) {
      return finish(x, fx, lo, hi);
    }
  }
}

std::vector<CurvePoint> sample_curve(const ScoreContext& ctx, Method method,
                                     std::span<const double> beta_grid) {
  if (beta_grid.empty()) throw ParameterError("empty beta grid");
  for (std::size_t i = 1; i < beta_grid.size(); ++i) {
    if (!(beta_grid[i] > beta_grid[i - 1])) {
      throw ParameterError("beta grid must be strictly increasing");
    }
  }
  std::vector<CurvePoint> out;
  out.reserve(beta_grid.size());
  for (double b : beta_grid) out.push_back({b, score(ctx, b, method)});
  return out;
}

}  // namespace hpotts
