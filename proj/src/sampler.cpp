#include "hpotts/sampler.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "hpotts/error.hpp"

namespace hpotts {

namespace {

void require_beta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw ParameterError("sampler needs a finite beta >= 0, got " +
                         std::to_string(beta));
  }
}

// P(u < t) for u uniform on 32-bit words equals t / 2^32.
std::uint32_t bond_threshold(double beta) {
  const double p = -std::expm1(-beta);
  if (p <= 0.0) return 0;
  const double scaled = std::ldexp(p, 32);
  if (scaled >= 4294967295.0) return std::numeric_limits<std::uint32_t>::max();
  return static_cast<std::uint32_t>(scaled);
}

}  // namespace

int SwendsenWang::find(int i) {
  while (parent_[i] != i) {
    parent_[i] = parent_[parent_[i]];
    i = parent_[i];
  }
  return i;
}

void SwendsenWang::unite(int a, int b) {
  a = find(a);
  b = find(b);
  if (a == b) return;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
}

void SwendsenWang::sweep(LabelField& field, double beta, Rng& rng) {
  require_beta(beta);
  const GridDims& dims = field.dims();
  const int n = static_cast<int>(field.size());
  const int rows = dims.rows();
  const int cols = dims.cols();
  parent_.resize(n);
  size_.assign(n, 1);
  new_label_.assign(n, -1);
  std::iota(parent_.begin(), parent_.end(), 0);

  const std::uint32_t threshold = bond_threshold(beta);
  int* x = field.mutable_labels().data();

  // Forward pairs of site s: right, below, and for second order the two
  // lower diagonals. Every site consumes two 64-bit words, split into four
  // 32-bit uniforms, whether or not a pair exists or agrees; drawing
  // unconditionally keeps the only data-dependent branch on the rarer
  // "bond opens" outcome.
  const bool diagonals = nbhd_ == Neighborhood::second;
  for (int r = 0; r < rows; ++r) {
    const bool has_below = r + 1 < rows;
    for (int c = 0; c < cols; ++c) {
      const int s = r * cols + c;
      const int label = x[s];
      const std::uint64_t w0 = rng();
      const std::uint64_t w1 = rng();
      const bool right = c + 1 < cols &&
                         (x[s + 1] == label) &
                             (static_cast<std::uint32_t>(w0 >> 32) < threshold);
      if (right) unite(s, s + 1);
      if (!has_below) continue;
      const int below = s + cols;
      const bool down = (x[below] == label) &
                        (static_cast<std::uint32_t>(w0) < threshold);
      if (down) unite(s, below);
      if (!diagonals) continue;
      const bool down_left =
          c > 0 && (x[below - 1] == label) &
                       (static_cast<std::uint32_t>(w1 >> 32) < threshold);
      if (down_left) unite(s, below - 1);
      const bool down_right =
          c + 1 < cols && (x[below + 1] == label) &
                              (static_cast<std::uint32_t>(w1) < threshold);
      if (down_right) unite(s, below + 1);
    }
  }

  const int num_classes = field.num_classes();
  for (int s = 0; s < n; ++s) {
    const int root = find(s);
    if (new_label_[root] < 0) new_label_[root] = rng.uniform_index(num_classes);
    x[s] = new_label_[root];
  }
}

void swendsen_wang_sweep(LabelField& field, double beta, Rng& rng,
                         Neighborhood nbhd) {
  SwendsenWang sw(nbhd);
  sw.sweep(field, beta, rng);
}

void gibbs_sweep(LabelField& field, double beta, Rng& rng, Neighborhood nbhd) {
  const GridDims& dims = field.dims();
  const int num_classes = field.num_classes();
  std::span<int> x = field.mutable_labels();
  std::vector<int> counts(num_classes);
  std::vector<double> weight(num_classes);

  for (std::size_t s = 0; s < field.size(); ++s) {
    std::fill(counts.begin(), counts.end(), 0);
    for_each_neighbor(dims, dims.site(s), nbhd,
                      [&](std::size_t t) { ++counts[x[t]]; });
    int top = 0;
    for (int c : counts) top = std::max(top, c);
    double total = 0.0;
    for (int l = 0; l < num_classes; ++l) {
      weight[l] = std::exp(beta * (counts[l] - top));
      total += weight[l];
    }
    double u = rng.uniform() * total;
    int pick = num_classes - 1;
    for (int l = 0; l < num_classes; ++l) {
      if (u < weight[l]) {
        pick = l;
        break;
      }
      u -= weight[l];
    }
    x[s] = pick;
  }
}

LabelField simulate_potts(const GridDims& dims, int num_classes,
                          const SamplerConfig& config) {
  require_beta(config.beta);
  if (config.sweeps < 1) {
    throw ParameterError("sweeps must be >= 1, got " +
                         std::to_string(config.sweeps));
  }
  LabelField field(dims, num_classes);
  Rng rng(config.seed);
  for (int& label : field.mutable_labels()) {
    label = rng.uniform_index(num_classes);
  }
  SwendsenWang sw(config.nbhd);
  for (int i = 0; i < config.sweeps; ++i) sw.sweep(field, config.beta, rng);
  return field;
}

}  // namespace hpotts
