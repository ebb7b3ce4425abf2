#pragma once

#include <cstdint>
#include <vector>

#include "hpotts/lattice.hpp"
#include "hpotts/rng.hpp"

namespace hpotts {

struct SamplerConfig {
  double beta = 0.0;
  // Burn-in length in Swendsen-Wang sweeps. Mixing slows near the critical
  // region (beta around 0.4-0.6 for L = 2..4 under the second-order system);
  // raise this when sampling there on large grids.
  int sweeps = 1000;
  std::uint64_t seed = 0;
  Neighborhood nbhd = Neighborhood::second;
};

// Swendsen-Wang cluster update for the Potts prior
//   f(x) ∝ exp{beta U(x)}.
// Each agreeing neighbor pair is bonded with probability 1 - exp(-beta);
// every connected component of the bond graph gets a fresh uniform label.
// Keeps union-find buffers between sweeps.
class SwendsenWang {
 public:
  explicit SwendsenWang(Neighborhood nbhd = Neighborhood::second)
      : nbhd_(nbhd) {}

  void sweep(LabelField& field, double beta, Rng& rng);

 private:
  int find(int i);
  void unite(int a, int b);

  Neighborhood nbhd_;
  std::vector<int> parent_;
  std::vector<int> size_;
  std::vector<int> new_label_;
};

void swendsen_wang_sweep(LabelField& field, double beta, Rng& rng,
                         Neighborhood nbhd = Neighborhood::second);

// Raster-order single-site heat bath: each site is redrawn from
//   P(x_s = l | rest) ∝ exp{beta U_s(l)}.
void gibbs_sweep(LabelField& field, double beta, Rng& rng,
                 Neighborhood nbhd = Neighborhood::second);

// `config.sweeps` SW sweeps from an i.i.d. uniform start. Pure function of
// (dims, num_classes, config).
LabelField simulate_potts(const GridDims& dims, int num_classes,
                          const SamplerConfig& config);

}  // namespace hpotts
