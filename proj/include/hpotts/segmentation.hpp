#pragma once

#include <cstdint>

#include "hpotts/emission.hpp"
#include "hpotts/lattice.hpp"

namespace hpotts {

struct IcmOptions {
  int max_sweeps = 100;
  double beta = 0.0;
  Neighborhood nbhd = Neighborhood::second;
  // Re-derive the posterior log-objective around every site update and
  // after every sweep, and count decreases. Slow; for verification runs.
  bool debug_objective = false;
};

struct IcmTrace {
  std::int64_t updates_checked = 0;
  std::int64_t decreases = 0;        // single-site updates with negative gain
  std::int64_t sweep_decreases = 0;  // full recomputation fell across a sweep
  std::int64_t drift_failures = 0;   // running sum disagrees with recomputation
  double initial_objective = 0.0;
  double final_objective = 0.0;
};

struct IcmResult {
  LabelField field;
  int sweeps = 0;
  bool converged = false;
  IcmTrace trace;  // populated only with debug_objective
};

// sum_s ln p(I_s | x_s) + beta U(x): the log of the posterior up to a
// constant.
double posterior_objective(const RadiometricImage& image,
                           const EmissionModel& model, const LabelField& field,
                           double beta,
                           Neighborhood nbhd = Neighborhood::second);

// Iterated conditional modes, raster order, in place: each site moves to
// argmax_l [ln p(I_s|l) + beta U_s(l)] given the current field, keeping its
// label when that label already attains the max (otherwise the lowest
// maximizing index). Stops after a sweep with no change, or at max_sweeps.
IcmResult icm(const RadiometricImage& image, const EmissionModel& model,
              const LabelField& init, const IcmOptions& opts);

}  // namespace hpotts
