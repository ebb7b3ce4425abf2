#include "hpotts/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "hpotts/error.hpp"

namespace hpotts {

double posterior_objective(const RadiometricImage& image,
                           const EmissionModel& model, const LabelField& field,
                           double beta, Neighborhood nbhd) {
  double total = 0.0;
  for (std::size_t s = 0; s < field.size(); ++s) {
    total += class_log_likelihood(image[s], model, field[s]);
  }
  return total + beta * static_cast<double>(global_agreement(field, nbhd));
}

IcmResult icm(const RadiometricImage& image, const EmissionModel& model,
              const LabelField& init, const IcmOptions& opts) {
  if (!(image.dims() == init.dims())) {
    throw ContextError("ICM image and initial map differ in dimensions");
  }
  if (model.num_classes() != init.num_classes()) {
    throw ContextError("ICM model has " + std::to_string(model.num_classes()) +
                       " classes, initial map has " +
                       std::to_string(init.num_classes()));
  }
  if (opts.max_sweeps < 1) {
    throw ParameterError("max_sweeps must be >= 1");
  }

  const GridDims& dims = init.dims();
  const int num_classes = init.num_classes();
  const std::vector<double> log_lik = log_likelihood_table(image, model);

  IcmResult out{init, 0, false, {}};
  std::span<int> x = out.field.mutable_labels();
  std::vector<int> counts(num_classes);

  double running = 0.0;
  if (opts.debug_objective) {
    running = posterior_objective(image, model, out.field, opts.beta, opts.nbhd);
    out.trace.initial_objective = out.trace.final_objective = running;
  }
  double previous = running;

  while (out.sweeps < opts.max_sweeps) {
    ++out.sweeps;
    bool changed = false;
    for (std::size_t s = 0; s < x.size(); ++s) {
      std::fill(counts.begin(), counts.end(), 0);
      const Site site = dims.site(s);
      for_each_neighbor(dims, site, opts.nbhd,
                        [&](std::size_t t) { ++counts[x[t]]; });
      const double* ll = log_lik.data() + s * num_classes;
      const int current = x[s];
      int best = current;
      double best_value = ll[current] + opts.beta * counts[current];
      for (int l = 0; l < num_classes; ++l) {
        const double v = ll[l] + opts.beta * counts[l];
        if (v > best_value) {
          best_value = v;
          best = l;
        }
      }
      if (best == current) continue;

      if (opts.debug_objective) {
        // Local change of the objective, recounted through the public
        // neighbor-count routine rather than the loop above.
        const NeighborCounts before =
            neighbor_label_counts(out.field, site, opts.nbhd);
        const double delta =
            class_log_likelihood(image[s], model, best) -
            class_log_likelihood(image[s], model, current) +
            opts.beta * (before.counts[best] - before.counts[current]);
        ++out.trace.updates_checked;
        if (delta < 0.0) ++out.trace.decreases;
        running += delta;
      }
      x[s] = best;
      changed = true;
    }
    if (opts.debug_objective) {
      const double full =
          posterior_objective(image, model, out.field, opts.beta, opts.nbhd);
      const double slack = 1e-9 * (1.0 + std::abs(full));
      if (full < previous - slack) ++out.trace.sweep_decreases;
      if (std::abs(full - running) > 1e-6 * (1.0 + std::abs(full))) {
        ++out.trace.drift_failures;
      }
      previous = running = full;
      out.trace.final_objective = full;
    }
    if (!changed) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace hpotts
