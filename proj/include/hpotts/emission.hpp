#pragma once

#include <span>
#include <vector>

#include "hpotts/lattice.hpp"
#include "hpotts/rng.hpp"

namespace hpotts {

// Class-conditional Gaussian observation law p(.|l) = N(mean_l, sigma^2),
// one common sigma for all classes.
class EmissionModel {
 public:
  EmissionModel(std::vector<double> means, double sigma);

  int num_classes() const { return static_cast<int>(means_.size()); }
  double sigma() const { return sigma_; }
  double mean(int label) const { return means_.at(label); }
  std::span<const double> means() const { return means_; }

  friend bool operator==(const EmissionModel&, const EmissionModel&) = default;

 private:
  std::vector<double> means_;
  double sigma_;
};

// Observed image I, one finite real per site.
class RadiometricImage {
 public:
  RadiometricImage(GridDims dims, std::vector<double> values);

  const GridDims& dims() const { return dims_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t index) const { return values_[index]; }
  std::span<const double> values() const { return values_; }

  friend bool operator==(const RadiometricImage&,
                         const RadiometricImage&) = default;

 private:
  GridDims dims_;
  std::vector<double> values_;
};

// mean_l = base_mean + l * k * sigma, so consecutive classes sit k standard
// deviations apart.
EmissionModel build_separated_model(int num_classes, double base_mean,
                                    double sigma, double k);

// I_s ~ N(mean_{x_s}, sigma^2), independent across sites, raster order.
RadiometricImage sample_emission(const LabelField& field,
                                 const EmissionModel& model, Rng& rng);

// ln p(value | label).
double class_log_likelihood(double value, const EmissionModel& model,
                            int label);

// Per-site argmax of p(I_s | l); ties go to the lowest class index.
LabelField ml_classify(const RadiometricImage& image,
                       const EmissionModel& model);

// size() x num_classes table of ln p(I_s | l).
std::vector<double> log_likelihood_table(const RadiometricImage& image,
                                         const EmissionModel& model);

}  // namespace hpotts
