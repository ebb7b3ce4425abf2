#include "hpotts/emission.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "hpotts/error.hpp"

namespace hpotts {

EmissionModel::EmissionModel(std::vector<double> means, double sigma)
    : means_(std::move(means)), sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("sigma must be positive and finite, got " +
                         std::to_string(sigma));
  }
  if (means_.size() < 2) {
    throw ParameterError("emission model needs at least 2 classes");
  }
  for (double m : means_) {
    if (!std::isfinite(m)) throw ParameterError("class means must be finite");
  }
}

RadiometricImage::RadiometricImage(GridDims dims, std::vector<double> values)
    : dims_(dims), values_(std::move(values)) {
  if (values_.size() != dims_.size()) {
    throw ParameterError("image has " + std::to_string(values_.size()) +
                         " values, grid needs " +
                         std::to_string(dims_.size()));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ParameterError("non-finite image value at index " +
                           std::to_string(i));
    }
  }
}

EmissionModel build_separated_model(int num_classes, double base_mean,
                                    double sigma, double k) {
  if (!(sigma > 0.0)) {
    throw ParameterError("sigma must be positive, got " +
                         std::to_string(sigma));
  }
  if (!(k > 0.0)) {
    throw ParameterError("separation k must be positive, got " +
                         std::to_string(k));
  }
  std::vector<double> means(num_classes);
  for (int l = 0; l < num_classes; ++l) means[l] = base_mean + l * k * sigma;
  return EmissionModel(std::move(means), sigma);
}

RadiometricImage sample_emission(const LabelField& field,
                                 const EmissionModel& model, Rng& rng) {
  if (field.num_classes() != model.num_classes()) {
    throw ModelError("field has " + std::to_string(field.num_classes()) +
                     " classes, model has " +
                     std::to_string(model.num_classes()));
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values(field.size());
  for (std::size_t s = 0; s < field.size(); ++s) {
    values[s] = model.mean(field[s]) + model.sigma() * noise(rng);
  }
  return RadiometricImage(field.dims(), std::move(values));
}

double class_log_likelihood(double value, const EmissionModel& model,
                            int label) {
  if (label < 0 || label >= model.num_classes()) {
    throw std::out_of_range("class index " + std::to_string(label) +
                            " outside [0, " +
                            std::to_string(model.num_classes()) + ")");
  }
  const double z = (value - model.mean(label)) / model.sigma();
  return -std::log(model.sigma()) - 0.5 * std::log(2.0 * std::numbers::pi) -
         0.5 * z * z;
}

std::vector<double> log_likelihood_table(const RadiometricImage& image,
                                         const EmissionModel& model) {
  const int num_classes = model.num_classes();
  std::vector<double> table(image.size() * num_classes);
  for (std::size_t s = 0; s < image.size(); ++s) {
    for (int l = 0; l < num_classes; ++l) {
      table[s * num_classes + l] = class_log_likelihood(image[s], model, l);
    }
  }
  return table;
}

LabelField ml_classify(const RadiometricImage& image,
                       const EmissionModel& model) {
  const int num_classes = model.num_classes();
  std::vector<int> labels(image.size());
  for (std::size_t s = 0; s < image.size(); ++s) {
    int best = 0;
    double best_ll = class_log_likelihood(image[s], model, 0);
    for (int l = 1; l < num_classes; ++l) {
      const double ll = class_log_likelihood(image[s], model, l);
      if (ll > best_ll) {
        best_ll = ll;
        best = l;
      }
    }
    labels[s] = best;
  }
  return LabelField(image.dims(), num_classes, std::move(labels));
}

}  // namespace hpotts
