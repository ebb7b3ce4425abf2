#include "hpotts/lattice.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "hpotts/error.hpp"

namespace hpotts {

namespace {

std::string site_text(Site s) {
  return "(" + std::to_string(s.row) + ", " + std::to_string(s.col) + ")";
}

void require_site(const GridDims& dims, Site s) {
  if (!dims.contains(s)) {
    throw CoordinateError("site " + site_text(s) + " outside " +
                          std::to_string(dims.rows()) + "x" +
                          std::to_string(dims.cols()) + " grid");
  }
}

}  // namespace

GridDims::GridDims(int rows, int cols) : rows_(rows), cols_(cols) {
  if (rows < 1 || cols < 1) {
    throw ParameterError("grid dimensions must be positive, got " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
}

std::span<const Offset> neighbor_offsets(Neighborhood nbhd) {
  if (nbhd == Neighborhood::first) return kFirstOrderOffsets;
  return kSecondOrderOffsets;
}

std::span<const Offset> forward_offsets(Neighborhood nbhd) {
  if (nbhd == Neighborhood::first) return kFirstOrderForward;
  return kSecondOrderForward;
}

Neighborhood parse_neighborhood(const std::string& text) {
  if (text == "1" || text == "first") return Neighborhood::first;
  if (text == "2" || text == "second") return Neighborhood::second;
  throw ParameterError("unknown neighborhood '" + text +
                       "' (expected first|second)");
}

std::string to_string(Neighborhood nbhd) {
  return nbhd == Neighborhood::first ? "first" : "second";
}

LabelField::LabelField(GridDims dims, int num_classes)
    : dims_(dims), num_classes_(num_classes), labels_(dims.size(), 0) {
  if (num_classes < 2) {
    throw ParameterError("need at least 2 classes, got " +
                         std::to_string(num_classes));
  }
}

LabelField::LabelField(GridDims dims, int num_classes, std::vector<int> labels)
    : dims_(dims), num_classes_(num_classes), labels_(std::move(labels)) {
  if (num_classes < 2) {
    throw ParameterError("need at least 2 classes, got " +
                         std::to_string(num_classes));
  }
  if (labels_.size() != dims_.size()) {
    throw ParameterError("label count " + std::to_string(labels_.size()) +
                         " does not match grid size " +
                         std::to_string(dims_.size()));
  }
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw ParameterError("label " + std::to_string(labels_[i]) +
                           " at index " + std::to_string(i) +
                           " outside [0, " + std::to_string(num_classes_) +
                           ")");
    }
  }
}

int LabelField::at(Site s) const {
  require_site(dims_, s);
  return labels_[dims_.index(s)];
}

void LabelField::set(Site s, int label) {
  require_site(dims_, s);
  if (label < 0 || label >= num_classes_) {
    throw ParameterError("label " + std::to_string(label) + " outside [0, " +
                         std::to_string(num_classes_) + ")");
  }
  labels_[dims_.index(s)] = label;
}

int NeighborCounts::degree() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

NeighborCounts neighbor_label_counts(const LabelField& field, Site site,
                                     Neighborhood nbhd) {
  require_site(field.dims(), site);
  NeighborCounts out{std::vector<int>(field.num_classes(), 0)};
  for_each_neighbor(field.dims(), site, nbhd,
                    [&](std::size_t t) { ++out.counts[field[t]]; });
  return out;
}

std::int64_t global_agreement(const LabelField& field, Neighborhood nbhd) {
  const GridDims& dims = field.dims();
  const auto fwd = forward_offsets(nbhd);
  std::int64_t total = 0;
  for (int r = 0; r < dims.rows(); ++r) {
    for (int c = 0; c < dims.cols(); ++c) {
      const int label = field[dims.index({r, c})];
      for (const Offset& o : fwd) {
        const Site t{r + o.drow, c + o.dcol};
        if (dims.contains(t) && field[dims.index(t)] == label) ++total;
      }
    }
  }
  return total;
}

int degree(const GridDims& dims, Site site, Neighborhood nbhd) {
  require_site(dims, site);
  int d = 0;
  for_each_neighbor(dims, site, nbhd, [&](std::size_t) { ++d; });
  return d;
}

Signature histogram_signature(const NeighborCounts& counts) {
  Signature sig;
  for (int c : counts.counts) {
    if (c > 0) sig.push_back(c);
  }
  std::sort(sig.begin(), sig.end(), std::greater<>());
  return sig;
}

NeighborCountTable::NeighborCountTable(const LabelField& field,
                                       Neighborhood nbhd)
    : num_classes_(field.num_classes()),
      counts_(field.size() * field.num_classes(), 0),
      own_(field.size(), 0) {
  const GridDims& dims = field.dims();
  for (std::size_t s = 0; s < field.size(); ++s) {
    int* row = counts_.data() + s * num_classes_;
    for_each_neighbor(dims, dims.site(s), nbhd,
                      [&](std::size_t t) { ++row[field[t]]; });
    own_[s] = row[field[s]];
  }
}

}  // namespace hpotts
