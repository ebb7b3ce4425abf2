#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hpotts {

struct Site {
  int row = 0;
  int col = 0;
};

// Rectangular grid of `rows` x `cols` sites, addressed row-major.
class GridDims {
 public:
  GridDims(int rows, int cols);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const {
    return static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_);
  }
  bool contains(Site s) const {
    return s.row >= 0 && s.row < rows_ && s.col >= 0 && s.col < cols_;
  }
  std::size_t index(Site s) const {
    return static_cast<std::size_t>(s.row) * cols_ + s.col;
  }
  Site site(std::size_t index) const {
    return {static_cast<int>(index / cols_), static_cast<int>(index % cols_)};
  }

  friend bool operator==(const GridDims&, const GridDims&) = default;

 private:
  int rows_;
  int cols_;
};

// First order: 4 nearest sites. Second order: 8 nearest (orthogonal +
// diagonal). Neighborhoods are truncated at the grid border.
enum class Neighborhood { first, second };

struct Offset {
  int drow;
  int dcol;
};

inline constexpr std::array<Offset, 8> kSecondOrderOffsets{{
    {-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
inline constexpr std::array<Offset, 4> kFirstOrderOffsets{{
    {-1, 0}, {0, -1}, {0, 1}, {1, 0}}};

// Offsets that enumerate each unordered neighbor pair exactly once when
// applied from every site.
inline constexpr std::array<Offset, 4> kSecondOrderForward{{
    {0, 1}, {1, -1}, {1, 0}, {1, 1}}};
inline constexpr std::array<Offset, 2> kFirstOrderForward{{{0, 1}, {1, 0}}};

std::span<const Offset> neighbor_offsets(Neighborhood nbhd);
std::span<const Offset> forward_offsets(Neighborhood nbhd);

Neighborhood parse_neighborhood(const std::string& text);
std::string to_string(Neighborhood nbhd);

// Calls fn(neighbor_index) for every t in the truncated neighborhood of s.
template <class Fn>
void for_each_neighbor(const GridDims& dims, Site s, Neighborhood nbhd, Fn&& fn) {
  for (const Offset& o : neighbor_offsets(nbhd)) {
    const Site t{s.row + o.drow, s.col + o.dcol};
    if (dims.contains(t)) fn(dims.index(t));
  }
}

// A realization x of the label field: every entry lies in [0, num_classes).
class LabelField {
 public:
  LabelField(GridDims dims, int num_classes);
  LabelField(GridDims dims, int num_classes, std::vector<int> labels);

  const GridDims& dims() const { return dims_; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }

  int operator[](std::size_t index) const { return labels_[index]; }
  int at(Site s) const;
  void set(Site s, int label);

  std::span<const int> labels() const { return labels_; }
  // Unchecked write access for samplers; callers keep labels in range.
  std::span<int> mutable_labels() { return labels_; }

  friend bool operator==(const LabelField&, const LabelField&) = default;

 private:
  GridDims dims_;
  int num_classes_;
  std::vector<int> labels_;
};

// U_s(l) for every class l at one site.
struct NeighborCounts {
  std::vector<int> counts;

  int degree() const;
};

NeighborCounts neighbor_label_counts(const LabelField& field, Site site,
                                     Neighborhood nbhd = Neighborhood::second);

// U(x): number of unordered neighbor pairs sharing a label.
std::int64_t global_agreement(const LabelField& field,
                              Neighborhood nbhd = Neighborhood::second);

int degree(const GridDims& dims, Site site,
           Neighborhood nbhd = Neighborhood::second);

// Nonzero counts sorted descending: an integer partition of the degree.
using Signature = std::vector<int>;

Signature histogram_signature(const NeighborCounts& counts);

// Flat per-site table of neighbor label counts, size() x num_classes.
// Built in one pass; consumed by the score functions and ICM.
class NeighborCountTable {
 public:
  NeighborCountTable(const LabelField& field, Neighborhood nbhd);

  int num_classes() const { return num_classes_; }
  std::size_t size() const { return own_.size(); }

  std::span<const int> counts(std::size_t site) const {
    return {counts_.data() + site * num_classes_,
            static_cast<std::size_t>(num_classes_)};
  }
  // U_s(x_s)
  int own(std::size_t site) const { return own_[site]; }

 private:
  int num_classes_;
  std::vector<int> counts_;
  std::vector<int> own_;
};

}  // namespace hpotts
