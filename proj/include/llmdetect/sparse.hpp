#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace llmdetect {

struct SparseEntry {
  std::uint32_t index = 0;
  double value = 0.0;

  bool operator==(const SparseEntry&) const = default;
};

/// Sorted (index, value) pairs with strictly increasing indices and no
/// stored zeros.
class SparseVector {
 public:
  SparseVector() = default;

  /// Sorts, sums duplicate indices and drops zeros.
  static SparseVector from_unsorted(std::vector<SparseEntry> entries);

  /// Appends an entry; index must exceed the last stored index.
  void push_back(std::uint32_t index, double value);

  std::span<const SparseEntry> entries() const noexcept { return entries_; }
  std::size_t nnz() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  /// Value at index (0 when absent). Binary search.
  double at(std::uint32_t index) const noexcept;
  /// One past the largest stored index, 0 for an empty vector.
  std::uint32_t extent() const noexcept {
    return entries_.empty() ? 0 : entries_.back().index + 1;
  }

  double l2_norm() const noexcept;
  double dot(std::span<const double> dense) const noexcept;
  SparseVector scaled(double factor) const;

  bool operator==(const SparseVector&) const = default;

 private:
  std::vector<SparseEntry> entries_;
};

struct FeatureMatrix {
  std::vector<SparseVector> rows;
  std::size_t n_cols = 0;

  std::size_t n_rows() const noexcept { return rows.size(); }

  /// Rows [begin, end) as a new matrix with the same width.
  FeatureMatrix slice(std::size_t begin, std::size_t end) const;
};

/// Column-major view of a FeatureMatrix: for each column, the rows holding a
/// nonzero value, ordered by ascending value (ties by row).
struct SortedColumns {
  struct Cell {
    std::uint32_t row;
    double value;
  };
  std::vector<std::vector<Cell>> columns;

  static SortedColumns build(const FeatureMatrix& x);
};

}  // namespace llmdetect
