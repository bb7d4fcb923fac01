#include "llmdetect/sparse.hpp"

#include <algorithm>
#include <cmath>

#include "llmdetect/error.hpp"

namespace llmdetect {

SparseVector SparseVector::from_unsorted(std::vector<SparseEntry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const SparseEntry& a, const SparseEntry& b) { return a.index < b.index; });
  SparseVector out;
  for (std::size_t i = 0; i < entries.size();) {
    const auto index = entries[i].index;
    double sum = 0.0;
    for (; i < entries.size() && entries[i].index == index; ++i) sum += entries[i].value;
    if (sum != 0.0) out.entries_.push_back({index, sum});
  }
  return out;
}

void SparseVector::push_back(std::uint32_t index, double value) {
  if (!entries_.empty() && index <= entries_.back().index) {
    throw Error(ErrorKind::InvalidArgument, "SparseVector indices must be strictly increasing");
  }
  if (value != 0.0) entries_.push_back({index, value});
}

double SparseVector::at(std::uint32_t index) const noexcept {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), index,
      [](const SparseEntry& e, std::uint32_t i) { return e.index < i; });
  return (it != entries_.end() && it->index == index) ? it->value : 0.0;
}

double SparseVector::l2_norm() const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.value * e.value;
  return std::sqrt(sum);
}

double SparseVector::dot(std::span<const double> dense) const noexcept {
  double sum = 0.0;
  for (const auto& e : entries_) {
    if (e.index < dense.size()) sum += e.value * dense[e.index];
  }
  return sum;
}

SparseVector SparseVector::scaled(double factor) const {
  SparseVector out;
  if (factor == 0.0) return out;
  out.entries_.reserve(entries_.size());
  for (const auto& e : entries_) out.entries_.push_back({e.index, e.value * factor});
  return out;
}

FeatureMatrix FeatureMatrix::slice(std::size_t begin, std::size_t end) const {
  end = std::min(end, rows.size());
  begin = std::min(begin, end);
  FeatureMatrix out;
  out.n_cols = n_cols;
  out.rows.assign(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                  rows.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

SortedColumns SortedColumns::build(const FeatureMatrix& x) {
  SortedColumns out;
  out.columns.resize(x.n_cols);
  for (std::size_t r = 0; r < x.rows.size(); ++r) {
    for (const auto& e : x.rows[r].entries()) {
      if (e.index >= x.n_cols) {
        throw Error(ErrorKind::DimensionMismatch, "row entry beyond matrix width");
      }
      out.columns[e.index].push_back({static_cast<std::uint32_t>(r), e.value});
    }
  }
  for (auto& column : out.columns) {
    std::stable_sort(column.begin(), column.end(),
                     [](const Cell& a, const Cell& b) { return a.value < b.value; });
  }
  return out;
}

}  // namespace llmdetect
