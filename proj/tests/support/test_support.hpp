#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "llmdetect/corpus.hpp"
#include "llmdetect/rng.hpp"
#include "llmdetect/sparse.hpp"

namespace testing {

using namespace llmdetect;

/// Small hand-rolled generator for property tests. Every case derives from
/// a fixed seed so failures reproduce.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  std::size_t size(std::size_t lo, std::size_t hi) {  // inclusive
    return lo + static_cast<std::size_t>(rng_.uniform_index(hi - lo + 1));
  }
  double real(double lo, double hi) { return lo + (hi - lo) * rng_.uniform01(); }
  bool coin(double p = 0.5) { return rng_.uniform01() < p; }

  template <typename T>
  const T& pick(const std::vector<T>& items) {
    return items[static_cast<std::size_t>(rng_.uniform_index(items.size()))];
  }

  /// n labels with both classes present (n >= 2).
  std::vector<Label> two_class_labels(std::size_t n) {
    std::vector<Label> y(n);
    for (auto& l : y) l = coin() ? Label::Ai : Label::Human;
    y[0] = Label::Human;
    y[1] = Label::Ai;
    rng_.shuffle(std::span<Label>(y));
    return y;
  }

  std::vector<Label> labels(std::size_t n) {
    std::vector<Label> y(n);
    for (auto& l : y) l = coin() ? Label::Ai : Label::Human;
    return y;
  }

  /// Dense matrix with the given density of non-negative entries.
  std::vector<std::vector<double>> dense(std::size_t n, std::size_t d, double density, double hi = 1.0) {
    std::vector<std::vector<double>> x(n, std::vector<double>(d, 0.0));
    for (auto& row : x) {
      for (auto& v : row) {
        if (coin(density)) v = real(0.05, hi);
      }
    }
    return x;
  }

  /// Texts over a fixed word pool.
  std::string text(const std::vector<std::string>& pool, std::size_t lo, std::size_t hi) {
    std::string out;
    const std::size_t n = size(lo, hi);
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.empty()) out += ' ';
      out += pick(pool);
    }
    return out;
  }

  Rng& rng() { return rng_; }

 private:
  Rng rng_;
};

inline FeatureMatrix to_matrix(const std::vector<std::vector<double>>& dense, std::size_t n_cols) {
  FeatureMatrix x;
  x.n_cols = n_cols;
  for (const auto& row : dense) {
    SparseVector v;
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (row[j] != 0.0) v.push_back(static_cast<std::uint32_t>(j), row[j]);
    }
    x.rows.push_back(std::move(v));
  }
  return x;
}

inline SparseVector sparse(std::initializer_list<std::pair<std::uint32_t, double>> entries) {
  SparseVector v;
  for (const auto& [i, x] : entries) v.push_back(i, x);
  return v;
}

/// Corpus with alternating labels built from plain texts.
inline Corpus make_corpus(const std::vector<std::string>& texts, const std::vector<int>& labels) {
  Corpus c;
  c.source_name = "test";
  for (std::size_t i = 0; i < texts.size(); ++i) {
    c.documents.push_back({"d" + std::to_string(i), texts[i], label_from_int(labels[i]), {}});
  }
  return c;
}

/// Synthetic two-class corpus: each class draws mostly from its own word
/// pool, with shared filler words and some noise.
inline Corpus synthetic_corpus(std::size_t n, std::uint64_t seed, double signal = 0.5) {
  static const std::vector<std::string> human = {"yeah", "honestly", "lol", "dog", "store", "weird",
                                                 "kinda", "my", "went", "yesterday", "stuff", "guess"};
  static const std::vector<std::string> ai = {"furthermore", "comprehensive", "insights", "overall",
                                              "crucial", "notably", "delve", "landscape",
                                              "significant", "additionally", "ensure", "various"};
  static const std::vector<std::string> shared = {"the", "a", "of", "and", "to", "in", "is", "it",
                                                  "that", "for", "on", "was"};
  Gen g(seed);
  Corpus c;
  c.source_name = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::string text;
    const std::size_t len = g.size(15, 50);
    for (std::size_t k = 0; k < len; ++k) {
      const auto& pool = g.coin(signal) ? (label ? ai : human) : g.coin(0.8) ? shared : (label ? human : ai);
      if (!text.empty()) text += ' ';
      text += g.pick(pool);
    }
    text += " n" + std::to_string(i);  // keeps texts distinct
    c.documents.push_back({"s" + std::to_string(i), text, label_from_int(label), {}});
  }
  return c;
}

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("llmdetect-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testing
