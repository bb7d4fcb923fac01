#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace llmdetect {

/// Binary class of a document. Human-written text is the negative class.
enum class Label : std::uint8_t { Human = 0, Ai = 1 };

inline int to_int(Label label) noexcept { return static_cast<int>(label); }
inline double to_double(Label label) noexcept { return label == Label::Ai ? 1.0 : 0.0; }

/// Throws InvalidArgument unless value is 0 or 1.
Label label_from_int(long long value);

struct LabeledDocument {
  std::string id;
  std::string text;
  Label label = Label::Human;
  std::optional<std::string> domain;

  bool operator==(const LabeledDocument&) const = default;
};

struct Corpus {
  std::vector<LabeledDocument> documents;
  std::string source_name;

  std::size_t size() const noexcept { return documents.size(); }
  bool empty() const noexcept { return documents.empty(); }
  std::vector<std::string> texts() const;
  std::vector<Label> labels() const;
  /// Number of documents per class, indexed by to_int(label).
  std::array<std::size_t, 2> class_counts() const;

  bool operator==(const Corpus&) const = default;
};

struct SplitSpec {
  double train_fraction = 0.8;
  std::uint64_t seed = 0;
};

struct CorpusSplit {
  Corpus train;
  Corpus test;
};

enum class CorpusFormat { Jsonl, Csv };

/// Infers the format from the extension (.csv, otherwise JSONL).
CorpusFormat format_from_path(const std::filesystem::path& path);

/// Where labels come from: a fixed class for every record, or a named
/// column/field holding 0/1.
using LabelSource = std::variant<Label, std::string>;

/// Reads a corpus. JSONL records are {"id"?, "text", "label", "domain"?};
/// CSV files carry a header row with the same column names.
/// Missing ids become the 0-based record ordinal.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const LabelSource& label = std::string("label"));

void write_corpus(const Corpus& corpus, const std::filesystem::path& path,
                  CorpusFormat format);
std::string corpus_to_jsonl(const Corpus& corpus);
std::string corpus_to_csv(const Corpus& corpus);

/// Newlines become spaces, whitespace runs collapse, ends are trimmed.
std::string clean_text(std::string_view raw);

/// Applies clean_text to every document.
Corpus clean_corpus(Corpus corpus);

/// Keeps the first document for each distinct cleaned text.
Corpus deduplicate(const Corpus& corpus);

/// Seeded shuffle, then the first floor(train_fraction * n) documents form
/// the training set. Emits a warning when class proportions of the two
/// parts differ by more than five percentage points.
CorpusSplit split_train_test(const Corpus& corpus, const SplitSpec& spec);

/// Warnings from non-fatal conditions go here. The default sink writes
/// "warning: <msg>" to stderr. Passing an empty function restores it.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

/// RFC-4180 record parser (comma delimiter, double-quote escaping, quoted
/// fields may span lines). Returns records with their starting line numbers.
struct CsvRecord {
  std::size_t line = 0;
  std::vector<std::string> fields;
};
std::vector<CsvRecord> parse_csv(std::string_view content);
std::string csv_escape(std::string_view field);

}  // namespace llmdetect
