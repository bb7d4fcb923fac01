#include "llmdetect/corpus.hpp"

#include <cmath>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "json.hpp"

#include "llmdetect/error.hpp"
#include "llmdetect/rng.hpp"

namespace llmdetect {

using nlohmann::json;

namespace {

bool is_space(char c) noexcept {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
}

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink_slot() {
  static WarningSink sink;
  return sink;
}

std::string read_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) {
    throw Error(ErrorKind::FileNotFound, "file not found: " + path.string());
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

[[noreturn]] void malformed(const std::filesystem::path& path, std::size_t line,
                            const std::string& what) {
  throw Error(ErrorKind::MalformedRecord,
              path.string() + ":" + std::to_string(line) + ": " + what);
}

Label parse_label_field(const json& value, const std::filesystem::path& path, std::size_t line) {
  long long v = -1;
  if (value.is_number_integer()) {
    v = value.get<long long>();
  } else if (value.is_boolean()) {
    v = value.get<bool>() ? 1 : 0;
  } else if (value.is_string()) {
    const auto& s = value.get_ref<const std::string&>();
    if (s == "0") v = 0;
    if (s == "1") v = 1;
  } else if (value.is_number_float()) {
    const double d = value.get<double>();
    if (d == 0.0 || d == 1.0) v = static_cast<long long>(d);
  }
  if (v != 0 && v != 1) malformed(path, line, "label must be 0 or 1");
  return static_cast<Label>(v);
}

Label parse_label_text(std::string_view s, const std::filesystem::path& path, std::size_t line) {
  std::string trimmed = clean_text(s);
  if (trimmed == "0") return Label::Human;
  if (trimmed == "1") return Label::Ai;
  malformed(path, line, "label must be 0 or 1, got '" + trimmed + "'");
}

void require_text(const std::string& text, const std::filesystem::path& path, std::size_t line) {
  if (clean_text(text).empty()) malformed(path, line, "empty text field");
}

Corpus load_jsonl(const std::string& content, const std::filesystem::path& path,
                  const LabelSource& label) {
  Corpus corpus;
  corpus.source_name = path.string();
  std::istringstream in(content);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (clean_text(raw).empty()) continue;
    json record;
    try {
      record = json::parse(raw);
    } catch (const json::exception& e) {
      malformed(path, line, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) malformed(path, line, "record is not a JSON object");

    LabeledDocument doc;
    const auto text_it = record.find("text");
    if (text_it == record.end() || !text_it->is_string()) malformed(path, line, "missing text field");
    doc.text = text_it->get<std::string>();
    require_text(doc.text, path, line);

    if (const auto* fixed = std::get_if<Label>(&label)) {
      doc.label = *fixed;
    } else {
      const auto& column = std::get<std::string>(label);
      const auto it = record.find(column);
      if (it == record.end()) malformed(path, line, "missing label field '" + column + "'");
      doc.label = parse_label_field(*it, path, line);
    }

    if (const auto it = record.find("id"); it != record.end() && !it->is_null()) {
      doc.id = it->is_string() ? it->get<std::string>() : it->dump();
    } else {
      doc.id = std::to_string(corpus.documents.size());
    }
    if (const auto it = record.find("domain"); it != record.end() && it->is_string()) {
      doc.domain = it->get<std::string>();
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_csv(const std::string& content, const std::filesystem::path& path,
                const LabelSource& label) {
  Corpus corpus;
  corpus.source_name = path.string();
  auto records = parse_csv(content);
  if (records.empty()) throw Error(ErrorKind::EmptyCorpus, "empty CSV file: " + path.string());

  const auto& header = records.front().fields;
  auto column_of = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  };
  const auto text_col = column_of("text");
  if (!text_col) malformed(path, records.front().line, "header has no 'text' column");
  const auto id_col = column_of("id");
  const auto domain_col = column_of("domain");
  std::optional<std::size_t> label_col;
  if (const auto* name = std::get_if<std::string>(&label)) {
    label_col = column_of(*name);
    if (!label_col) malformed(path, records.front().line, "header has no '" + *name + "' column");
  }

  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() == 1 && rec.fields[0].empty()) continue;  // blank line
    if (rec.fields.size() != header.size()) {
      malformed(path, rec.line,
                "expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(rec.fields.size()));
    }
    LabeledDocument doc;
    doc.text = rec.fields[*text_col];
    require_text(doc.text, path, rec.line);
    doc.label = label_col ? parse_label_text(rec.fields[*label_col], path, rec.line)
                          : std::get<Label>(label);
    if (id_col && !rec.fields[*id_col].empty()) {
      doc.id = rec.fields[*id_col];
    } else {
      doc.id = std::to_string(corpus.documents.size());
    }
    if (domain_col && !rec.fields[*domain_col].empty()) doc.domain = rec.fields[*domain_col];
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

}  // namespace

Label label_from_int(long long value) {
  if (value != 0 && value != 1) {
    throw Error(ErrorKind::InvalidArgument, "label must be 0 or 1, got " + std::to_string(value));
  }
  return static_cast<Label>(value);
}

std::vector<std::string> Corpus::texts() const {
  std::vector<std::string> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.text);
  return out;
}

std::vector<Label> Corpus::labels() const {
  std::vector<Label> out;
  out.reserve(documents.size());
  for (const auto& d : documents) out.push_back(d.label);
  return out;
}

std::array<std::size_t, 2> Corpus::class_counts() const {
  std::array<std::size_t, 2> counts{};
  for (const auto& d : documents) ++counts[to_int(d.label)];
  return counts;
}

CorpusFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return ext == ".csv" ? CorpusFormat::Csv : CorpusFormat::Jsonl;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format, const LabelSource& label) {
  const std::string content = read_file(path);
  Corpus corpus = format == CorpusFormat::Jsonl ? load_jsonl(content, path, label)
                                                : load_csv(content, path, label);
  if (corpus.empty()) throw Error(ErrorKind::EmptyCorpus, "no records in " + path.string());
  return corpus;
}

std::string corpus_to_jsonl(const Corpus& corpus) {
  std::string out;
  for (const auto& d : corpus.documents) {
    json record = {{"id", d.id}, {"text", d.text}, {"label", to_int(d.label)}};
    if (d.domain) record["domain"] = *d.domain;
    out += record.dump(-1, ' ', false, json::error_handler_t::replace);
    out += '\n';
  }
  return out;
}

std::string corpus_to_csv(const Corpus& corpus) {
  bool any_domain = false;
  for (const auto& d : corpus.documents) any_domain = any_domain || d.domain.has_value();
  std::string out = any_domain ? "id,text,label,domain\r\n" : "id,text,label\r\n";
  for (const auto& d : corpus.documents) {
    out += csv_escape(d.id) + ',' + csv_escape(d.text) + ',' + std::to_string(to_int(d.label));
    if (any_domain) out += ',' + csv_escape(d.domain.value_or(""));
    out += "\r\n";
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << (format == CorpusFormat::Jsonl ? corpus_to_jsonl(corpus) : corpus_to_csv(corpus));
  if (!out) throw Error(ErrorKind::Io, "write failed: " + path.string());
}

std::string clean_text(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

Corpus clean_corpus(Corpus corpus) {
  for (auto& d : corpus.documents) d.text = clean_text(d.text);
  return corpus;
}

Corpus deduplicate(const Corpus& corpus) {
  Corpus out;
  out.source_name = corpus.source_name;
  std::unordered_set<std::string> seen;
  for (const auto& d : corpus.documents) {
    if (seen.insert(clean_text(d.text)).second) out.documents.push_back(d);
  }
  return out;
}

CorpusSplit split_train_test(const Corpus& corpus, const SplitSpec& spec) {
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "train_fraction must lie in (0, 1)");
  }
  const std::size_t n = corpus.size();
  if (n < 2) {
    throw Error(ErrorKind::CorpusTooSmall,
                "need at least 2 documents to split, got " + std::to_string(n));
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));

  const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  CorpusSplit split;
  split.train.source_name = corpus.source_name + "#train";
  split.test.source_name = corpus.source_name + "#test";
  for (std::size_t i = 0; i < n; ++i) {
    auto& part = i < n_train ? split.train : split.test;
    part.documents.push_back(corpus.documents[order[i]]);
  }

  if (!split.train.empty() && !split.test.empty()) {
    const auto share = [](const Corpus& c) {
      return static_cast<double>(c.class_counts()[1]) / static_cast<double>(c.size());
    };
    const double gap = std::abs(share(split.train) - share(split.test));
    if (gap > 0.05) {
      std::ostringstream msg;
      msg << "class proportions differ between train and test by " << gap * 100.0
          << " percentage points";
      warn(msg.str());
    }
  }
  return split;
}

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(sink_mutex());
  sink_slot() = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink_slot()) {
    sink_slot()(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

std::vector<CsvRecord> parse_csv(std::string_view content) {
  std::vector<CsvRecord> records;
  CsvRecord current;
  std::string field;
  std::size_t line = 1;
  current.line = 1;
  bool in_quotes = false;
  bool field_started = false;  // anything (incl. quotes) seen for this record

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
  };
  auto end_record = [&] {
    end_field();
    records.push_back(std::move(current));
    current = CsvRecord{};
    field_started = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        field_started = true;
        break;
      case ',':
        end_field();
        field_started = true;
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        current.line = line;
        break;
      default:
        field += c;
        field_started = true;
    }
  }
  if (field_started || !field.empty()) end_record();
  return records;
}

std::string csv_escape(std::string_view field) {
  const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
  if (!needs_quotes) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

}  // namespace llmdetect
