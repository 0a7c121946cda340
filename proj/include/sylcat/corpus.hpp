#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "sylcat/error.hpp"
#include "sylcat/phonology.hpp"
#include "sylcat/rng.hpp"

namespace sylcat {

/// A validated lexicon: exact (phones, boundaries) duplicates removed, alphabet
/// in first-seen order.
class Corpus {
 public:
  Corpus() = default;

  /// Builds a corpus from already-parsed words, dropping exact duplicates.
  explicit Corpus(const std::vector<AnnotatedWord>& words) {
    for (std::size_t i = 0; i < words.size(); ++i) add(words[i], i + 1);
  }

  std::span<const AnnotatedWord> words() const noexcept { return words_; }
  const AnnotatedWord& operator[](std::size_t i) const { return words_[i]; }
  const PhoneAlphabet& alphabet() const noexcept { return alphabet_; }
  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  /// 1-based line of each word in its source file.
  std::size_t source_line(std::size_t i) const { return lines_[i]; }

  /// Appends `word` unless an identical entry exists; returns whether added.
  bool add(const AnnotatedWord& word, std::size_t line) {
    if (!keys_.insert(render(word.syllabification)).second) return false;
    for (Phone p : word.phones()) alphabet_.insert(p);
    words_.push_back(word);
    lines_.push_back(line);
    return true;
  }

  friend bool operator==(const Corpus& a, const Corpus& b) {
    return a.words_ == b.words_ && a.alphabet_ == b.alphabet_;
  }

 private:
  std::vector<AnnotatedWord> words_;
  std::vector<std::size_t> lines_;
  PhoneAlphabet alphabet_;
  std::unordered_set<std::string> keys_;
};

namespace detail {

inline std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline bool is_blank(std::string_view line) {
  return line.find_first_not_of(" \t\r\n\f\v") == std::string_view::npos;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace detail

/// Reads the portable corpus format: `orthography<TAB>transcription` per line,
/// blank and `#` lines ignored, extra tab fields ignored.
inline Corpus load_corpus(std::istream& in) {
  Corpus corpus;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim_cr(raw);
    if (detail::is_blank(line) || line.front() == kCommentMarker) continue;
    const auto fields = detail::split(line, '\t');
    if (fields.size() < 2) {
      throw Error(ErrorCode::ParseError, line_no, ErrorCode::MissingField,
                  "expected orthography<TAB>transcription");
    }
    try {
      corpus.add(parse_annotated(fields[1], std::string(fields[0])), line_no);
    } catch (const Error& e) {
      throw Error(ErrorCode::ParseError, line_no, e.code(), e.what());
    }
  }
  if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "no entries found");
  return corpus;
}

inline Corpus load_corpus_string(std::string_view text) {
  std::istringstream in{std::string(text)};
  return load_corpus(in);
}

inline void write_corpus(std::ostream& out, std::span<const AnnotatedWord> words) {
  for (const auto& w : words) out << w.orthography << '\t' << render(w.syllabification) << '\n';
}

struct CelexImportOptions {
  std::size_t field_index = 0;
  std::size_t orthography_field = 0;
  std::string strip_chars = "'\"[]";
};

struct CelexImportResult {
  std::string corpus_text;
  std::size_t emitted = 0;
  std::size_t skipped = 0;
};

/// Converts backslash-delimited CELEX lines into the portable corpus format.
/// Lines whose transcription is unusable after stripping are skipped and
/// counted; a line without the requested fields is fatal.
inline CelexImportResult import_celex(std::istream& in, const CelexImportOptions& options) {
  CelexImportResult result;
  std::ostringstream out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = detail::trim_cr(raw);
    if (detail::is_blank(line)) continue;
    const auto fields = detail::split(line, '\\');
    const auto needed = std::max(options.field_index, options.orthography_field) + 1;
    if (fields.size() < needed) {
      throw Error(ErrorCode::MissingField, line_no, ErrorCode::MissingField,
                  "need " + std::to_string(needed) + " fields, found " + std::to_string(fields.size()));
    }
    const std::string_view orthography = fields[options.orthography_field];
    std::string transcription;
    for (char c : fields[options.field_index]) {
      if (options.strip_chars.find(c) == std::string::npos) transcription.push_back(c);
    }
    const bool orthography_ok = orthography.find('\t') == std::string_view::npos &&
                                (orthography.empty() || orthography.front() != kCommentMarker);
    bool ok = orthography_ok;
    if (ok) {
      try {
        (void)parse_annotated(transcription);
      } catch (const Error&) {
        ok = false;
      }
    }
    if (!ok) {
      ++result.skipped;
      continue;
    }
    out << orthography << '\t' << transcription << '\n';
    ++result.emitted;
  }
  if (result.emitted == 0) throw Error(ErrorCode::AllLinesSkipped, "no importable entries");
  result.corpus_text = out.str();
  return result;
}

/// Fold assignment for k-fold cross-validation.
class FoldSplit {
 public:
  FoldSplit(std::size_t k, std::vector<std::size_t> assignments)
      : k_(k), assignments_(std::move(assignments)) {}

  std::size_t k() const noexcept { return k_; }
  std::span<const std::size_t> assignments() const noexcept { return assignments_; }

  std::vector<std::size_t> test_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
      if (assignments_[i] == fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> train_indices(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments_.size(); ++i)
      if (assignments_[i] != fold) out.push_back(i);
    return out;
  }

  std::vector<std::size_t> fold_sizes() const {
    std::vector<std::size_t> sizes(k_, 0);
    for (auto f : assignments_) ++sizes[f];
    return sizes;
  }

  friend bool operator==(const FoldSplit&, const FoldSplit&) = default;

 private:
  std::size_t k_;
  std::vector<std::size_t> assignments_;
};

/// Seeded shuffle of [0, n), dealt round-robin into k folds.
inline FoldSplit kfold_split(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::InvalidArgument, "k-fold split needs k >= 2");
  if (n < k) {
    throw Error(ErrorCode::TooFewWords,
                std::to_string(n) + " words cannot fill " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = derive_stream(seed, StreamPurpose::FoldSplit);
  shuffle(std::span<std::size_t>(order), rng);
  std::vector<std::size_t> assignments(n);
  for (std::size_t i = 0; i < n; ++i) assignments[order[i]] = i % k;
  return FoldSplit(k, std::move(assignments));
}

inline FoldSplit kfold_split(const Corpus& corpus, std::size_t k, std::uint64_t seed) {
  return kfold_split(corpus.size(), k, seed);
}

template <class Indices>
std::vector<AnnotatedWord> select_words(std::span<const AnnotatedWord> words, const Indices& indices) {
  std::vector<AnnotatedWord> out;
  out.reserve(indices.size());
  for (auto i : indices) out.push_back(words[i]);
  return out;
}

}  // namespace sylcat
