#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sylcat/error.hpp"

namespace sylcat {

inline constexpr char kBoundaryMarker = '-';
inline constexpr char kCommentMarker = '#';

/// Printable ASCII, not whitespace, not one of the reserved markers.
constexpr bool is_phone_symbol(char c) noexcept {
  return c > ' ' && c < 0x7f && c != kBoundaryMarker && c != kCommentMarker;
}

/// One DISC-style phone: exactly one character.
class Phone {
 public:
  explicit Phone(char symbol) : symbol_(symbol) {
    if (!is_phone_symbol(symbol)) {
      throw Error(ErrorCode::ReservedCharacter,
                  "character code " + std::to_string(static_cast<unsigned char>(symbol)) +
                      " cannot be a phone");
    }
  }

  constexpr char symbol() const noexcept { return symbol_; }
  std::string str() const { return std::string(1, symbol_); }

  friend constexpr bool operator==(Phone, Phone) = default;
  friend constexpr auto operator<=>(Phone, Phone) = default;

 private:
  char symbol_;
};

using CategoryId = std::uint32_t;

/// Phones in first-seen order. Lookup is a flat 128-entry table.
class PhoneAlphabet {
 public:
  PhoneAlphabet() { index_.fill(-1); }

  template <class Range>
  static PhoneAlphabet from(const Range& phones) {
    PhoneAlphabet alphabet;
    for (const Phone& p : phones) alphabet.insert(p);
    return alphabet;
  }

  /// Adds `phone` if absent; returns its position either way.
  std::size_t insert(Phone phone) {
    auto& slot = index_[static_cast<unsigned char>(phone.symbol())];
    if (slot < 0) {
      slot = static_cast<std::int16_t>(phones_.size());
      phones_.push_back(phone);
    }
    return static_cast<std::size_t>(slot);
  }

  std::optional<std::size_t> index_of(Phone phone) const noexcept {
    const auto slot = index_[static_cast<unsigned char>(phone.symbol())];
    if (slot < 0) return std::nullopt;
    return static_cast<std::size_t>(slot);
  }

  bool contains(Phone phone) const noexcept { return index_of(phone).has_value(); }
  std::size_t size() const noexcept { return phones_.size(); }
  bool empty() const noexcept { return phones_.empty(); }
  Phone operator[](std::size_t i) const { return phones_[i]; }
  std::span<const Phone> phones() const noexcept { return phones_; }
  auto begin() const noexcept { return phones_.begin(); }
  auto end() const noexcept { return phones_.end(); }

  friend bool operator==(const PhoneAlphabet& a, const PhoneAlphabet& b) { return a.phones_ == b.phones_; }

 private:
  std::vector<Phone> phones_;
  std::array<std::int16_t, 128> index_;
};

/// Total many-to-one table from the phones of an alphabet to category ids in
/// [0, k). Genes are stored in alphabet order; this is also the chromosome the
/// genetic algorithm evolves.
class CategoryMap {
 public:
  CategoryMap(PhoneAlphabet alphabet, std::size_t k, std::vector<CategoryId> genes)
      : alphabet_(std::move(alphabet)), k_(k), genes_(std::move(genes)) {
    if (k_ == 0) throw Error(ErrorCode::InvalidArgument, "category count must be at least 1");
    if (genes_.size() != alphabet_.size()) {
      throw Error(ErrorCode::ShapeMismatch, "category map needs one gene per phone: " +
                                                std::to_string(alphabet_.size()) + " phones, " +
                                                std::to_string(genes_.size()) + " genes");
    }
    for (std::size_t i = 0; i < genes_.size(); ++i) {
      if (genes_[i] >= k_) {
        throw Error(ErrorCode::InvalidArgument, "phone '" + alphabet_[i].str() + "' mapped to category " +
                                                    std::to_string(genes_[i]) + " >= k=" + std::to_string(k_));
      }
    }
  }

  /// Every phone its own category: the no-category baseline.
  static CategoryMap identity(const PhoneAlphabet& alphabet) {
    std::vector<CategoryId> genes(alphabet.size());
    for (std::size_t i = 0; i < genes.size(); ++i) genes[i] = static_cast<CategoryId>(i);
    return CategoryMap(alphabet, std::max<std::size_t>(alphabet.size(), 1), std::move(genes));
  }

  std::size_t k() const noexcept { return k_; }
  const PhoneAlphabet& alphabet() const noexcept { return alphabet_; }
  std::span<const CategoryId> genes() const noexcept { return genes_; }
  CategoryId gene(std::size_t i) const { return genes_[i]; }

  std::optional<CategoryId> find(Phone phone) const noexcept {
    const auto i = alphabet_.index_of(phone);
    if (!i) return std::nullopt;
    return genes_[*i];
  }

  CategoryId category_of(Phone phone) const {
    const auto c = find(phone);
    if (!c) throw Error(ErrorCode::UnknownPhone, "phone '" + phone.str() + "' is not in the category map");
    return *c;
  }

  CategoryMap with_gene(std::size_t i, CategoryId category) const {
    auto genes = genes_;
    genes.at(i) = category;
    return CategoryMap(alphabet_, k_, std::move(genes));
  }

  /// Genes relabeled by order of first occurrence (first distinct id -> 0,
  /// next -> 1, ...). Maps differing only by a permutation of category names
  /// share one canonical form.
  std::vector<CategoryId> canonical_genes() const {
    std::unordered_map<CategoryId, CategoryId> relabel;
    std::vector<CategoryId> out;
    out.reserve(genes_.size());
    for (CategoryId g : genes_) {
      auto [it, inserted] = relabel.try_emplace(g, static_cast<CategoryId>(relabel.size()));
      out.push_back(it->second);
    }
    return out;
  }

  friend bool operator==(const CategoryMap&, const CategoryMap&) = default;

 private:
  PhoneAlphabet alphabet_;
  std::size_t k_;
  std::vector<CategoryId> genes_;
};

/// Phones plus one boundary bit per inter-phone gap. Bit t set means a
/// syllable boundary between phone t and phone t+1 (0-based).
class Syllabification {
 public:
  Syllabification(std::vector<Phone> phones, std::vector<std::uint8_t> boundaries)
      : phones_(std::move(phones)), boundaries_(std::move(boundaries)) {
    if (phones_.empty()) throw Error(ErrorCode::EmptyWord, "a word needs at least one phone");
    if (boundaries_.size() != phones_.size() - 1) {
      throw Error(ErrorCode::ShapeMismatch, std::to_string(phones_.size()) + " phones need " +
                                                std::to_string(phones_.size() - 1) + " boundary bits, got " +
                                                std::to_string(boundaries_.size()));
    }
    for (auto& b : boundaries_) {
      if (b > 1) throw Error(ErrorCode::ShapeMismatch, "boundary bits must be 0 or 1");
    }
  }

  std::span<const Phone> phones() const noexcept { return phones_; }
  std::span<const std::uint8_t> boundaries() const noexcept { return boundaries_; }
  std::size_t size() const noexcept { return phones_.size(); }
  std::size_t syllable_count() const noexcept {
    return 1 + static_cast<std::size_t>(std::count(boundaries_.begin(), boundaries_.end(), 1));
  }

  friend bool operator==(const Syllabification&, const Syllabification&) = default;

 private:
  std::vector<Phone> phones_;
  std::vector<std::uint8_t> boundaries_;
};

/// A gold-annotated lexicon entry.
struct AnnotatedWord {
  std::string orthography;
  Syllabification syllabification;

  std::span<const Phone> phones() const noexcept { return syllabification.phones(); }
  std::span<const std::uint8_t> boundaries() const noexcept { return syllabification.boundaries(); }

  friend bool operator==(const AnnotatedWord&, const AnnotatedWord&) = default;
};

/// Parses a hyphen-delimited transcription such as "{b-sEnt".
inline AnnotatedWord parse_annotated(std::string_view text, std::string orthography = {}) {
  std::vector<Phone> phones;
  std::vector<std::uint8_t> bits;
  bool pending_boundary = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c == kBoundaryMarker) {
      if (phones.empty()) {
        throw Error(ErrorCode::MalformedBoundary, "boundary before the first phone in \"" + std::string(text) + "\"");
      }
      if (pending_boundary) {
        throw Error(ErrorCode::MalformedBoundary, "adjacent boundaries in \"" + std::string(text) + "\"");
      }
      pending_boundary = true;
      continue;
    }
    Phone phone(c);
    if (!phones.empty()) bits.push_back(pending_boundary ? 1 : 0);
    pending_boundary = false;
    phones.push_back(phone);
  }
  if (phones.empty()) throw Error(ErrorCode::EmptyWord, "no phones in \"" + std::string(text) + "\"");
  if (pending_boundary) {
    throw Error(ErrorCode::MalformedBoundary, "boundary after the last phone in \"" + std::string(text) + "\"");
  }
  return AnnotatedWord{std::move(orthography), Syllabification(std::move(phones), std::move(bits))};
}

/// Phones only: parses "{bsEnt" (hyphens, if any, are accepted and dropped).
inline std::vector<Phone> parse_phones(std::string_view text) {
  auto word = parse_annotated(text);
  auto phones = word.phones();
  return {phones.begin(), phones.end()};
}

inline std::string render(const Syllabification& s) {
  std::string out;
  out.reserve(s.size() * 2);
  const auto phones = s.phones();
  const auto bits = s.boundaries();
  for (std::size_t i = 0; i < phones.size(); ++i) {
    if (i > 0 && bits[i - 1]) out.push_back(kBoundaryMarker);
    out.push_back(phones[i].symbol());
  }
  return out;
}

inline std::string phones_to_string(std::span<const Phone> phones) {
  std::string out;
  out.reserve(phones.size());
  for (Phone p : phones) out.push_back(p.symbol());
  return out;
}

inline std::vector<CategoryId> categorize(std::span<const Phone> phones, const CategoryMap& map) {
  std::vector<CategoryId> out;
  out.reserve(phones.size());
  for (Phone p : phones) out.push_back(map.category_of(p));
  return out;
}

}  // namespace sylcat
