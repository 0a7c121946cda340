#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "sylcat/corpus.hpp"
#include "sylcat/error.hpp"
#include "sylcat/phonology.hpp"

namespace sylcat {

/// Category-map file: a `k=<K>` header, then `<phone><TAB><category-id>` per
/// phone. Blank lines and `#` comments are allowed anywhere.
inline void write_category_map(std::ostream& out, const CategoryMap& map) {
  out << "k=" << map.k() << '\n';
  for (std::size_t i = 0; i < map.alphabet().size(); ++i) {
    out << map.alphabet()[i].symbol() << '\t' << map.gene(i) << '\n';
  }
}

namespace detail {

inline std::size_t parse_count(std::string_view text, std::size_t line_no, const char* what) {
  if (text.empty() || text.find_first_not_of("0123456789") != std::string_view::npos || text.size() > 18) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                std::string("invalid ") + what + " \"" + std::string(text) + "\"");
  }
  return static_cast<std::size_t>(std::stoull(std::string(text)));
}

/// Reads map lines until EOF or until `stop` returns true for a line (that
/// line is handed back through `stopped_at`).
template <class Stop>
CategoryMap read_map_lines(std::istream& in, std::size_t& line_no, Stop stop, std::string* stopped_at) {
  std::size_t k = 0;
  bool have_k = false;
  PhoneAlphabet alphabet;
  std::vector<CategoryId> genes;
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim_cr(raw);
    if (is_blank(line) || line.front() == kCommentMarker) continue;
    if (stop(line)) {
      if (stopped_at) *stopped_at = std::string(line);
      break;
    }
    if (!have_k) {
      if (line.substr(0, 2) != "k=") {
        throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "expected k=<K> header");
      }
      k = parse_count(line.substr(2), line_no, "category count");
      have_k = true;
      continue;
    }
    const auto fields = split(line, '\t');
    if (fields.size() != 2 || fields[0].size() != 1) {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "expected <phone><TAB><category>");
    }
    const char symbol = fields[0][0];
    if (!is_phone_symbol(symbol)) {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::ReservedCharacter, "invalid phone symbol");
    }
    Phone phone(symbol);
    if (alphabet.contains(phone)) {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                  "phone '" + phone.str() + "' listed twice");
    }
    const auto category = parse_count(fields[1], line_no, "category id");
    if (have_k && category >= k) {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                  "category " + std::to_string(category) + " out of range for k=" + std::to_string(k));
    }
    alphabet.insert(phone);
    genes.push_back(static_cast<CategoryId>(category));
  }
  if (!have_k) throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "missing k=<K> header");
  if (k == 0) throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "k must be positive");
  return CategoryMap(std::move(alphabet), k, std::move(genes));
}

}  // namespace detail

inline CategoryMap read_category_map(std::istream& in) {
  std::size_t line_no = 0;
  return detail::read_map_lines(in, line_no, [](std::string_view) { return false; }, nullptr);
}

/// True when `map` assigns a category to every phone of `alphabet`.
inline bool covers(const CategoryMap& map, const PhoneAlphabet& alphabet) {
  for (Phone p : alphabet)
    if (!map.find(p)) return false;
  return true;
}

}  // namespace sylcat
