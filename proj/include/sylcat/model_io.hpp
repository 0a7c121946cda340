#pragma once

#include <charconv>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "sylcat/error.hpp"
#include "sylcat/hmm.hpp"
#include "sylcat/map_io.hpp"

namespace sylcat {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

inline std::string format_state(std::size_t index) {
  const auto s = HiddenState::from_index(index);
  return std::to_string(s.cat) + ":" + std::to_string(s.bit);
}

/// Shortest decimal text that parses back to exactly `value`.
inline std::string format_exact(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

inline HiddenState parse_state(std::string_view text, std::size_t k, std::size_t line_no) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "state must look like <cat>:<bit>");
  }
  const auto cat = parse_count(text.substr(0, colon), line_no, "state category");
  const auto bit = parse_count(text.substr(colon + 1), line_no, "state bit");
  if (cat >= k || bit > 1) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                "state \"" + std::string(text) + "\" out of range");
  }
  return {static_cast<CategoryId>(cat), static_cast<std::uint8_t>(bit)};
}

inline Observation parse_observation(std::string_view text, std::size_t k, std::size_t line_no) {
  const auto comma = text.find(',');
  if (comma == std::string_view::npos) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                "observation must look like <left>,<right>");
  }
  const auto left = parse_count(text.substr(0, comma), line_no, "observation category");
  const auto right = parse_count(text.substr(comma + 1), line_no, "observation category");
  if (left >= k || right >= k) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                "observation \"" + std::string(text) + "\" out of range");
  }
  return {static_cast<CategoryId>(left), static_cast<CategoryId>(right)};
}

inline bool is_section_header(std::string_view line) {
  return line.size() >= 2 && line.front() == '[' && line.back() == ']' && line.find('\t') == std::string_view::npos;
}

}  // namespace detail

/// Writes a model as versioned text: header lines, the category map, then
/// the nonzero entries of each count table.
inline void save_model(std::ostream& out, const HmmModel& model) {
  const std::size_t s = model.state_count();
  const std::size_t k = model.k();
  out << "version " << kModelFormatVersion << '\n';
  out << "k " << k << '\n';
  out << "alpha " << detail::format_exact(model.alpha()) << '\n';
  out << "[map]\n";
  write_category_map(out, model.map());
  out << "[initial]\n";
  for (std::size_t i = 0; i < s; ++i) {
    if (auto c = model.initial_counts()[i]) out << detail::format_state(i) << '\t' << c << '\n';
  }
  out << "[transition]\n";
  for (std::size_t i = 0; i < s; ++i) {
    for (std::size_t j = 0; j < s; ++j) {
      if (auto c = model.transition_counts()[i * s + j]) {
        out << detail::format_state(i) << '\t' << detail::format_state(j) << '\t' << c << '\n';
      }
    }
  }
  out << "[emission]\n";
  for (std::size_t i = 0; i < s; ++i) {
    const auto cat = HiddenState::from_index(i).cat;
    for (std::size_t y = 0; y < k; ++y) {
      if (auto c = model.emission_counts()[i * k + y]) {
        out << detail::format_state(i) << '\t' << cat << ',' << y << '\t' << c << '\n';
      }
    }
  }
}

inline HmmModel load_model(std::istream& in) {
  std::size_t line_no = 0;
  std::string raw;
  auto next_content_line = [&](std::string& into) {
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = detail::trim_cr(raw);
      if (detail::is_blank(line) || line.front() == kCommentMarker) continue;
      into = std::string(line);
      return true;
    }
    return false;
  };
  auto header = [&](std::string_view key) {
    std::string line;
    if (!next_content_line(line) || line.substr(0, key.size() + 1) != std::string(key) + " ") {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                  "expected header \"" + std::string(key) + " <value>\"");
    }
    return line.substr(key.size() + 1);
  };

  const auto version = detail::parse_count(header("version"), line_no, "version");
  if (version != kModelFormatVersion) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                "unsupported model version " + std::to_string(version));
  }
  const auto k = detail::parse_count(header("k"), line_no, "k");
  const auto alpha_text = header("alpha");
  double alpha = 0.0;
  const auto parsed = std::from_chars(alpha_text.data(), alpha_text.data() + alpha_text.size(), alpha);
  if (parsed.ec != std::errc() || parsed.ptr != alpha_text.data() + alpha_text.size()) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "invalid alpha \"" + alpha_text + "\"");
  }

  std::string section;
  if (!next_content_line(section) || section != "[map]") {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "expected [map] section");
  }
  std::string stopped_at;
  auto map = detail::read_map_lines(in, line_no, detail::is_section_header, &stopped_at);
  if (map.k() != k) {
    throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "map k differs from model k");
  }

  const std::size_t s = 2 * k;
  std::vector<std::uint64_t> initial(s, 0), transition(s * s, 0), emission(s * k, 0);
  section = stopped_at;
  std::string line;
  while (!section.empty()) {
    if (section != "[initial]" && section != "[transition]" && section != "[emission]") {
      throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "unknown section " + section);
    }
    std::string next_section;
    while (next_content_line(line)) {
      if (detail::is_section_header(line)) {
        next_section = line;
        break;
      }
      const auto fields = detail::split(line, '\t');
      if (section == "[initial]") {
        if (fields.size() != 2) {
          throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "expected <state><TAB><count>");
        }
        initial[detail::parse_state(fields[0], k, line_no).index()] = detail::parse_count(fields[1], line_no, "count");
        continue;
      }
      if (fields.size() != 3) {
        throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError, "expected three tab-separated fields");
      }
      const auto from = detail::parse_state(fields[0], k, line_no);
      const auto count = detail::parse_count(fields[2], line_no, "count");
      if (section == "[transition]") {
        transition[from.index() * s + detail::parse_state(fields[1], k, line_no).index()] = count;
      } else {
        const auto obs = detail::parse_observation(fields[1], k, line_no);
        if (obs.left != from.cat) {
          throw Error(ErrorCode::FormatError, line_no, ErrorCode::FormatError,
                      "emission from state " + std::string(fields[0]) + " must have left category " +
                          std::to_string(from.cat));
        }
        emission[from.index() * k + obs.right] = count;
      }
    }
    section = next_section;
  }
  return HmmModel(std::move(map), alpha, std::move(initial), std::move(transition), std::move(emission));
}

}  // namespace sylcat
