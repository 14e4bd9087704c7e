#pragma once

// Small helpers for the character-separated tables read by the simulator.

#include "parksim/errors.hpp"

#include <charconv>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace parksim::text {

  inline std::string_view trim(std::string_view s) {
    auto const first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
      return {};
    }
    auto const last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
  }

  inline std::vector<std::string> split(std::string_view line, char sep = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
      auto const pos = line.find(sep, start);
      out.emplace_back(trim(line.substr(start, pos - start)));
      if (pos == std::string_view::npos) {
        break;
      }
      start = pos + 1;
    }
    return out;
  }

  template <typename T>
  T parse_number(std::string_view s, std::string_view field, std::size_t line) {
    T value{};
    s = trim(s);
    auto const [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
      throw ParseError("field '" + std::string(field) + "': cannot parse '" + std::string(s) + "'",
                       line);
    }
    return value;
  }

  /// Column lookup by header name.
  class Header {
    std::vector<std::string> m_names;

  public:
    explicit Header(std::vector<std::string> names) : m_names(std::move(names)) {}

    std::optional<std::size_t> find(std::string_view name) const {
      for (std::size_t c = 0; c < m_names.size(); ++c) {
        if (m_names[c] == name) {
          return c;
        }
      }
      return std::nullopt;
    }
    std::size_t require(std::string_view name) const {
      if (auto c = find(name)) {
        return *c;
      }
      throw ParseError("missing column '" + std::string(name) + "'", 1);
    }
    std::size_t size() const noexcept { return m_names.size(); }
  };

}  // namespace parksim::text
