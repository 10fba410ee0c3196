#pragma once

// Small parsing/formatting helpers shared by the file readers.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cfrank/error.hpp"

namespace cfrank::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

inline bool is_skippable(std::string_view line) {
  line = trim(line);
  return line.empty() || line.front() == '#';
}

enum class Separator { kTab, kComma, kSpace };

inline Separator detect_separator(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return Separator::kTab;
  if (line.find(',') != std::string_view::npos) return Separator::kComma;
  return Separator::kSpace;
}

inline std::vector<std::string_view> split_fields(std::string_view line, Separator sep) {
  std::vector<std::string_view> out;
  line = trim(line);
  if (sep == Separator::kSpace) {
    std::size_t pos = 0;
    while (pos < line.size()) {
      while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
      if (pos >= line.size()) break;
      std::size_t end = pos;
      while (end < line.size() && line[end] != ' ' && line[end] != '\t') ++end;
      out.push_back(line.substr(pos, end - pos));
      pos = end;
    }
    return out;
  }
  const char c = sep == Separator::kTab ? '\t' : ',';
  std::size_t pos = 0;
  while (true) {
    std::size_t end = line.find(c, pos);
    out.push_back(trim(line.substr(pos, end == std::string_view::npos ? end : end - pos)));
    if (end == std::string_view::npos) break;
    pos = end + 1;
  }
  return out;
}

template <class T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

template <class T>
T require_number(std::string_view s, std::size_t line, const char* what) {
  auto v = parse_number<T>(s);
  if (!v) throw ParseError(std::string("invalid ") + what + " '" + std::string(s) + "'", line);
  return *v;
}

// Shortest representation that parses back to the identical double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "' for reading", ExitCode::kData);
  return in;
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing", ExitCode::kData);
  return out;
}

}  // namespace cfrank::detail
