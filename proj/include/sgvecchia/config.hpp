/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sgvecchia/error.hpp"

namespace sgvecchia {

/// Flat key = value configuration with [section] headers. '#' starts a comment.
///
/// Every entry keeps its line number so errors point at the offending line.
class Config {
 public:
  struct Entry {
    std::string value;
    int line = 0;
    std::string raw;  // the line as written, for the summary echo
  };

  static Config parse(const std::string& text, const std::string& origin = "<config>") {
    Config c;
    c.origin_ = origin;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string body = strip_comment(line);
      body = trim(body);
      if (body.empty()) continue;
      if (body.front() == '[') {
        if (body.back() != ']' || body.size() < 3) throw ConfigError("malformed section header '" + body + "'", lineno);
        section = trim(body.substr(1, body.size() - 2));
        if (!c.sections_.count(section)) c.section_order_.push_back(section);
        c.sections_[section];
        c.section_lines_[section] = lineno;
        continue;
      }
      const auto eq = body.find('=');
      if (eq == std::string::npos) throw ConfigError("expected 'key = value', got '" + body + "'", lineno);
      if (section.empty()) throw ConfigError("key outside of any [section]", lineno);
      const std::string key = trim(body.substr(0, eq));
      const std::string value = trim(body.substr(eq + 1));
      if (key.empty()) throw ConfigError("empty key", lineno);
      auto& sec = c.sections_[section];
      if (sec.count(key)) {
        throw ConfigError("duplicate key '" + key + "' (first set on line " + std::to_string(sec[key].line) + ")",
                          lineno);
      }
      sec[key] = Entry{value, lineno, trim(line)};
      c.key_order_[section].push_back(key);
    }
    return c;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  const std::string& origin() const { return origin_; }
  bool has_section(const std::string& s) const { return sections_.count(s) > 0; }
  bool has(const std::string& s, const std::string& k) const {
    auto it = sections_.find(s);
    return it != sections_.end() && it->second.count(k);
  }
  int line(const std::string& s, const std::string& k) const { return has(s, k) ? sections_.at(s).at(k).line : 0; }

  /// Rejects unknown sections and keys.
  void require_known(const std::map<std::string, std::set<std::string>>& schema) const {
    for (const auto& [s, entries] : sections_) {
      auto it = schema.find(s);
      if (it == schema.end()) throw ConfigError("unknown section [" + s + "]", section_lines_.at(s));
      for (const auto& [k, e] : entries) {
        if (!it->second.count(k)) throw ConfigError("unknown key '" + k + "' in [" + s + "]", e.line);
      }
    }
  }

  std::string get_string(const std::string& s, const std::string& k, const std::string& def) const {
    return has(s, k) ? entry(s, k).value : def;
  }
  std::string require_string(const std::string& s, const std::string& k) const {
    if (!has(s, k)) throw ConfigError("missing required key '" + k + "' in [" + s + "]", section_line(s));
    return entry(s, k).value;
  }

  double get_double(const std::string& s, const std::string& k, double def) const {
    if (!has(s, k)) return def;
    const Entry& e = entry(s, k);
    double v = 0.0;
    const auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size()) {
      throw ConfigError("'" + k + "' must be a number, got '" + e.value + "'", e.line);
    }
    return v;
  }

  long get_long(const std::string& s, const std::string& k, long def) const {
    if (!has(s, k)) return def;
    const Entry& e = entry(s, k);
    long v = 0;
    const auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size()) {
      throw ConfigError("'" + k + "' must be an integer, got '" + e.value + "'", e.line);
    }
    return v;
  }

  std::uint64_t get_u64(const std::string& s, const std::string& k, std::uint64_t def) const {
    if (!has(s, k)) return def;
    const Entry& e = entry(s, k);
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(e.value.data(), e.value.data() + e.value.size(), v);
    if (ec != std::errc() || p != e.value.data() + e.value.size()) {
      throw ConfigError("'" + k + "' must be a non-negative integer, got '" + e.value + "'", e.line);
    }
    return v;
  }

  bool get_bool(const std::string& s, const std::string& k, bool def) const {
    if (!has(s, k)) return def;
    const Entry& e = entry(s, k);
    std::string v = e.value;
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (v == "on" || v == "true" || v == "yes" || v == "1") return true;
    if (v == "off" || v == "false" || v == "no" || v == "0") return false;
    throw ConfigError("'" + k + "' must be on/off, got '" + e.value + "'", e.line);
  }

  /// "auto" (or absent) yields std::nullopt-like sentinel `def_auto`.
  bool is_auto(const std::string& s, const std::string& k) const { return !has(s, k) || entry(s, k).value == "auto"; }

  std::vector<std::string> get_list(const std::string& s, const std::string& k) const {
    std::vector<std::string> out;
    if (!has(s, k)) return out;
    std::stringstream ss(entry(s, k).value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }

  /// The accepted lines of one section, as written.
  std::vector<std::string> echo(const std::string& s) const {
    std::vector<std::string> out;
    auto it = key_order_.find(s);
    if (it == key_order_.end()) return out;
    for (const auto& k : it->second) out.push_back(sections_.at(s).at(k).raw);
    return out;
  }
  const std::vector<std::string>& sections() const { return section_order_; }

  [[noreturn]] void fail(const std::string& s, const std::string& k, const std::string& what) const {
    throw ConfigError(what, has(s, k) ? line(s, k) : section_line(s));
  }

 private:
  const Entry& entry(const std::string& s, const std::string& k) const { return sections_.at(s).at(k); }
  int section_line(const std::string& s) const {
    auto it = section_lines_.find(s);
    return it == section_lines_.end() ? 0 : it->second;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }
  static std::string strip_comment(const std::string& s) {
    const auto h = s.find('#');
    return h == std::string::npos ? s : s.substr(0, h);
  }

  std::string origin_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::vector<std::string>> key_order_;
  std::map<std::string, int> section_lines_;
  std::vector<std::string> section_order_;
};

}  // namespace sgvecchia
