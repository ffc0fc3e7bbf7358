// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "rtbeam/kv_file.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "rtbeam/error.hpp"

namespace rtbeam {
namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void ParseFail(const std::string& source, int line, const std::string& what) {
  Fail(Errc::kParse, source + ":" + std::to_string(line) + ": " + what);
}

double ToDouble(const std::string& text, const std::string& source, int line) {
  const std::string v = Trim(text);
  if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    ParseFail(source, line, "expected a number, got '" + v + "'");
  }
  return out;
}

}  // namespace

const KvEntry* KvSection::Find(const std::string& key) const {
  const KvEntry* found = nullptr;
  for (const auto& e : entries)
    if (e.key == key) found = &e;  // last one wins
  return found;
}

std::vector<const KvEntry*> KvSection::FindAll(const std::string& key) const {
  std::vector<const KvEntry*> out;
  for (const auto& e : entries)
    if (e.key == key) out.push_back(&e);
  return out;
}

std::optional<std::string> KvSection::Get(const std::string& key) const {
  if (const auto* e = Find(key)) return e->value;
  return std::nullopt;
}

double KvSection::GetDouble(const std::string& key, double fallback) const {
  const auto* e = Find(key);
  return e ? ToDouble(e->value, name, e->line) : fallback;
}

int KvSection::GetInt(const std::string& key, int fallback) const {
  const auto* e = Find(key);
  return e ? ParseInt(*e, name) : fallback;
}

KvFile ParseKv(const std::string& text, const std::string& source_name) {
  KvFile file;
  file.source_name = source_name;
  file.sections.push_back(KvSection{});
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = Trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) ParseFail(source_name, line, "malformed section header");
      file.sections.push_back(KvSection{Trim(s.substr(1, s.size() - 2)), line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) ParseFail(source_name, line, "expected 'key = value'");
    KvEntry e{Trim(s.substr(0, eq)), Trim(s.substr(eq + 1)), line};
    if (e.key.empty()) ParseFail(source_name, line, "empty key");
    file.sections.back().entries.push_back(std::move(e));
  }
  return file;
}

KvFile LoadKv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) Fail(Errc::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseKv(ss.str(), path.string());
}

double ParseDouble(const KvEntry& entry, const std::string& source_name) {
  return ToDouble(entry.value, source_name, entry.line);
}

int ParseInt(const KvEntry& entry, const std::string& source_name) {
  const std::string v = Trim(entry.value);
  long long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || v.empty()) {
    ParseFail(source_name, entry.line, "expected an integer, got '" + v + "'");
  }
  return static_cast<int>(out);
}

std::vector<double> ParseDoubleList(const KvEntry& entry, const std::string& source_name) {
  std::vector<double> out;
  std::stringstream ss(entry.value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (Trim(item).empty()) continue;
    out.push_back(ToDouble(item, source_name, entry.line));
  }
  return out;
}

}  // namespace rtbeam
