// Copyright 2026 The rtbeam Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace rtbeam {

// UTF-8 `key = value` text with optional `[section]` headers. `#` starts a
// comment. Keys may repeat; entries keep their source line for error
// messages.
struct KvEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct KvSection {
  std::string name;  // empty for the leading global section
  int line = 0;
  std::vector<KvEntry> entries;

  const KvEntry* Find(const std::string& key) const;
  std::vector<const KvEntry*> FindAll(const std::string& key) const;
  std::optional<std::string> Get(const std::string& key) const;
  double GetDouble(const std::string& key, double fallback) const;
  int GetInt(const std::string& key, int fallback) const;
};

struct KvFile {
  std::vector<KvSection> sections;  // sections[0] is the global section
  std::string source_name;

  const KvSection& global() const { return sections.front(); }
};

// Throws Errc::kParse with "<name>:<line>" on malformed lines.
KvFile ParseKv(const std::string& text, const std::string& source_name = "<string>");
KvFile LoadKv(const std::filesystem::path& path);

double ParseDouble(const KvEntry& entry, const std::string& source_name);
int ParseInt(const KvEntry& entry, const std::string& source_name);
std::vector<double> ParseDoubleList(const KvEntry& entry, const std::string& source_name);

}  // namespace rtbeam
