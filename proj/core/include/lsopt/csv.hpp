// Copyright 2026 The lsopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <map>
#include <string>
#include <vector>

namespace lsopt {

/// Doubles rendered with 17 significant digits round-trip exactly.
std::string format_double(double v);

/// Comma-separated table with `# key: value` metadata lines before the
/// header row. Cells never contain commas; empty cells are allowed.
struct CsvTable {
  std::map<std::string, std::string> metadata;  // includes "schema"
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_meta(const std::string& key, const std::string& value);
  std::string meta(const std::string& key) const;  // throws if missing
  std::size_t column(const std::string& name) const;  // throws if missing

  void write(const std::string& path) const;
  static CsvTable read(const std::string& path);
};

}  // namespace lsopt
