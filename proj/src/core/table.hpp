// Copyright 2026 the mglmm authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef MGLMM_CORE_TABLE_HPP_
#define MGLMM_CORE_TABLE_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "families.hpp"

namespace mglmm {

// One (glass, week) record with a value per response; missing cells are
// explicit.
struct ObservationRow {
  std::string group;
  std::string time;
  std::vector<std::optional<double>> values;  // parallel to response_names
};

// Long-format observation table: one row per (group, time level), one column
// per named response.
struct ObservationTable {
  std::vector<std::string> response_names;
  std::vector<ObservationRow> rows;

  int response_index(const std::string& name) const;  // -1 when absent
  std::vector<std::string> group_ids() const;         // order of first appearance
  std::vector<std::string> time_levels() const;       // order of first appearance
  void validate() const;                              // uniqueness, shape
};

// CSV schema entry: response column name and the family its values must obey.
using TableSchema = std::vector<std::pair<std::string, Family>>;

// Reads a long-format CSV with columns glass, week, then one per response.
// Empty cells and "NA" parse as missing. Values outside the declared family
// support are input errors located by row and column.
ObservationTable read_table(const std::string& path, const TableSchema& schema);

// CSV bytes in the same format (empty cell for missing, %.17g numbers).
std::string table_to_csv(const ObservationTable& table);

// Writes the table back out in the same format.
void write_table(const ObservationTable& table, const std::string& path);

}  // namespace mglmm

#endif  // MGLMM_CORE_TABLE_HPP_
