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

#include "table.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mglmm {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

int ObservationTable::response_index(const std::string& name) const {
  const auto it = std::find(response_names.begin(), response_names.end(), name);
  return it == response_names.end() ? -1 : static_cast<int>(it - response_names.begin());
}

std::vector<std::string> ObservationTable::group_ids() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.group) == out.end()) out.push_back(r.group);
  return out;
}

std::vector<std::string> ObservationTable::time_levels() const {
  std::vector<std::string> out;
  for (const auto& r : rows)
    if (std::find(out.begin(), out.end(), r.time) == out.end()) out.push_back(r.time);
  return out;
}

void ObservationTable::validate() const {
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& r : rows) {
    if (r.values.size() != response_names.size())
      throw input_error("row for (" + r.group + ", " + r.time +
                        ") has the wrong number of response cells");
    if (!seen.insert({r.group, r.time}).second)
      throw input_error("duplicate (glass, week) pair: (" + r.group + ", " + r.time + ")");
    for (const auto& v : r.values)
      if (v && !std::isfinite(*v))
        throw input_error("non-finite value in row (" + r.group + ", " + r.time + ")");
  }
}

ObservationTable read_table(const std::string& path, const TableSchema& schema) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open input file: " + path);

  std::string line;
  if (!std::getline(in, line)) throw input_error(path + ": missing header");
  const auto header = split_csv_line(strip_cr(line));
  if (header.size() < 2 || header[0] != "glass" || header[1] != "week")
    throw input_error(path + ": header must start with columns 'glass,week'");

  ObservationTable table;
  std::vector<int> col_of_response;
  for (const auto& [name, fam] : schema) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw input_error(path + ": missing required column '" + name + "'");
    col_of_response.push_back(static_cast<int>(it - header.begin()));
    table.response_names.push_back(name);
  }

  std::set<std::pair<std::string, std::string>> seen;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    line = strip_cr(line);
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw input_error(path + ":" + std::to_string(lineno) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    ObservationRow row;
    row.group = fields[0];
    row.time = fields[1];
    if (!seen.insert({row.group, row.time}).second)
      throw input_error(path + ":" + std::to_string(lineno) + ": duplicate (glass, week) pair (" +
                        row.group + ", " + row.time + ")");
    for (std::size_t j = 0; j < schema.size(); ++j) {
      const std::string& cell = fields[col_of_response[j]];
      if (cell.empty() || cell == "NA") {
        row.values.push_back(std::nullopt);
        continue;
      }
      std::size_t pos = 0;
      double value = 0.0;
      try {
        value = std::stod(cell, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != cell.size() || !std::isfinite(value))
        throw input_error(path + ":" + std::to_string(lineno) + ": non-numeric value '" + cell +
                          "' in column '" + schema[j].first + "'");
      if (!in_support(schema[j].second, value))
        throw input_error(path + ":" + std::to_string(lineno) + ": value " + cell +
                          " in column '" + schema[j].first + "' is outside the " +
                          schema[j].second.name() + " support");
      row.values.push_back(value);
    }
    table.rows.push_back(std::move(row));
  }
  table.validate();
  return table;
}

std::string table_to_csv(const ObservationTable& table) {
  std::string out = "glass,week";
  for (const auto& name : table.response_names) out += "," + name;
  out += "\n";
  char buf[40];
  for (const auto& row : table.rows) {
    out += row.group + "," + row.time;
    for (const auto& v : row.values) {
      out += ",";
      if (v) {
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        out += buf;
      }
    }
    out += "\n";
  }
  return out;
}

void write_table(const ObservationTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw input_error("cannot open output file: " + path);
  out << table_to_csv(table);
  if (!out) throw input_error("write failed: " + path);
}

}  // namespace mglmm
