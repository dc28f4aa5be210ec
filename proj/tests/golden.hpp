// Copyright 2026 The e3p Authors
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

#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

// Printed values of the published tables, read without the library's parsers.
namespace e3p::golden {

struct CardRow {
  std::string name;
  double params_m, macs_g, acc_pct, net_score;
};

struct DeviceRow {
  std::string model;
  double acc_pct, time_s, power_mw, energy_j, sam5, sam1;
};

struct DeviceTable {
  std::string label;
  std::vector<DeviceRow> rows;  // printed order, SAM5 descending
};

inline std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

inline std::vector<CardRow> model_cards(const std::filesystem::path& dir) {
  std::vector<CardRow> out;
  for (const auto& c : read_rows(dir / "model_cards_netscore.csv")) {
    out.push_back({c.at(0), std::stod(c.at(1)), std::stod(c.at(2)), std::stod(c.at(3)), std::stod(c.at(4))});
  }
  return out;
}

inline DeviceTable device_table(const std::filesystem::path& dir, const std::string& stem) {
  DeviceTable t{stem, {}};
  for (const auto& c : read_rows(dir / (stem + ".csv"))) {
    t.rows.push_back({c.at(0), std::stod(c.at(1)), std::stod(c.at(2)), std::stod(c.at(3)), std::stod(c.at(4)),
                      std::stod(c.at(5)), std::stod(c.at(6))});
  }
  return t;
}

inline std::vector<DeviceTable> device_tables(const std::filesystem::path& dir) {
  return {device_table(dir, "tx2_imagenet"), device_table(dir, "tx2_cifar10"), device_table(dir, "rtx_imagenet"),
          device_table(dir, "rtx_cifar10")};
}

}  // namespace e3p::golden
