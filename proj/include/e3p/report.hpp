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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "e3p/metrics.hpp"
#include "e3p/screening.hpp"

namespace e3p {

struct SortKey {
  enum class Kind { net_score, sam, energy, time };

  Kind kind = Kind::sam;
  std::string preset = "SAM5";  // Kind::sam only

  static SortKey net() { return {Kind::net_score, {}}; }
  static SortKey sam_preset(std::string name) { return {Kind::sam, std::move(name)}; }
  static SortKey energy() { return {Kind::energy, {}}; }
  static SortKey time() { return {Kind::time, {}}; }

  /// net_score | energy | time | samK. Throws Error(configuration).
  static SortKey parse(std::string_view text);

  std::string label() const;
  /// Scores rank high-first, energy and time low-first.
  bool descending() const noexcept { return kind == Kind::net_score || kind == Kind::sam; }

  std::optional<double> value(const ScoreRow& row) const;
};

struct RankedTable {
  std::string title;
  SortKey key;
  std::vector<std::string> presets;  // SAM column order
  std::vector<ScoreRow> rows;
  std::map<std::string, std::string> metadata;
};

/// Sorts by the key, then by name, then by the remaining numeric columns,
/// so the output does not depend on input order. Throws Error(domain) when a
/// row lacks the key.
RankedTable rank(std::vector<ScoreRow> rows, const SortKey& key, std::vector<std::string> presets = {},
                 std::string title = {}, std::map<std::string, std::string> metadata = {});

std::vector<std::string> names(const RankedTable& table);

/// Kendall tau-a between two orderings of the same names, (C - D) / (n(n-1)/2).
/// Throws Error(mismatched_sets) on differing sets or duplicates. A single
/// name yields 1.
double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b);

struct LeaderFlip {
  std::string name;
  std::size_t rank_a = 0;  // 1-based
  std::size_t rank_b = 0;
};

struct GapReport {
  std::vector<std::string> ranking_a;
  std::vector<std::string> ranking_b;
  double kendall_tau = 0.0;
  std::vector<LeaderFlip> leader_flips;
  std::vector<std::string> dropped;  // names present in only one ranking
  std::size_t top_k = 3;
};

/// Compares two orderings restricted to their common names. A leader flip is
/// a model inside the top `top_k` of one ranking and outside it in the other.
/// Throws Error(empty_intersection).
GapReport gap_report(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b,
                     std::size_t top_k = 3);
GapReport gap_report(const ScreenedSet& agnostic, const RankedTable& measured, std::size_t top_k = 3);

enum class OutputFormat { markdown, csv, json, plotdata };

/// Throws Error(unsupported_format).
OutputFormat parse_output_format(std::string_view name);

/// Deterministic bytes for identical input. Markdown follows the column order
/// Model, Acc, Time, Power, Energy, then one column per SAM preset and, when
/// present, NetScore.
std::string emit(const RankedTable& table, OutputFormat format);
std::string emit(const GapReport& report, OutputFormat format);

}  // namespace e3p
