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

#include "e3p/report.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "e3p/error.hpp"
#include "e3p/text.hpp"

namespace e3p {

namespace {

using ordered_json = nlohmann::ordered_json;

/// Merge sort that counts inversions (pairs i < j with v[i] > v[j]).
std::uint64_t count_inversions(std::vector<std::size_t>& v, std::vector<std::size_t>& scratch, std::size_t lo,
                               std::size_t hi) {
  if (hi - lo < 2) {
    return 0;
  }
  const std::size_t mid = lo + (hi - lo) / 2;
  std::uint64_t inversions = count_inversions(v, scratch, lo, mid) + count_inversions(v, scratch, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[i] <= v[j]) {
      scratch[k++] = v[i++];
    } else {
      inversions += mid - i;
      scratch[k++] = v[j++];
    }
  }
  while (i < mid) scratch[k++] = v[i++];
  while (j < hi) scratch[k++] = v[j++];
  std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inversions;
}

std::string fixed(double v, int decimals) { return fmt::format("{:.{}f}", v, decimals); }

std::string opt_fixed(const std::optional<double>& v, int decimals) {
  return v ? fixed(*v, decimals) : std::string("–");
}

bool any_net_score(const RankedTable& table) {
  return std::any_of(table.rows.begin(), table.rows.end(), [](const ScoreRow& r) { return r.net_score.has_value(); });
}

std::optional<double> sam_value(const ScoreRow& row, const std::string& preset) {
  const auto it = row.sam_values.find(preset);
  return it == row.sam_values.end() ? std::nullopt : std::optional(it->second);
}

std::string table_markdown(const RankedTable& table) {
  std::ostringstream out;
  if (!table.title.empty()) {
    out << "### " << table.title << "\n\n";
  }
  if (!table.metadata.empty()) {
    for (const auto& [k, v] : table.metadata) {
      out << "- " << k << ": " << v << '\n';
    }
    out << '\n';
  }
  const bool net = any_net_score(table);
  out << "| Model | Acc (%) | Time (s) | Power (mW) | Energy (J) |";
  std::string rule = "|---|---:|---:|---:|---:|";
  for (const auto& p : table.presets) {
    out << ' ' << p << " |";
    rule += "---:|";
  }
  if (net) {
    out << " NetScore |";
    rule += "---:|";
  }
  out << '\n' << rule << '\n';
  for (const auto& r : table.rows) {
    out << "| " << r.model_name << " | " << fixed(r.acc_pct, 2) << " | " << fixed(r.time_s, 3) << " | "
        << fixed(r.avg_power_mw, 2) << " | " << fixed(r.energy_j, 2) << " |";
    for (const auto& p : table.presets) {
      out << ' ' << opt_fixed(sam_value(r, p), 2) << " |";
    }
    if (net) {
      out << ' ' << opt_fixed(r.net_score, 2) << " |";
    }
    out << '\n';
  }
  return out.str();
}

std::string table_csv(const RankedTable& table) {
  std::ostringstream out;
  const bool net = any_net_score(table);
  out << "rank,model,acc_pct,time_s,avg_power_mw,energy_j";
  for (const auto& p : table.presets) {
    out << ',' << text::csv_field(p);
  }
  if (net) {
    out << ",net_score";
  }
  out << '\n';
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    out << i + 1 << ',' << text::csv_field(r.model_name) << ',' << text::shortest(r.acc_pct) << ','
        << text::shortest(r.time_s) << ',' << text::shortest(r.avg_power_mw) << ',' << text::shortest(r.energy_j);
    for (const auto& p : table.presets) {
      const auto v = sam_value(r, p);
      out << ',' << (v ? text::shortest(*v) : std::string());
    }
    if (net) {
      out << ',' << (r.net_score ? text::shortest(*r.net_score) : std::string());
    }
    out << '\n';
  }
  return out.str();
}

std::string table_json(const RankedTable& table) {
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    ordered_json sam = ordered_json::object();
    for (const auto& [k, v] : r.sam_values) {
      sam[k] = v;
    }
    ordered_json row{{"rank", i + 1},
                     {"model", r.model_name},
                     {"acc_pct", r.acc_pct},
                     {"time_s", r.time_s},
                     {"avg_power_mw", r.avg_power_mw},
                     {"energy_j", r.energy_j},
                     {"sam", sam},
                     {"net_score", r.net_score ? ordered_json(*r.net_score) : ordered_json(nullptr)}};
    if (r.error) {
      row["error"] = *r.error;
    }
    rows.push_back(std::move(row));
  }
  ordered_json meta = ordered_json::object();
  for (const auto& [k, v] : table.metadata) {
    meta[k] = v;
  }
  return ordered_json{{"title", table.title},
                      {"sort_key", table.key.label()},
                      {"presets", table.presets},
                      {"metadata", meta},
                      {"rows", rows}}
             .dump(2) +
         "\n";
}

std::string table_plotdata(const RankedTable& table) {
  std::ostringstream out;
  out << "x,y,label,series\n";
  const auto series = [&](std::string_view name, auto x_of) {
    for (const auto& r : table.rows) {
      out << text::shortest(x_of(r)) << ',' << text::shortest(r.acc_pct) << ',' << text::csv_field(r.model_name)
          << ',' << name << '\n';
    }
  };
  series("energy_vs_acc", [](const ScoreRow& r) { return r.energy_j; });
  series("time_vs_acc", [](const ScoreRow& r) { return r.time_s; });
  series("power_vs_acc", [](const ScoreRow& r) { return r.avg_power_mw; });
  return out.str();
}

}  // namespace

SortKey SortKey::parse(std::string_view text) {
  std::string lower;
  for (char c : text::trim(text)) {
    lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  if (lower == "net_score" || lower == "netscore") return net();
  if (lower == "energy") return energy();
  if (lower == "time") return time();
  if (lower.starts_with("sam")) {
    return sam_preset(SamParams::parse(lower).name);
  }
  throw Error(ErrorKind::configuration, fmt::format("unknown sort key '{}'", text));
}

std::string SortKey::label() const {
  switch (kind) {
    case Kind::net_score: return "net_score";
    case Kind::sam: return preset;
    case Kind::energy: return "energy";
    case Kind::time: return "time";
  }
  return "unknown";
}

std::optional<double> SortKey::value(const ScoreRow& row) const {
  switch (kind) {
    case Kind::net_score: return row.net_score;
    case Kind::sam: return sam_value(row, preset);
    case Kind::energy: return row.energy_j;
    case Kind::time: return row.time_s;
  }
  return std::nullopt;
}

RankedTable rank(std::vector<ScoreRow> rows, const SortKey& key, std::vector<std::string> presets, std::string title,
                 std::map<std::string, std::string> metadata) {
  for (const auto& r : rows) {
    if (!key.value(r)) {
      throw Error(ErrorKind::domain, fmt::format("row '{}' has no value for sort key {}", r.model_name, key.label()));
    }
  }
  const bool desc = key.descending();
  std::stable_sort(rows.begin(), rows.end(), [&](const ScoreRow& a, const ScoreRow& b) {
    const double ka = *key.value(a);
    const double kb = *key.value(b);
    if (ka != kb) return desc ? ka > kb : ka < kb;
    if (a.model_name != b.model_name) return a.model_name < b.model_name;
    if (a.energy_j != b.energy_j) return a.energy_j < b.energy_j;
    if (a.time_s != b.time_s) return a.time_s < b.time_s;
    if (a.acc_pct != b.acc_pct) return a.acc_pct > b.acc_pct;
    return a.avg_power_mw < b.avg_power_mw;
  });
  if (presets.empty()) {
    std::set<std::string> seen;
    for (const auto& r : rows) {
      for (const auto& [name, v] : r.sam_values) {
        seen.insert(name);
      }
    }
    presets.assign(seen.rbegin(), seen.rend());  // SAM5 before SAM1
  }
  return RankedTable{std::move(title), key, std::move(presets), std::move(rows), std::move(metadata)};
}

std::vector<std::string> names(const RankedTable& table) {
  std::vector<std::string> out;
  for (const auto& r : table.rows) {
    out.push_back(r.model_name);
  }
  return out;
}

double kendall_tau(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b) {
  if (ranking_a.size() != ranking_b.size()) {
    throw Error(ErrorKind::mismatched_sets,
                fmt::format("rankings differ in length ({} vs {})", ranking_a.size(), ranking_b.size()));
  }
  std::unordered_map<std::string_view, std::size_t> position_b;
  for (std::size_t i = 0; i < ranking_b.size(); ++i) {
    if (!position_b.emplace(ranking_b[i], i).second) {
      throw Error(ErrorKind::mismatched_sets, fmt::format("'{}' appears twice in a ranking", ranking_b[i]));
    }
  }
  std::vector<std::size_t> sequence;
  std::set<std::string_view> seen_a;
  for (const auto& name : ranking_a) {
    if (!seen_a.insert(name).second) {
      throw Error(ErrorKind::mismatched_sets, fmt::format("'{}' appears twice in a ranking", name));
    }
    const auto it = position_b.find(name);
    if (it == position_b.end()) {
      throw Error(ErrorKind::mismatched_sets, fmt::format("'{}' is missing from the other ranking", name));
    }
    sequence.push_back(it->second);
  }
  const std::size_t n = sequence.size();
  if (n < 2) {
    return 1.0;
  }
  std::vector<std::size_t> scratch(n);
  const auto discordant = static_cast<double>(count_inversions(sequence, scratch, 0, n));
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  const double concordant = pairs - discordant;
  return (concordant - discordant) / pairs;
}

GapReport gap_report(std::span<const std::string> ranking_a, std::span<const std::string> ranking_b,
                     std::size_t top_k) {
  const std::set<std::string_view> in_a(ranking_a.begin(), ranking_a.end());
  const std::set<std::string_view> in_b(ranking_b.begin(), ranking_b.end());

  GapReport report;
  report.top_k = top_k;
  for (const auto& n : ranking_a) {
    (in_b.contains(n) ? report.ranking_a : report.dropped).push_back(n);
  }
  for (const auto& n : ranking_b) {
    if (in_a.contains(n)) {
      report.ranking_b.push_back(n);
    } else {
      report.dropped.push_back(n);
    }
  }
  if (report.ranking_a.empty()) {
    throw Error(ErrorKind::empty_intersection, "the two rankings share no model names");
  }
  report.kendall_tau = kendall_tau(report.ranking_a, report.ranking_b);

  std::unordered_map<std::string_view, std::size_t> rank_b;
  for (std::size_t i = 0; i < report.ranking_b.size(); ++i) {
    rank_b[report.ranking_b[i]] = i + 1;
  }
  for (std::size_t i = 0; i < report.ranking_a.size(); ++i) {
    const std::size_t ra = i + 1;
    const std::size_t rb = rank_b.at(report.ranking_a[i]);
    if ((ra <= top_k) != (rb <= top_k)) {
      report.leader_flips.push_back({report.ranking_a[i], ra, rb});
    }
  }
  return report;
}

GapReport gap_report(const ScreenedSet& agnostic, const RankedTable& measured, std::size_t top_k) {
  const auto a = names(agnostic);
  const auto b = names(measured);
  return gap_report(a, b, top_k);
}

OutputFormat parse_output_format(std::string_view name) {
  if (name == "markdown" || name == "md") return OutputFormat::markdown;
  if (name == "csv") return OutputFormat::csv;
  if (name == "json") return OutputFormat::json;
  if (name == "plotdata") return OutputFormat::plotdata;
  throw Error(ErrorKind::unsupported_format, fmt::format("unsupported output format '{}'", name));
}

std::string emit(const RankedTable& table, OutputFormat format) {
  switch (format) {
    case OutputFormat::markdown: return table_markdown(table);
    case OutputFormat::csv: return table_csv(table);
    case OutputFormat::json: return table_json(table);
    case OutputFormat::plotdata: return table_plotdata(table);
  }
  throw Error(ErrorKind::unsupported_format, "unsupported output format");
}

std::string emit(const GapReport& report, OutputFormat format) {
  std::unordered_map<std::string_view, std::size_t> rank_b;
  for (std::size_t i = 0; i < report.ranking_b.size(); ++i) {
    rank_b[report.ranking_b[i]] = i + 1;
  }
  std::ostringstream out;
  switch (format) {
    case OutputFormat::markdown: {
      out << fmt::format("Kendall tau: {:.4f} over {} common models\n\n", report.kendall_tau, report.ranking_a.size());
      out << "| Model | Rank (device-agnostic) | Rank (measured) | Leader flip |\n|---|---:|---:|:---:|\n";
      for (std::size_t i = 0; i < report.ranking_a.size(); ++i) {
        const auto& name = report.ranking_a[i];
        const auto rb = rank_b.at(name);
        const bool flip = ((i + 1) <= report.top_k) != (rb <= report.top_k);
        out << "| " << name << " | " << i + 1 << " | " << rb << " | " << (flip ? "yes" : "") << " |\n";
      }
      if (!report.dropped.empty()) {
        out << "\nDropped (present in one ranking only):";
        for (const auto& d : report.dropped) {
          out << ' ' << d << ';';
        }
        out << '\n';
      }
      return out.str();
    }
    case OutputFormat::csv:
      out << "model,rank_a,rank_b,leader_flip\n";
      for (std::size_t i = 0; i < report.ranking_a.size(); ++i) {
        const auto rb = rank_b.at(report.ranking_a[i]);
        const bool flip = ((i + 1) <= report.top_k) != (rb <= report.top_k);
        out << text::csv_field(report.ranking_a[i]) << ',' << i + 1 << ',' << rb << ',' << (flip ? 1 : 0) << '\n';
      }
      return out.str();
    case OutputFormat::json: {
      ordered_json flips = ordered_json::array();
      for (const auto& f : report.leader_flips) {
        flips.push_back({{"model", f.name}, {"rank_a", f.rank_a}, {"rank_b", f.rank_b}});
      }
      return ordered_json{{"kendall_tau", report.kendall_tau},
                          {"top_k", report.top_k},
                          {"ranking_a", report.ranking_a},
                          {"ranking_b", report.ranking_b},
                          {"leader_flips", flips},
                          {"dropped", report.dropped}}
                 .dump(2) +
             "\n";
    }
    case OutputFormat::plotdata:
      out << "x,y,label,series\n";
      for (std::size_t i = 0; i < report.ranking_a.size(); ++i) {
        out << i + 1 << ',' << rank_b.at(report.ranking_a[i]) << ',' << text::csv_field(report.ranking_a[i])
            << ",rank_agnostic_vs_measured\n";
      }
      return out.str();
  }
  throw Error(ErrorKind::unsupported_format, "unsupported output format");
}

}  // namespace e3p
