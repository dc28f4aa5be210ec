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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "e3p/cli.hpp"
#include "e3p/metrics.hpp"
#include "e3p/report.hpp"
#include "e3p/screening.hpp"
#include "e3p/telemetry.hpp"
#include "fuzz.hpp"
#include "golden.hpp"
#include "oracle_values.hpp"

// Prints one PASS/FAIL line per acceptance criterion; exits nonzero on any FAIL.

namespace {

const std::filesystem::path kTestData = E3P_TEST_DATA;
const std::filesystem::path kData = E3P_DATA;

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
};

double brute_tau(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const auto pos = [&](const std::string& n) { return std::find(b.begin(), b.end(), n) - b.begin(); };
  long c = 0, d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) (pos(a[i]) < pos(a[j]) ? c : d) += 1;
  }
  return static_cast<double>(c - d) / (static_cast<double>(a.size() * (a.size() - 1)) / 2.0);
}

e3p::Registry card_registry() {
  std::vector<e3p::ModelCard> cards;
  for (const auto& r : e3p::golden::model_cards(kTestData)) {
    cards.push_back({r.name, r.params_m, r.macs_g, r.acc_pct, {}});
  }
  return e3p::Registry(cards, "model_cards");
}

Verdict net_score_golden() {
  Verdict v;
  const auto rows = e3p::golden::model_cards(kTestData);
  for (const auto& r : rows) {
    const double got = e3p::net_score(r.acc_pct, r.params_m, r.macs_g);
    if (std::fabs(got - r.net_score) > 0.01) v.fail(fmt::format("{}: {:.4f} vs {:.2f}", r.name, got, r.net_score));
  }
  v.detail = v.pass ? fmt::format("{} rows within 0.01 dB", rows.size()) : v.detail;
  return v;
}

Verdict sam_golden() {
  Verdict v;
  std::size_t checked = 0;
  for (const auto& t : e3p::golden::device_tables(kData)) {
    for (const auto& r : t.rows) {
      const double s5 = e3p::sam(r.acc_pct / 100.0, r.energy_j, e3p::SamParams::sam5());
      const double s1 = e3p::sam(r.acc_pct / 100.0, r.energy_j, e3p::SamParams::sam1());
      if (std::fabs(s5 - r.sam5) > 0.01) v.fail(fmt::format("{} {} SAM5 {:.4f} vs {:.2f}", t.label, r.model, s5, r.sam5));
      if (std::fabs(s1 - r.sam1) > 0.01) v.fail(fmt::format("{} {} SAM1 {:.4f} vs {:.2f}", t.label, r.model, s1, r.sam1));
      checked += 2;
    }
  }
  if (checked != 104) v.fail(fmt::format("expected 104 values, checked {}", checked));
  if (v.pass) v.detail = fmt::format("{} values within 0.01", checked);
  return v;
}

Verdict energy_identity() {
  Verdict v;
  std::size_t checked = 0;
  double worst = 0.0;
  for (const auto* stem : {"tx2_imagenet", "tx2_cifar10"}) {
    for (const auto& r : e3p::golden::device_table(kData, stem).rows) {
      const double rel = std::fabs(e3p::energy_joules(r.power_mw, r.time_s) - r.energy_j) / r.energy_j;
      worst = std::max(worst, rel);
      if (rel > 1e-3) v.fail(fmt::format("{} {}: {:.4f}%", stem, r.model, rel * 100));
      ++checked;
    }
  }
  if (v.pass) v.detail = fmt::format("{} rows, worst {:.4f}%", checked, worst * 100);
  return v;
}

Verdict headline_claim() {
  Verdict v;
  const auto t = e3p::golden::device_table(kData, "tx2_cifar10");
  const auto find = [&](const std::string& name) {
    return *std::find_if(t.rows.begin(), t.rows.end(), [&](const auto& r) { return r.model == name; });
  };
  const auto best = find("LeViT_Conv_192");
  const auto base = find("ViT_S (Baseline)");
  const double printed = 100.0 * (1.0 - best.energy_j / base.energy_j);
  const double derived =
      100.0 * (1.0 - e3p::energy_joules(best.power_mw, best.time_s) / e3p::energy_joules(base.power_mw, base.time_s));
  if (std::fabs(printed - 53.0) > 1.0) v.fail(fmt::format("printed energies give {:.2f}%", printed));
  if (std::fabs(derived - 53.0) > 1.0) v.fail(fmt::format("power x time gives {:.2f}%", derived));
  if (v.pass) v.detail = fmt::format("{:.2f}% reduction (power x time {:.2f}%)", printed, derived);
  return v;
}

Verdict screening() {
  Verdict v;
  auto cards = card_registry().cards();
  const auto violators = e3p::load_registry(kTestData / "violators.csv").cards();
  cards.insert(cards.end(), violators.begin(), violators.end());
  const auto set = e3p::screen(e3p::Registry(cards, "mixed"), e3p::ThresholdPolicy{}, false);
  // Printed order: NetScore descending as listed in the card table.
  auto expected_rows = e3p::golden::model_cards(kTestData);
  std::stable_sort(expected_rows.begin(), expected_rows.end(),
                   [](const auto& a, const auto& b) { return a.net_score > b.net_score; });
  std::vector<std::string> expected;
  for (const auto& r : expected_rows) expected.push_back(r.name);
  if (violators.size() < 3) v.fail("fewer than 3 violators");
  if (set.rejected.size() != violators.size()) v.fail(fmt::format("{} rejected", set.rejected.size()));
  if (e3p::names(set) != expected) v.fail("survivor order differs from the printed NetScore order");
  if (v.pass) v.detail = fmt::format("13 survivors in printed order, {} violators rejected", violators.size());
  return v;
}

Verdict gap_witness() {
  Verdict v;
  const auto agnostic = e3p::screen(card_registry(), e3p::ThresholdPolicy{}, false);
  std::ifstream in(kData / "tx2_imagenet.csv");
  const auto inputs = e3p::load_score_inputs_csv(in, "tx2_imagenet");
  const std::vector<e3p::SamParams> presets = {e3p::SamParams::sam5()};
  const auto table = e3p::rank(e3p::score_rows(inputs, presets), e3p::SortKey::sam_preset("SAM5"));
  const auto gap = e3p::gap_report(agnostic, table);
  const double oracle = brute_tau(gap.ranking_a, gap.ranking_b);
  if (!(gap.kendall_tau < 0.5)) v.fail(fmt::format("tau {:.4f}", gap.kendall_tau));
  if (gap.kendall_tau != oracle) v.fail(fmt::format("tau {} differs from oracle {}", gap.kendall_tau, oracle));
  const auto flip = std::find_if(gap.leader_flips.begin(), gap.leader_flips.end(),
                                 [](const auto& f) { return f.name == "EfficientViT-B1"; });
  if (flip == gap.leader_flips.end()) {
    v.fail("EfficientViT-B1 not among leader flips");
  } else if (flip->rank_a != 1 || flip->rank_b != 11) {
    v.fail(fmt::format("EfficientViT-B1 flips {} -> {}", flip->rank_a, flip->rank_b));
  }
  if (v.pass) v.detail = fmt::format("tau {:.4f} (oracle {:.4f}), EfficientViT-B1 1 -> 11", gap.kendall_tau, oracle);
  return v;
}

Verdict parser_properties() {
  Verdict v;
  const auto tegra = slurp(kTestData / "tx2_tegrastats.log");
  const auto smi = slurp(kTestData / "rtx_nvidia_smi.log");
  const auto out = e3p::fuzz::run(tegra, smi, 10000, 0xE3F);
  if (out.untyped_errors != 0) v.fail(fmt::format("{} untyped errors: {}", out.untyped_errors, out.first_untyped));

  std::istringstream tin(tegra);
  const auto tlog = e3p::read_recorded_log(tin, e3p::LogFormat::tegrastats, 1000, true);
  if (tlog.samples.size() != e3p::oracle::kTx2Samples) v.fail(fmt::format("{} tegrastats samples", tlog.samples.size()));
  double worst = 0.0;
  for (const auto& [rail, expected] : e3p::oracle::kTx2RailMeansMw) {
    double sum = 0.0;
    for (const auto& s : tlog.samples) sum += s.rails.at(rail);
    const double diff = std::fabs(sum / static_cast<double>(tlog.samples.size()) - expected);
    worst = std::max(worst, diff);
    if (diff > 0.01) v.fail(fmt::format("{} mean off by {:.4f} mW", rail, diff));
  }
  std::istringstream sin(smi);
  const auto slog = e3p::read_recorded_log(sin, e3p::LogFormat::nvidia_smi, 1000, true);
  double sum = 0.0;
  for (const auto& s : slog.samples) sum += s.rails.at("GPU");
  const double smi_diff = std::fabs(sum / static_cast<double>(slog.samples.size()) - e3p::oracle::kRtxGpuMeanMw);
  worst = std::max(worst, smi_diff);
  if (slog.samples.size() != e3p::oracle::kRtxSamples) v.fail(fmt::format("{} nvidia-smi samples", slog.samples.size()));
  if (smi_diff > 0.01) v.fail(fmt::format("GPU mean off by {:.4f} mW", smi_diff));
  if (v.pass) {
    v.detail = fmt::format("10000 mutations: {} parsed, {} typed errors, 0 untyped; worst rail mean diff {:.6f} mW",
                           out.parsed, out.typed_errors, worst);
  }
  return v;
}

Verdict replay_determinism() {
  Verdict v;
  const auto replay = [](std::vector<std::string> args, std::string& bytes) {
    std::ostringstream out, err;
    const int code = e3p::cli::run(args, out, err);
    bytes = out.str();
    return code;
  };
  const std::vector<std::vector<std::string>> fixtures = {
      {"replay", "--windows", (kTestData / "tx2_windows.json").string(), "--telemetry",
       (kTestData / "tx2_tegrastats.log").string()},
      {"replay", "--windows", (kTestData / "rtx_windows.json").string(), "--telemetry",
       (kTestData / "rtx_nvidia_smi.log").string()},
      {"replay", "--windows", (kTestData / "constant_windows.json").string()}};
  std::string constant_json;
  for (const auto& args : fixtures) {
    std::string first, second;
    if (replay(args, first) != 0 || replay(args, second) != 0) {
      v.fail("replay failed on " + args[2]);
      continue;
    }
    if (first != second) v.fail("bytes differ on " + args[2]);
    constant_json = first;
  }
  const auto pos = constant_json.find("\"mean_energy_j\": ");
  const double energy = pos == std::string::npos ? -1.0 : std::stod(constant_json.substr(pos + 17));
  if (energy != 20.0) v.fail(fmt::format("constant fixture gives {} J", energy));
  if (v.pass) v.detail = "3 fixtures byte-identical across runs; 2000 mW x 10 s = 20 J exactly";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"netscore-golden", net_score_golden},   {"sam-golden", sam_golden},
      {"energy-identity", energy_identity},    {"headline-energy-reduction", headline_claim},
      {"screening-reproduction", screening},   {"gap-report-witness", gap_witness},
      {"parser-properties", parser_properties}, {"replay-determinism", replay_determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v.fail(std::string("exception: ") + e.what());
    }
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.c_str());
    failures += v.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
