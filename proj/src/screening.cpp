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

#include "e3p/screening.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "e3p/error.hpp"
#include "e3p/text.hpp"

namespace e3p {

void ThresholdPolicy::validate() const {
  if (!std::isfinite(min_acc_pct) || !std::isfinite(max_params_m) || !std::isfinite(max_macs_g)) {
    throw Error(ErrorKind::configuration, "threshold values must be finite");
  }
  if (!(min_acc_pct > 0.0 && min_acc_pct <= 100.0)) {
    throw Error(ErrorKind::configuration,
                fmt::format("minimum accuracy must be in (0, 100], got {}", min_acc_pct));
  }
}

ThresholdResult threshold_filter(std::span<const ModelCard> cards, const ThresholdPolicy& policy) {
  ThresholdResult result;
  for (const auto& card : cards) {
    if (card.top1_acc_pct < policy.min_acc_pct) {
      result.rejected.push_back({card, fmt::format("accuracy < {}%", policy.min_acc_pct)});
    } else if (card.params_m >= policy.max_params_m) {
      result.rejected.push_back({card, fmt::format("params ≥ {}M", policy.max_params_m)});
    } else if (card.macs_g >= policy.max_macs_g) {
      result.rejected.push_back({card, fmt::format("MACs ≥ {}G", policy.max_macs_g)});
    } else {
      result.pass.push_back(card);
    }
  }
  return result;
}

bool dominates(const ModelCard& a, const ModelCard& b) {
  const bool no_worse =
      a.top1_acc_pct >= b.top1_acc_pct && a.params_m <= b.params_m && a.macs_g <= b.macs_g;
  const bool strictly_better =
      a.top1_acc_pct > b.top1_acc_pct || a.params_m < b.params_m || a.macs_g < b.macs_g;
  return no_worse && strictly_better;
}

ParetoResult pareto_front(std::span<const ModelCard> cards) {
  // Sort indices so that any dominator of a card precedes it: accuracy
  // descending, then params and MACs ascending. A card then only needs to be
  // checked against the front built so far, since dominance is transitive.
  std::vector<std::size_t> order(cards.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    order[i] = i;
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t l, std::size_t r) {
    const auto& a = cards[l];
    const auto& b = cards[r];
    if (a.top1_acc_pct != b.top1_acc_pct) return a.top1_acc_pct > b.top1_acc_pct;
    if (a.params_m != b.params_m) return a.params_m < b.params_m;
    return a.macs_g < b.macs_g;
  });

  std::vector<bool> on_front(cards.size(), false);
  std::vector<std::size_t> front_idx;
  for (const auto i : order) {
    const bool beaten = std::any_of(front_idx.begin(), front_idx.end(),
                                    [&](std::size_t f) { return dominates(cards[f], cards[i]); });
    if (!beaten) {
      on_front[i] = true;
      front_idx.push_back(i);
    }
  }

  ParetoResult result;
  for (std::size_t i = 0; i < cards.size(); ++i) {
    if (on_front[i]) {
      result.front.push_back(cards[i]);
      continue;
    }
    for (std::size_t j = 0; j < cards.size(); ++j) {
      if (dominates(cards[j], cards[i])) {
        result.dominated.push_back({cards[i], cards[j].name});
        break;
      }
    }
  }
  return result;
}

double net_score(double acc_pct, double params_m, double macs_g) {
  if (!(acc_pct > 0.0) || !(params_m > 0.0) || !(macs_g > 0.0) || !std::isfinite(acc_pct) ||
      !std::isfinite(params_m) || !std::isfinite(macs_g)) {
    throw Error(ErrorKind::domain,
                fmt::format("NetScore needs positive finite inputs (acc={}, params={}, macs={})",
                            acc_pct, params_m, macs_g));
  }
  return 20.0 * std::log10(acc_pct * acc_pct / (std::sqrt(params_m) * std::sqrt(macs_g)));
}

ScreenedSet screen(const Registry& registry, const ThresholdPolicy& policy, bool use_pareto) {
  policy.validate();
  auto thresholded = threshold_filter(registry.cards(), policy);

  ScreenedSet set;
  set.rejected = std::move(thresholded.rejected);
  std::vector<ModelCard> candidates = std::move(thresholded.pass);
  if (use_pareto) {
    auto pareto = pareto_front(candidates);
    for (auto& d : pareto.dominated) {
      set.rejected.push_back({std::move(d.card), "dominated by " + d.dominator});
    }
    candidates = std::move(pareto.front);
  }
  if (candidates.empty()) {
    throw Error(ErrorKind::no_candidates,
                fmt::format("no candidates survive screening of '{}'", registry.source()));
  }

  for (auto& card : candidates) {
    const double score = net_score(card.top1_acc_pct, card.params_m, card.macs_g);
    set.survivors.push_back({std::move(card), score});
  }
  std::sort(set.survivors.begin(), set.survivors.end(), [](const ScoredCard& a, const ScoredCard& b) {
    if (a.net_score != b.net_score) return a.net_score > b.net_score;
    if (a.card.params_m != b.card.params_m) return a.card.params_m < b.card.params_m;
    return a.card.name < b.card.name;
  });
  return set;
}

std::vector<std::string> names(const ScreenedSet& set) {
  std::vector<std::string> out;
  out.reserve(set.survivors.size());
  for (const auto& s : set.survivors) {
    out.push_back(s.card.name);
  }
  return out;
}

std::string to_json(const ScreenedSet& set) {
  using nlohmann::json;
  json survivors = json::array();
  for (std::size_t i = 0; i < set.survivors.size(); ++i) {
    const auto& s = set.survivors[i];
    survivors.push_back({{"rank", i + 1},
                         {"name", s.card.name},
                         {"params_m", s.card.params_m},
                         {"macs_g", s.card.macs_g},
                         {"top1_acc_pct", s.card.top1_acc_pct},
                         {"net_score", s.net_score}});
  }
  json rejected = json::array();
  for (const auto& r : set.rejected) {
    rejected.push_back({{"name", r.card.name}, {"reason", r.reason}});
  }
  return json{{"survivors", survivors}, {"rejected", rejected}}.dump(2) + "\n";
}

std::string to_csv(const ScreenedSet& set) {
  std::ostringstream out;
  out << "rank,name,params_m,macs_g,top1_acc_pct,net_score\n";
  for (std::size_t i = 0; i < set.survivors.size(); ++i) {
    const auto& s = set.survivors[i];
    out << i + 1 << ',' << text::csv_field(s.card.name) << ',' << text::shortest(s.card.params_m) << ','
        << text::shortest(s.card.macs_g) << ',' << text::shortest(s.card.top1_acc_pct) << ','
        << text::shortest(s.net_score) << '\n';
  }
  return out.str();
}

std::string to_markdown(const ScreenedSet& set) {
  std::ostringstream out;
  out << "| Model | Params (M) | MACs (G) | Acc (%) | NetScore |\n";
  out << "|---|---:|---:|---:|---:|\n";
  for (const auto& s : set.survivors) {
    out << fmt::format("| {} | {:.1f} | {:.2f} | {:.2f} | {:.2f} |\n", s.card.name, s.card.params_m,
                       s.card.macs_g, s.card.top1_acc_pct, s.net_score);
  }
  if (!set.rejected.empty()) {
    out << "\n| Rejected | Reason |\n|---|---|\n";
    for (const auto& r : set.rejected) {
      out << fmt::format("| {} | {} |\n", r.card.name, r.reason);
    }
  }
  return out.str();
}

std::string to_plotdata(const ScreenedSet& set) {
  std::ostringstream out;
  out << "x,y,label,series\n";
  const auto row = [&](double x, double y, const std::string& label, std::string_view series) {
    out << text::shortest(x) << ',' << text::shortest(y) << ',' << text::csv_field(label) << ','
        << series << '\n';
  };
  for (const auto& s : set.survivors) {
    row(s.card.macs_g, s.card.top1_acc_pct, s.card.name, "macs_vs_acc");
  }
  for (const auto& r : set.rejected) {
    row(r.card.macs_g, r.card.top1_acc_pct, r.card.name, "macs_vs_acc_rejected");
  }
  for (const auto& s : set.survivors) {
    row(s.card.params_m, s.card.top1_acc_pct, s.card.name, "params_vs_acc");
  }
  for (const auto& r : set.rejected) {
    row(r.card.params_m, r.card.top1_acc_pct, r.card.name, "params_vs_acc_rejected");
  }
  return out.str();
}

}  // namespace e3p
