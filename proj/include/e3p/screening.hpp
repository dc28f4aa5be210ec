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

#include <span>
#include <string>
#include <vector>

#include "e3p/registry.hpp"

namespace e3p {

/// Hard thresholds of the device-agnostic stage. Accuracy is inclusive,
/// parameters and MACs are strict upper bounds.
struct ThresholdPolicy {
  double min_acc_pct = 79.0;
  double max_params_m = 23.0;
  double max_macs_g = 5.0;

  /// Throws Error(configuration) for non-finite bounds or min_acc_pct outside (0, 100].
  void validate() const;
};

struct Rejection {
  ModelCard card;
  std::string reason;
};

struct ThresholdResult {
  std::vector<ModelCard> pass;
  std::vector<Rejection> rejected;
};

ThresholdResult threshold_filter(std::span<const ModelCard> cards, const ThresholdPolicy& policy);

struct Dominated {
  ModelCard card;
  std::string dominator;
};

struct ParetoResult {
  std::vector<ModelCard> front;
  std::vector<Dominated> dominated;
};

/// True iff `a` is no worse than `b` on accuracy (higher), params and MACs
/// (lower), and strictly better on at least one.
bool dominates(const ModelCard& a, const ModelCard& b);

/// Input order is preserved in both outputs. Each dominated card names the
/// first dominator in input order.
ParetoResult pareto_front(std::span<const ModelCard> cards);

/// NetScore in dB: 20 log10(acc^2 / (sqrt(params) sqrt(macs))), with accuracy
/// in percent, params in millions and MACs in billions.
/// Throws Error(domain) for nonpositive or non-finite input.
double net_score(double acc_pct, double params_m, double macs_g);

struct ScoredCard {
  ModelCard card;
  double net_score = 0.0;
};

struct ScreenedSet {
  std::vector<ScoredCard> survivors;  // NetScore descending
  std::vector<Rejection> rejected;    // thresholds first, then Pareto
};

/// Thresholds, then optional Pareto filtering, then NetScore ranking with
/// ties broken by fewer params and then by name.
/// Throws Error(no_candidates) when nothing survives.
ScreenedSet screen(const Registry& registry, const ThresholdPolicy& policy, bool use_pareto);

std::vector<std::string> names(const ScreenedSet& set);

std::string to_json(const ScreenedSet& set);

/// `rank,name,params_m,macs_g,top1_acc_pct,net_score` at full precision.
std::string to_csv(const ScreenedSet& set);

/// Table with columns Model, Params (M), MACs (G), Acc (%), NetScore.
std::string to_markdown(const ScreenedSet& set);

/// Scatter projections (MACs, accuracy) and (params, accuracy) as
/// `x,y,label,series` CSV; rejected cards are emitted under their own series.
std::string to_plotdata(const ScreenedSet& set);

}  // namespace e3p
