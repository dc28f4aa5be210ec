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
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace e3p {

/// Device-agnostic description of one candidate model.
///
/// Units are canonical and never converted on load: parameters in millions,
/// MACs in billions per inference, top-1 accuracy in percent.
struct ModelCard {
  std::string name;
  double params_m = 0.0;
  double macs_g = 0.0;
  double top1_acc_pct = 0.0;
  std::vector<std::string> tags;

  friend bool operator==(const ModelCard&, const ModelCard&) = default;
};

enum class RegistryFormat { json, csv };

/// Ordered, validated, immutable catalog of model cards.
class Registry {
 public:
  Registry(std::vector<ModelCard> cards, std::string source);

  const std::vector<ModelCard>& cards() const noexcept { return cards_; }
  const std::string& source() const noexcept { return source_; }
  std::size_t size() const noexcept { return cards_.size(); }

  friend bool operator==(const Registry&, const Registry&) = default;

 private:
  std::vector<ModelCard> cards_;
  std::string source_;
};

/// Throws Error(malformed_record | duplicate_name | domain). Messages carry
/// the 1-based line (CSV) or 0-based record index (JSON) and the field name.
Registry load_registry(std::istream& in, RegistryFormat format, std::string source = "<stream>");

/// Format is inferred from the extension (.json, anything else is CSV).
Registry load_registry(const std::filesystem::path& path);

/// Checks the ModelCard invariants; throws Error(domain) naming the field.
void validate(const ModelCard& card);

std::optional<ModelCard> lookup(const Registry& registry, std::string_view name);

std::string to_csv(const Registry& registry);
std::string to_json(const Registry& registry);

}  // namespace e3p
