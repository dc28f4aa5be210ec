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

#include "e3p/registry.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "e3p/error.hpp"
#include "e3p/text.hpp"

namespace e3p {

namespace {

using nlohmann::json;

void check_unique(const std::vector<ModelCard>& cards) {
  std::set<std::string_view> seen;
  for (const auto& card : cards) {
    if (!seen.insert(card.name).second) {
      throw Error(ErrorKind::duplicate_name, fmt::format("duplicate model name '{}'", card.name));
    }
  }
}

std::vector<std::string> split_tags(std::string_view field) {
  std::vector<std::string> tags;
  std::size_t start = 0;
  while (start <= field.size()) {
    const auto end = std::min(field.find(';', start), field.size());
    const auto tag = text::trim(field.substr(start, end - start));
    if (!tag.empty()) {
      tags.emplace_back(tag);
    }
    start = end + 1;
  }
  return tags;
}

std::vector<ModelCard> parse_csv(std::istream& in) {
  static const std::vector<std::string> required = {"name", "params_m", "macs_g", "top1_acc_pct"};

  std::string line;
  std::size_t line_no = 0;
  std::map<std::string, std::size_t> column;
  bool have_header = false;
  std::vector<ModelCard> cards;

  while (text::read_line(in, line)) {
    ++line_no;
    if (text::trim(line).empty() || text::trim(line).front() == '#') {
      continue;
    }
    const auto fields = text::split_csv(line);
    if (!fields) {
      throw Error(ErrorKind::malformed_record, fmt::format("line {}: unterminated quote", line_no));
    }
    if (!have_header) {
      for (std::size_t i = 0; i < fields->size(); ++i) {
        column[std::string(text::trim((*fields)[i]))] = i;
      }
      for (const auto& name : required) {
        if (!column.contains(name)) {
          throw Error(ErrorKind::malformed_record,
                      fmt::format("line {}: header is missing column '{}'", line_no, name));
        }
      }
      have_header = true;
      continue;
    }

    const auto field = [&](const std::string& name) -> std::string_view {
      const auto idx = column.at(name);
      if (idx >= fields->size()) {
        throw Error(ErrorKind::malformed_record,
                    fmt::format("line {}: field '{}' is missing", line_no, name));
      }
      return text::trim((*fields)[idx]);
    };
    const auto number = [&](const std::string& name) {
      const auto value = text::parse_double(field(name));
      if (!value) {
        throw Error(ErrorKind::malformed_record,
                    fmt::format("line {}: field '{}' is not a number: '{}'", line_no, name, field(name)));
      }
      return *value;
    };

    ModelCard card;
    card.name = std::string(field("name"));
    card.params_m = number("params_m");
    card.macs_g = number("macs_g");
    card.top1_acc_pct = number("top1_acc_pct");
    if (column.contains("tags") && column.at("tags") < fields->size()) {
      card.tags = split_tags(field("tags"));
    }
    try {
      validate(card);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("line {}: {}", line_no, e.what()));
    }
    cards.push_back(std::move(card));
  }
  if (!have_header) {
    throw Error(ErrorKind::malformed_record, "CSV registry has no header row");
  }
  return cards;
}

std::vector<ModelCard> parse_json(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::malformed_record, fmt::format("invalid JSON: {}", e.what()));
  }
  if (!doc.is_array()) {
    throw Error(ErrorKind::malformed_record, "JSON registry must be an array of objects");
  }

  std::vector<ModelCard> cards;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& record = doc[i];
    if (!record.is_object()) {
      throw Error(ErrorKind::malformed_record, fmt::format("record {}: not an object", i));
    }
    const auto number = [&](const char* key) {
      if (!record.contains(key) || !record[key].is_number()) {
        throw Error(ErrorKind::malformed_record,
                    fmt::format("record {}: field '{}' missing or not a number", i, key));
      }
      return record[key].get<double>();
    };
    ModelCard card;
    if (!record.contains("name") || !record["name"].is_string()) {
      throw Error(ErrorKind::malformed_record, fmt::format("record {}: field 'name' missing or not a string", i));
    }
    card.name = record["name"].get<std::string>();
    card.params_m = number("params_m");
    card.macs_g = number("macs_g");
    card.top1_acc_pct = number("top1_acc_pct");
    if (record.contains("tags")) {
      if (!record["tags"].is_array()) {
        throw Error(ErrorKind::malformed_record, fmt::format("record {}: field 'tags' must be an array", i));
      }
      for (const auto& tag : record["tags"]) {
        if (!tag.is_string()) {
          throw Error(ErrorKind::malformed_record, fmt::format("record {}: field 'tags' holds a non-string", i));
        }
        card.tags.push_back(tag.get<std::string>());
      }
    }
    try {
      validate(card);
    } catch (const Error& e) {
      throw Error(e.kind(), fmt::format("record {}: {}", i, e.what()));
    }
    cards.push_back(std::move(card));
  }
  return cards;
}

}  // namespace

Registry::Registry(std::vector<ModelCard> cards, std::string source)
    : cards_(std::move(cards)), source_(std::move(source)) {
  if (cards_.empty()) {
    throw Error(ErrorKind::malformed_record, fmt::format("registry '{}' has no model cards", source_));
  }
  for (const auto& card : cards_) {
    validate(card);
  }
  check_unique(cards_);
}

void validate(const ModelCard& card) {
  if (card.name.empty()) {
    throw Error(ErrorKind::malformed_record, "field 'name' is empty");
  }
  if (!(card.params_m > 0.0)) {
    throw Error(ErrorKind::domain, fmt::format("'{}': field 'params_m' must be > 0 (got {})", card.name, card.params_m));
  }
  if (!(card.macs_g > 0.0)) {
    throw Error(ErrorKind::domain, fmt::format("'{}': field 'macs_g' must be > 0 (got {})", card.name, card.macs_g));
  }
  if (!(card.top1_acc_pct > 0.0 && card.top1_acc_pct <= 100.0)) {
    throw Error(ErrorKind::domain,
                fmt::format("'{}': field 'top1_acc_pct' must be in (0, 100] (got {})", card.name, card.top1_acc_pct));
  }
}

Registry load_registry(std::istream& in, RegistryFormat format, std::string source) {
  auto cards = format == RegistryFormat::json ? parse_json(in) : parse_csv(in);
  return Registry(std::move(cards), std::move(source));
}

Registry load_registry(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::io, fmt::format("cannot open registry '{}'", path.string()));
  }
  const auto format = path.extension() == ".json" ? RegistryFormat::json : RegistryFormat::csv;
  return load_registry(in, format, path.string());
}

std::optional<ModelCard> lookup(const Registry& registry, std::string_view name) {
  for (const auto& card : registry.cards()) {
    if (card.name == name) {
      return card;
    }
  }
  return std::nullopt;
}

std::string to_csv(const Registry& registry) {
  std::ostringstream out;
  out << "name,params_m,macs_g,top1_acc_pct,tags\n";
  for (const auto& card : registry.cards()) {
    std::string tags;
    for (std::size_t i = 0; i < card.tags.size(); ++i) {
      tags += (i ? ";" : "") + card.tags[i];
    }
    out << text::csv_field(card.name) << ',' << text::shortest(card.params_m) << ','
        << text::shortest(card.macs_g) << ',' << text::shortest(card.top1_acc_pct) << ','
        << text::csv_field(tags) << '\n';
  }
  return out.str();
}

std::string to_json(const Registry& registry) {
  json doc = json::array();
  for (const auto& card : registry.cards()) {
    json record = {{"name", card.name},
                   {"params_m", card.params_m},
                   {"macs_g", card.macs_g},
                   {"top1_acc_pct", card.top1_acc_pct}};
    if (!card.tags.empty()) {
      record["tags"] = card.tags;
    }
    doc.push_back(std::move(record));
  }
  return doc.dump(2) + "\n";
}

}  // namespace e3p
