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

#include <gtest/gtest.h>

#include <sstream>

#include "e3p/registry.hpp"
#include "test_util.hpp"

using e3p::ErrorKind;
using e3p::ModelCard;
using e3p::Registry;
using e3p::RegistryFormat;

namespace {

Registry from_csv(const std::string& text) {
  std::istringstream in(text);
  return e3p::load_registry(in, RegistryFormat::csv, "inline.csv");
}

Registry from_json(const std::string& text) {
  std::istringstream in(text);
  return e3p::load_registry(in, RegistryFormat::json, "inline.json");
}

std::string error_message(const std::string& csv) {
  try {
    from_csv(csv);
  } catch (const e3p::Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Registry, ParsesCsvRow) {
  const auto r = from_csv("name,params_m,macs_g,top1_acc_pct\nEfficientViT-B1,9.1,0.52,79.40\n");
  ASSERT_EQ(r.size(), 1u);
  const auto& c = r.cards()[0];
  EXPECT_EQ(c.name, "EfficientViT-B1");
  EXPECT_EQ(c.params_m, 9.1);
  EXPECT_EQ(c.macs_g, 0.52);
  EXPECT_EQ(c.top1_acc_pct, 79.40);
  EXPECT_TRUE(c.tags.empty());
}

TEST(Registry, ColumnsAreMatchedByHeaderName) {
  const auto r = from_csv("top1_acc_pct,name,macs_g,params_m,tags\n79.40,EfficientViT-B1,0.52,9.1,hybrid;fast\n");
  const auto& c = r.cards()[0];
  EXPECT_EQ(c.params_m, 9.1);
  EXPECT_EQ(c.macs_g, 0.52);
  EXPECT_EQ(c.tags, (std::vector<std::string>{"hybrid", "fast"}));
}

TEST(Registry, ZeroParamsIsRejectedNamingTheField) {
  EXPECT_ERROR_KIND(from_csv("name,params_m,macs_g,top1_acc_pct\nX,0,0.52,79.40\n"), ErrorKind::domain);
  EXPECT_NE(error_message("name,params_m,macs_g,top1_acc_pct\nX,0,0.52,79.40\n").find("params_m"), std::string::npos);
}

TEST(Registry, InvariantViolations) {
  const std::string h = "name,params_m,macs_g,top1_acc_pct\n";
  EXPECT_ERROR_KIND(from_csv(h + "X,1,-1,50\n"), ErrorKind::domain);
  EXPECT_ERROR_KIND(from_csv(h + "X,1,1,0\n"), ErrorKind::domain);
  EXPECT_ERROR_KIND(from_csv(h + "X,1,1,100.01\n"), ErrorKind::domain);
  EXPECT_NO_THROW(from_csv(h + "X,1,1,100\n"));
  EXPECT_ERROR_KIND(from_csv(h + ",1,1,50\n"), ErrorKind::malformed_record);
}

TEST(Registry, MalformedRecordsReportLineAndField) {
  const std::string h = "name,params_m,macs_g,top1_acc_pct\n";
  EXPECT_ERROR_KIND(from_csv(h + "A,1,1,50\nB,1,abc,50\n"), ErrorKind::malformed_record);
  const auto msg = error_message(h + "A,1,1,50\nB,1,abc,50\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("macs_g"), std::string::npos) << msg;
  EXPECT_ERROR_KIND(from_csv(h + "A,1,1\n"), ErrorKind::malformed_record);
  EXPECT_ERROR_KIND(from_csv("name,params_m,top1_acc_pct\nA,1,50\n"), ErrorKind::malformed_record);
  EXPECT_ERROR_KIND(from_csv(""), ErrorKind::malformed_record);
  EXPECT_ERROR_KIND(from_csv(h), ErrorKind::malformed_record);
}

TEST(Registry, DuplicateNamesAreALoadError) {
  EXPECT_ERROR_KIND(from_csv("name,params_m,macs_g,top1_acc_pct\nA,1,1,50\nA,2,2,60\n"), ErrorKind::duplicate_name);
  EXPECT_ERROR_KIND(Registry({{"A", 1, 1, 50, {}}, {"A", 1, 1, 50, {}}}, "x"), ErrorKind::duplicate_name);
}

TEST(Registry, ParsesJson) {
  const auto r = from_json(R"([{"name":"A","params_m":9.1,"macs_g":0.52,"top1_acc_pct":79.4,"tags":["hybrid"]},
                               {"name":"B","params_m":5.4,"macs_g":1.3,"top1_acc_pct":80.7}])");
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r.cards()[0].tags, std::vector<std::string>{"hybrid"});
  EXPECT_EQ(r.cards()[1].name, "B");
}

TEST(Registry, JsonErrorsNameTheRecord) {
  EXPECT_ERROR_KIND(from_json("{"), ErrorKind::malformed_record);
  EXPECT_ERROR_KIND(from_json(R"({"name":"A"})"), ErrorKind::malformed_record);
  EXPECT_ERROR_KIND(from_json(R"([{"name":"A","params_m":"9","macs_g":1,"top1_acc_pct":50}])"),
                    ErrorKind::malformed_record);
  try {
    from_json(R"([{"name":"A","params_m":1,"macs_g":1,"top1_acc_pct":50},{"name":"B","macs_g":1,"top1_acc_pct":50}])");
    FAIL();
  } catch (const e3p::Error& e) {
    EXPECT_NE(std::string(e.what()).find("record 1"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("params_m"), std::string::npos) << e.what();
  }
}

TEST(Registry, ShippedTableLoadsInOrder) {
  const auto r = e3p::load_registry(e3p::test::data("model_cards.csv"));
  ASSERT_EQ(r.size(), 13u);
  EXPECT_EQ(r.cards().front().name, "EfficientViT-B1");
  EXPECT_EQ(r.cards().back().name, "DeiT-Small");
}

TEST(Registry, LookupFindsOrReportsAbsent) {
  const auto r = e3p::load_registry(e3p::test::data("model_cards.csv"));
  const auto vit = e3p::lookup(r, "ViT_S (Baseline)");
  ASSERT_TRUE(vit);
  EXPECT_EQ(vit->params_m, 22.0);
  EXPECT_FALSE(e3p::lookup(r, "ResNet-50"));
  for (const auto& card : r.cards()) {
    EXPECT_EQ(*e3p::lookup(r, card.name), card);
  }
}

TEST(Registry, RoundTripsThroughCsvAndJsonAtFullPrecision) {
  std::vector<ModelCard> cards = {{"odd, name", 0.1 + 0.2, 1.0 / 3.0, 79.123456789012345, {"a", "b"}},
                                  {"plain", 9.1, 0.52, 79.40, {}}};
  const Registry original(cards, "mem");
  const auto via_csv = from_csv(e3p::to_csv(original));
  const auto via_json = from_json(e3p::to_json(original));
  EXPECT_EQ(via_csv.cards(), original.cards());
  EXPECT_EQ(via_json.cards(), original.cards());
}

TEST(Registry, LoadingIsDeterministic) {
  const auto a = e3p::load_registry(e3p::test::data("model_cards.csv"));
  const auto b = e3p::load_registry(e3p::test::data("model_cards.csv"));
  EXPECT_EQ(a, b);
}

TEST(Registry, MissingFileIsAnIoError) {
  EXPECT_ERROR_KIND(e3p::load_registry(std::filesystem::path("/nonexistent/x.csv")), ErrorKind::io);
}
