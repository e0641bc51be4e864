#include "chartcycle/error.hpp"
#include "chartcycle/spec.hpp"
#include "support/random_cases.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace chartcycle;

namespace {

constexpr const char* kMinimalBar = R"({
  "mark": "bar",
  "encoding": {
    "x": {"field": "a", "type": "nominal"},
    "y": {"field": "b", "type": "quantitative"}
  }
})";

}  // namespace

TEST(ParseSpec, MinimalBar) {
  const ChartSpec s = parse_spec(kMinimalBar);
  EXPECT_EQ(s.mark, Mark::bar);
  ASSERT_EQ(s.encodings.size(), 2u);
  EXPECT_EQ(s.encoding(Channel::x)->field, "a");
  EXPECT_EQ(s.encoding(Channel::x)->type, FieldType::nominal);
  EXPECT_EQ(s.encoding(Channel::y)->type, FieldType::quantitative);
  EXPECT_TRUE(s.transforms.empty());
  EXPECT_TRUE(s.warnings.empty());
}

TEST(ParseSpec, ColumnFacetPopulatesFacetChannel) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{
    "x":{"field":"a","type":"nominal"},"y":{"field":"b","type":"quantitative","aggregate":"sum"},
    "column":{"field":"region","type":"nominal"}}})");
  ASSERT_NE(s.encoding(Channel::column), nullptr);
  EXPECT_EQ(s.encoding(Channel::column)->field, "region");
  EXPECT_TRUE(s.faceted());
}

TEST(ParseSpec, BoxplotIsUnsupported) {
  EXPECT_THROW(parse_spec(R"({"mark":"boxplot","encoding":{"x":{"field":"a","type":"nominal"}}})"),
               UnsupportedSpec);
  EXPECT_THROW(parse_spec(R"({"mark":{"type":"boxplot"},"encoding":{"x":{"field":"a","type":"nominal"}}})"),
               UnsupportedSpec);
}

TEST(ParseSpec, ErrorKinds) {
  EXPECT_THROW(parse_spec("{\"mark\": \"bar\","), SyntaxError);
  EXPECT_THROW(parse_spec("[1,2]"), SchemaError);
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"shape":{"field":"a","type":"nominal"},"x":{"field":"a","type":"nominal"}}})"),
               UnsupportedSpec);
  // No x, y or theta.
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"color":{"field":"a","type":"nominal"}}})"), SchemaError);
  // Facets must be categorical.
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"},
      "row":{"field":"b","type":"quantitative"}}})"), SchemaError);
  // Non-count aggregate on a nominal field.
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal","aggregate":"sum"}}})"),
               SchemaError);
  // Duplicate aggregate aliases.
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"}},
      "transform":[{"aggregate":[{"op":"sum","field":"b","as":"s"},{"op":"mean","field":"b","as":"s"}],"groupby":["a"]}]})"),
               SchemaError);
  EXPECT_THROW(parse_spec(R"({"layer":[],"mark":"bar"})"), UnsupportedSpec);
  EXPECT_THROW(parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"}},
      "transform":[{"calculate":"datum.a*2","as":"b"}]})"), UnsupportedSpec);
}

TEST(ParseSpec, CountPermitsNoField) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{
    "x":{"field":"a","type":"nominal"},"y":{"aggregate":"count"}}})");
  EXPECT_EQ(s.encoding(Channel::y)->aggregate, AggregateOp::count);
  EXPECT_TRUE(s.encoding(Channel::y)->field.empty());
  EXPECT_EQ(s.encoding(Channel::y)->type, FieldType::quantitative);
}

TEST(ParseSpec, FilterForms) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"}},
    "transform":[
      {"filter":{"field":"b","gt":1}},
      {"filter":"datum.c == 'x' && datum['d'] <= 2.5"},
      {"filter":{"not":{"field":"e","equal":true}}},
      {"filter":{"field":"a","oneOf":["u","v"]}},
      {"filter":{"field":"b","range":[0,10]}}
    ]})");
  ASSERT_EQ(s.transforms.size(), 7u);
  const auto& f0 = std::get<FilterTransform>(s.transforms[0]);
  EXPECT_EQ(f0.op, FilterOp::gt);
  EXPECT_EQ(std::get<double>(f0.values[0]), 1.0);
  const auto& f1 = std::get<FilterTransform>(s.transforms[1]);
  EXPECT_EQ(f1.field, "c");
  EXPECT_EQ(std::get<std::string>(f1.values[0]), "x");
  const auto& f2 = std::get<FilterTransform>(s.transforms[2]);
  EXPECT_EQ(f2.field, "d");
  EXPECT_EQ(f2.op, FilterOp::le);
  EXPECT_EQ(std::get<FilterTransform>(s.transforms[3]).op, FilterOp::ne);
  EXPECT_EQ(std::get<FilterTransform>(s.transforms[4]).values.size(), 2u);
  EXPECT_EQ(std::get<FilterTransform>(s.transforms[5]).op, FilterOp::ge);
  EXPECT_EQ(std::get<FilterTransform>(s.transforms[6]).op, FilterOp::le);
}

TEST(ParseSpec, SortForms) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{
    "x":{"field":"a","type":"nominal","sort":"-y"},
    "y":{"field":"b","type":"quantitative","sort":"descending"},
    "color":{"field":"c","type":"nominal","sort":["z","y"]}},
    "transform":[{"sort":[{"field":"b","order":"descending"}]}]})");
  EXPECT_EQ(s.encoding(Channel::x)->sort, SortOrder::desc);
  EXPECT_EQ(s.encoding(Channel::x)->sort_by, Channel::y);
  EXPECT_EQ(s.encoding(Channel::y)->sort, SortOrder::desc);
  EXPECT_FALSE(s.encoding(Channel::color)->sort.has_value());
  EXPECT_EQ(s.encoding(Channel::color)->extras["sort"], Json::array({"z", "y"}));
  ASSERT_EQ(s.transforms.size(), 1u);
  EXPECT_EQ(std::get<SortTransform>(s.transforms[0]).keys[0].order, SortOrder::desc);
}

TEST(ParseSpec, UnsupportedKeysArePreservedWithWarnings) {
  const ChartSpec s = parse_spec(R"({"$schema":"https://vega.github.io/schema/vega-lite/v5.json",
    "mark":{"type":"bar","tooltip":true},"config":{"view":{"stroke":null}},
    "encoding":{"x":{"field":"a","type":"nominal","axis":{"labelAngle":0}},"y":{"field":"b","type":"quantitative"}}})");
  EXPECT_EQ(s.warnings.size(), 3u);
  const std::string canon = normalize_spec(s);
  EXPECT_NE(canon.find("\"$schema\""), std::string::npos);
  EXPECT_NE(canon.find("\"labelAngle\":0"), std::string::npos);
  EXPECT_NE(canon.find("\"tooltip\":true"), std::string::npos);
  EXPECT_NE(canon.find("\"stroke\":null"), std::string::npos);
}

TEST(NormalizeSpec, KeyOrderInvariance) {
  const ChartSpec a = parse_spec(R"({"mark":"line","encoding":{"x":{"type":"ordinal","field":"t"},"y":{"field":"v","type":"quantitative"}},"title":"T"})");
  const ChartSpec b = parse_spec(R"({"title":"T","encoding":{"y":{"type":"quantitative","field":"v"},"x":{"field":"t","type":"ordinal"}},"mark":"line"})");
  EXPECT_EQ(normalize_spec(a), normalize_spec(b));
}

TEST(NormalizeSpec, CanonicalTextIsBitExact) {
  const ChartSpec s = parse_spec(R"({ "mark": "bar",
      "encoding": { "y": {"field": "b", "type": "quantitative", "aggregate": "mean"},
                    "x": {"field": "a", "type": "nominal"} },
      "transform": [ {"filter": {"field": "b", "gte": 2.50}} ], "width": 300 })");
  EXPECT_EQ(normalize_spec(s),
            R"({"encoding":{"x":{"field":"a","type":"nominal"},"y":{"aggregate":"mean","field":"b","type":"quantitative"}},)"
            R"("mark":"bar","transform":[{"filter":{"field":"b","gte":2.5}}],"width":300})");
}

TEST(NormalizeSpec, Idempotent) {
  const ChartSpec s = parse_spec(kMinimalBar);
  const std::string once = normalize_spec(s);
  EXPECT_EQ(normalize_spec(parse_spec(once)), once);
}

TEST(NormalizeSpec, IntegralFloatsMatchIntegers) {
  const auto a = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"}},
      "transform":[{"filter":{"field":"b","lt":10.0}}],"config":{"k":10.0}})");
  const auto b = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"}},
      "transform":[{"filter":{"field":"b","lt":10}}],"config":{"k":10}})");
  EXPECT_EQ(normalize_spec(a), normalize_spec(b));
  EXPECT_NE(normalize_spec(a).find("\"lt\":10}"), std::string::npos);
  EXPECT_EQ(canonicalize_json_text("[10.0, 10, 0.1, 1e2]"), "[10,10,0.1,100]");
}

TEST(NormalizeSpec, RoundTripProperty) {
  Rng rng(7);
  for (int i = 0; i < 300; ++i) {
    ChartSpec s = cases::random_spec(rng);
    if (i % 3 == 0) s.title = "t" + std::to_string(i);
    if (i % 4 == 0) s.extras["description"] = "d";
    const ChartSpec back = parse_spec(normalize_spec(s));
    ASSERT_EQ(back, s) << normalize_spec(s);
    ASSERT_EQ(normalize_spec(back), normalize_spec(s));
  }
}

TEST(StripTransforms, RemovesTransformsOnly) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"},
      "y":{"field":"b","type":"quantitative","aggregate":"sum"}},
      "transform":[{"filter":{"field":"b","gt":1}}]})");
  const ChartSpec t = strip_transforms(s);
  EXPECT_TRUE(t.transforms.empty());
  EXPECT_EQ(t.encodings, s.encodings);
  EXPECT_EQ(t.mark, s.mark);
}

TEST(StripTransforms, IdentityWithoutTransforms) {
  const ChartSpec s = parse_spec(kMinimalBar);
  EXPECT_EQ(strip_transforms(s), s);
}

TEST(StripTransforms, FilterPlusAggregateKeepsEncodingsFieldByField) {
  const ChartSpec s = parse_spec(R"({"mark":"line","encoding":{"x":{"field":"a","type":"ordinal","sort":"ascending"},
      "y":{"field":"total","type":"quantitative"},"color":{"field":"k","type":"nominal"}},
      "transform":[{"filter":{"field":"b","gt":1}},{"aggregate":[{"op":"sum","field":"b","as":"total"}],"groupby":["a","k"]}]})");
  const ChartSpec t = strip_transforms(s);
  EXPECT_TRUE(t.transforms.empty());
  ASSERT_EQ(t.encodings.size(), s.encodings.size());
  for (const auto& [ch, enc] : s.encodings) {
    const auto* other = t.encoding(ch);
    ASSERT_NE(other, nullptr);
    EXPECT_EQ(other->field, enc.field);
    EXPECT_EQ(other->type, enc.type);
    EXPECT_EQ(other->aggregate, enc.aggregate);
    EXPECT_EQ(other->sort, enc.sort);
    EXPECT_EQ(other->extras, enc.extras);
  }
  EXPECT_EQ(strip_transforms(t), t);
}

TEST(DiffSpecs, Cases) {
  const ChartSpec a = parse_spec(kMinimalBar);
  EXPECT_TRUE(diff_specs(a, a).empty());

  ChartSpec line = a;
  line.mark = Mark::line;
  const auto d = diff_specs(a, line);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].path, "mark");

  ChartSpec agg = a;
  agg.encodings[Channel::y].aggregate = AggregateOp::mean;
  const auto e = diff_specs(a, agg);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e[0].path, "encoding.y");
  EXPECT_EQ(e[0].after["aggregate"], "mean");
}

TEST(ReferencedFields, SkipsAggregateAliases) {
  const ChartSpec s = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"a","type":"nominal"},
      "y":{"field":"total","type":"quantitative"}},
      "transform":[{"filter":{"field":"c","gt":1}},{"aggregate":[{"op":"sum","field":"b","as":"total"}],"groupby":["a"]}]})");
  EXPECT_EQ(referenced_fields(s), (std::vector<std::string>{"c", "b", "a"}));
}

TEST(ParseSpec, NumberOverflowIsASyntaxError) {
  EXPECT_THROW(parse_spec(R"({"mark":"bar","width":1e400})"), SyntaxError);
  EXPECT_THROW(canonicalize_json_text("[1e400]"), SyntaxError);
}
