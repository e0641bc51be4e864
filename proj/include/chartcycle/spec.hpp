#pragma once

// Declarative chart specifications: the Vega-Lite subset this toolkit
// parses, executes, renders and scores.

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chartcycle {

using Json = nlohmann::json;

enum class Mark { bar, line, point, arc, area };
enum class Channel { x, y, color, size, theta, row, column };
enum class FieldType { quantitative, nominal, ordinal, temporal };
enum class AggregateOp { sum, mean, count, min, max, median };
enum class SortOrder { none, asc, desc };
enum class FilterOp { eq, ne, lt, le, gt, ge, in };

inline constexpr std::array<Channel, 7> kAllChannels = {
    Channel::x, Channel::y, Channel::color, Channel::size,
    Channel::theta, Channel::row, Channel::column};

inline constexpr bool is_facet(Channel c) noexcept {
  return c == Channel::row || c == Channel::column;
}

std::string_view to_string(Mark m) noexcept;
std::string_view to_string(Channel c) noexcept;
std::string_view to_string(FieldType t) noexcept;
std::string_view to_string(AggregateOp op) noexcept;
std::string_view to_string(FilterOp op) noexcept;

std::optional<Mark> mark_from_string(std::string_view s) noexcept;
std::optional<Channel> channel_from_string(std::string_view s) noexcept;
std::optional<FieldType> field_type_from_string(std::string_view s) noexcept;
std::optional<AggregateOp> aggregate_from_string(std::string_view s) noexcept;

struct FieldEncoding {
  std::string field;  // empty only for a field-less count
  FieldType type = FieldType::nominal;
  std::optional<AggregateOp> aggregate;
  std::optional<SortOrder> sort;
  // Set for channel-referencing sorts such as "-y".
  std::optional<Channel> sort_by;
  // Keys outside the subset (axis, scale, title, ...), kept verbatim.
  Json extras = Json::object();

  bool operator==(const FieldEncoding&) const = default;
};

using Literal = std::variant<double, std::string, bool>;

struct FilterTransform {
  std::string field;
  FilterOp op = FilterOp::eq;
  std::vector<Literal> values;  // one literal, several for `in`

  bool operator==(const FilterTransform&) const = default;
};

struct AggregateMeasure {
  AggregateOp op = AggregateOp::count;
  std::string field;
  std::string alias;

  bool operator==(const AggregateMeasure&) const = default;
};

struct AggregateTransform {
  std::vector<AggregateMeasure> measures;
  std::vector<std::string> groupby;

  bool operator==(const AggregateTransform&) const = default;
};

struct SortKey {
  std::string field;
  SortOrder order = SortOrder::asc;

  bool operator==(const SortKey&) const = default;
};

struct SortTransform {
  std::vector<SortKey> keys;

  bool operator==(const SortTransform&) const = default;
};

using Transform = std::variant<FilterTransform, AggregateTransform, SortTransform>;

struct ChartSpec {
  Mark mark = Mark::bar;
  std::map<Channel, FieldEncoding> encodings;
  std::vector<Transform> transforms;
  std::optional<std::string> title;
  std::optional<int> width;
  std::optional<int> height;
  Json mark_extras = Json::object();
  Json extras = Json::object();
  // Parse diagnostics; not part of the value.
  std::vector<std::string> warnings;

  const FieldEncoding* encoding(Channel c) const;
  bool has(Channel c) const { return encodings.count(c) != 0; }
  bool faceted() const { return has(Channel::row) || has(Channel::column); }

  friend bool operator==(const ChartSpec& a, const ChartSpec& b);
};

/// Parses a Vega-Lite document. Throws SyntaxError, UnsupportedSpec or
/// SchemaError.
ChartSpec parse_spec(std::string_view text);
ChartSpec spec_from_json(const Json& doc);

/// Checks the structural invariants; throws SchemaError or UnsupportedSpec.
void validate_spec(const ChartSpec& spec);

Json spec_to_json(const ChartSpec& spec);

/// Canonical text: sorted keys, no whitespace, integral numbers without a
/// fraction, other numbers in shortest round-trip form.
std::string normalize_spec(const ChartSpec& spec);

/// Canonical text for an arbitrary JSON value (used for scoring model
/// output that may fall outside the supported subset).
std::string canonical_json(const Json& value);

/// Parses any JSON text and returns its canonical form. Throws SyntaxError.
std::string canonicalize_json_text(std::string_view text);

/// The transform-free form: what a rendered image can reveal.
ChartSpec strip_transforms(const ChartSpec& spec);

struct SpecDifference {
  std::string path;  // "mark", "encoding.x", "transform[0]", ...
  Json before;
  Json after;

  bool operator==(const SpecDifference&) const = default;
};

std::vector<SpecDifference> diff_specs(const ChartSpec& a, const ChartSpec& b);

/// Every field name the spec reads from its input table, in first-use order.
std::vector<std::string> referenced_fields(const ChartSpec& spec);

}  // namespace chartcycle
