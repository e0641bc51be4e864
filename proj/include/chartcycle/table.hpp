#pragma once

// Typed columnar tables, CSV text, and the transform engine that turns a
// raw table plus a chart spec into the visualization-level table.

#include "chartcycle/spec.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace chartcycle {

enum class ColumnType { number, string, boolean };

std::string_view to_string(ColumnType t) noexcept;

struct Null {
  bool operator==(const Null&) const = default;
};

using Cell = std::variant<Null, double, std::string, bool>;

inline bool is_null(const Cell& c) noexcept { return std::holds_alternative<Null>(c); }

struct Column {
  std::string name;
  ColumnType type = ColumnType::string;
  // Number columns only: every value is a whole number and prints without
  // a fraction.
  bool integral = false;

  bool operator==(const Column&) const = default;
};

using Row = std::vector<Cell>;

/// Rectangular table with unique column names and type-checked cells.
class Table {
 public:
  Table() = default;
  /// Throws SchemaError when the invariants do not hold.
  Table(std::vector<Column> columns, std::vector<Row> rows);

  const std::vector<Column>& columns() const noexcept { return columns_; }
  const std::vector<Row>& rows() const noexcept { return rows_; }
  std::size_t num_rows() const noexcept { return rows_.size(); }
  std::size_t num_columns() const noexcept { return columns_.size(); }
  bool empty() const noexcept { return rows_.empty(); }

  std::optional<std::size_t> find(std::string_view name) const noexcept;
  /// Throws MissingField.
  std::size_t index_of(std::string_view name) const;
  const Column& column(std::string_view name) const { return columns_[index_of(name)]; }

  bool operator==(const Table&) const = default;

 private:
  std::vector<Column> columns_;
  std::vector<Row> rows_;
};

using RawTable = Table;
/// Columns restricted to x, y, color, size, theta, percentage, row, column.
using VisTable = Table;

/// Output column order of the visualization-level table.
inline constexpr std::array<std::string_view, 8> kVisColumnOrder = {
    "x", "y", "color", "size", "theta", "percentage", "row", "column"};

/// First line is the header; a column is numeric iff every non-empty cell
/// parses as a number, boolean iff every non-empty cell is true/false.
/// Throws EmptyInput, RaggedRow.
Table parse_csv(std::string_view text);

/// Raw RFC 4180 records without typing; rows may be ragged. Trailing
/// blank lines are dropped.
std::vector<std::vector<std::string>> split_csv_records(std::string_view text);

/// Comma separated, LF rows, header first; fields are quoted only when
/// they contain a comma, quote or newline.
std::string serialize_csv(const Table& table);

std::string format_cell(const Cell& cell, const Column& column);

/// Decodes escaped newlines, strips accents, collapses whitespace, drops
/// blank lines and repeated header lines.
std::string normalize_table_text(std::string_view text);

/// Applies only the spec's transform block (filter/aggregate/sort) to the
/// raw table. This is the data a transform-stripped spec renders from.
Table apply_transform_block(const ChartSpec& spec, const Table& raw);

/// Full pipeline: transform block, encoding-level aggregation, projection
/// to channel columns, encoding sort, arc percentages.
/// Throws MissingField, TypeMismatch, EmptyResult.
VisTable execute_transforms(const ChartSpec& spec, const Table& raw);

/// Throws SchemaError when the table is not a legal visualization table.
void validate_vis_table(const Table& table);

/// Data summary passed to models: {"columns_with_type", "column_examples"}.
nlohmann::ordered_json table_info(const Table& table, std::size_t example_rows = 3);

/// Inline `data.values` rows, one object per row, in column order.
nlohmann::ordered_json table_to_values(const Table& table);
/// Inverse of table_to_values; column types inferred from JSON types.
/// Throws SchemaError on non-scalar cells or mixed-type columns.
Table table_from_values(const nlohmann::ordered_json& values);

/// Three-way compare used for sorting: nulls first, then numbers, strings,
/// booleans by value.
int compare_cells(const Cell& a, const Cell& b) noexcept;

}  // namespace chartcycle
