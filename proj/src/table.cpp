#include "chartcycle/table.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/text.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace chartcycle {

std::string_view to_string(ColumnType t) noexcept {
  switch (t) {
    case ColumnType::number: return "number";
    case ColumnType::string: return "string";
    case ColumnType::boolean: return "boolean";
  }
  return "?";
}

std::vector<std::vector<std::string>> split_csv_records(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"') {
      in_quotes = true;
      any = true;
    } else if (c == ',') {
      record.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      record.push_back(std::move(field));
      field.clear();
      records.push_back(std::move(record));
      record.clear();
      any = false;
    } else {
      field.push_back(c);
      any = true;
    }
  }
  if (any || !field.empty() || !record.empty()) {
    record.push_back(std::move(field));
    records.push_back(std::move(record));
  }
  // Trailing blank lines carry no rows.
  while (!records.empty() && records.back().size() == 1 && records.back()[0].empty()) records.pop_back();
  return records;
}

namespace {

bool cell_matches(const Cell& c, ColumnType t) noexcept {
  if (is_null(c)) return true;
  switch (t) {
    case ColumnType::number: return std::holds_alternative<double>(c);
    case ColumnType::string: return std::holds_alternative<std::string>(c);
    case ColumnType::boolean: return std::holds_alternative<bool>(c);
  }
  return false;
}

bool needs_quoting(std::string_view s) {
  return s.find_first_of(",\"\n\r") != std::string_view::npos;
}

std::string quote_field(std::string_view s) {
  if (!needs_quoting(s)) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::optional<bool> parse_bool(std::string_view s) {
  const std::string lower = text::to_lower(s);
  if (lower == "true") return true;
  if (lower == "false") return false;
  return std::nullopt;
}

bool looks_integral(std::string_view s) {
  return s.find_first_of(".eE") == std::string_view::npos;
}

struct CellLess {
  bool operator()(const std::vector<Cell>& a, const std::vector<Cell>& b) const noexcept {
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
      const int c = compare_cells(a[i], b[i]);
      if (c != 0) return c < 0;
    }
    return a.size() < b.size();
  }
};

bool literal_fits(const Literal& lit, ColumnType t) {
  switch (t) {
    case ColumnType::number: return std::holds_alternative<double>(lit);
    case ColumnType::string: return std::holds_alternative<std::string>(lit);
    case ColumnType::boolean: return std::holds_alternative<bool>(lit);
  }
  return false;
}

Cell literal_cell(const Literal& lit) {
  return std::visit([](const auto& v) { return Cell(v); }, lit);
}

bool filter_keeps(const Cell& cell, const FilterTransform& f) {
  if (f.op == FilterOp::in) {
    if (is_null(cell)) return false;
    return std::any_of(f.values.begin(), f.values.end(),
                       [&](const Literal& v) { return compare_cells(cell, literal_cell(v)) == 0; });
  }
  if (is_null(cell)) return f.op == FilterOp::ne;
  const int c = compare_cells(cell, literal_cell(f.values.front()));
  switch (f.op) {
    case FilterOp::eq: return c == 0;
    case FilterOp::ne: return c != 0;
    case FilterOp::lt: return c < 0;
    case FilterOp::le: return c <= 0;
    case FilterOp::gt: return c > 0;
    case FilterOp::ge: return c >= 0;
    case FilterOp::in: break;
  }
  return false;
}

Table apply_filter(const Table& t, const FilterTransform& f) {
  const std::size_t idx = t.index_of(f.field);
  const Column& col = t.columns()[idx];
  for (const auto& v : f.values)
    if (!literal_fits(v, col.type))
      throw TypeMismatch("filter literal on '" + f.field + "' does not match its " +
                         std::string(to_string(col.type)) + " column");
  if (col.type == ColumnType::boolean && f.op != FilterOp::eq && f.op != FilterOp::ne && f.op != FilterOp::in)
    throw TypeMismatch("ordered comparison on boolean column '" + f.field + "'");
  std::vector<Row> rows;
  for (const auto& r : t.rows())
    if (filter_keeps(r[idx], f)) rows.push_back(r);
  return Table(t.columns(), std::move(rows));
}

void stable_sort_rows(std::vector<Row>& rows, const std::vector<std::pair<std::size_t, SortOrder>>& keys) {
  if (keys.empty()) return;
  std::stable_sort(rows.begin(), rows.end(), [&](const Row& a, const Row& b) {
    for (const auto& [idx, order] : keys) {
      const int c = compare_cells(a[idx], b[idx]);
      if (c != 0) return order == SortOrder::desc ? c > 0 : c < 0;
    }
    return false;
  });
}

Table apply_sort(const Table& t, const SortTransform& s) {
  std::vector<std::pair<std::size_t, SortOrder>> keys;
  for (const auto& k : s.keys) keys.emplace_back(t.index_of(k.field), k.order);
  std::vector<Row> rows = t.rows();
  stable_sort_rows(rows, keys);
  return Table(t.columns(), std::move(rows));
}

struct Measure {
  AggregateOp op;
  std::optional<std::size_t> source;  // field-less count has none
  std::string name;
};

Cell fold(AggregateOp op, const std::vector<const Row*>& group, std::optional<std::size_t> source) {
  if (op == AggregateOp::count) return static_cast<double>(group.size());
  std::vector<double> values;
  values.reserve(group.size());
  for (const Row* r : group)
    if (const double* v = std::get_if<double>(&(*r)[*source])) values.push_back(*v);
  if (op == AggregateOp::sum) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  if (values.empty()) return Null{};
  switch (op) {
    case AggregateOp::mean: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / static_cast<double>(values.size());
    }
    case AggregateOp::min: return *std::min_element(values.begin(), values.end());
    case AggregateOp::max: return *std::max_element(values.begin(), values.end());
    case AggregateOp::median: {
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    }
    default: break;
  }
  return Null{};
}

Column measure_column(const Measure& m, const Table& t) {
  Column col{m.name, ColumnType::number, false};
  switch (m.op) {
    case AggregateOp::count: col.integral = true; break;
    case AggregateOp::sum:
    case AggregateOp::min:
    case AggregateOp::max: col.integral = t.columns()[*m.source].integral; break;
    default: break;
  }
  return col;
}

/// Groups rows by the key columns in first-appearance order and folds each
/// measure. Output columns: keys (renamed), then measures.
Table group_and_fold(const Table& t, const std::vector<std::size_t>& keys,
                     const std::vector<std::string>& key_names, const std::vector<Measure>& measures) {
  for (const auto& m : measures) {
    if (m.op == AggregateOp::count) continue;
    const Column& src = t.columns()[*m.source];
    if (src.type != ColumnType::number)
      throw TypeMismatch("aggregate '" + std::string(to_string(m.op)) + "' needs a numeric field, '" +
                         src.name + "' is " + std::string(to_string(src.type)));
  }
  std::map<std::vector<Cell>, std::size_t, CellLess> index;
  std::vector<std::vector<Cell>> group_keys;
  std::vector<std::vector<const Row*>> groups;
  if (keys.empty() && !t.empty()) {
    group_keys.emplace_back();
    groups.emplace_back();
  }
  for (const auto& r : t.rows()) {
    if (keys.empty()) {
      groups[0].push_back(&r);
      continue;
    }
    std::vector<Cell> key;
    key.reserve(keys.size());
    for (std::size_t k : keys) key.push_back(r[k]);
    auto [it, inserted] = index.emplace(key, groups.size());
    if (inserted) {
      group_keys.push_back(std::move(key));
      groups.emplace_back();
    }
    groups[it->second].push_back(&r);
  }
  std::vector<Column> cols;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    Column c = t.columns()[keys[i]];
    c.name = key_names[i];
    cols.push_back(std::move(c));
  }
  for (const auto& m : measures) cols.push_back(measure_column(m, t));
  std::vector<Row> rows;
  rows.reserve(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    Row row = group_keys[g];
    for (const auto& m : measures) row.push_back(fold(m.op, groups[g], m.source));
    rows.push_back(std::move(row));
  }
  return Table(std::move(cols), std::move(rows));
}

Table apply_aggregate(const Table& t, const AggregateTransform& a) {
  std::vector<std::size_t> keys;
  for (const auto& g : a.groupby) keys.push_back(t.index_of(g));
  std::vector<Measure> measures;
  for (const auto& m : a.measures) {
    Measure mm{m.op, std::nullopt, m.alias};
    if (!m.field.empty()) mm.source = t.index_of(m.field);
    if (m.op != AggregateOp::count && !mm.source)
      throw MissingField("aggregate '" + m.alias + "' has no field");
    measures.push_back(std::move(mm));
  }
  return group_and_fold(t, keys, a.groupby, measures);
}

}  // namespace

int compare_cells(const Cell& a, const Cell& b) noexcept {
  if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
  if (const double* x = std::get_if<double>(&a)) {
    const double y = std::get<double>(b);
    return *x < y ? -1 : (*x > y ? 1 : 0);
  }
  if (const std::string* x = std::get_if<std::string>(&a)) {
    const int c = x->compare(std::get<std::string>(b));
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
  }
  if (const bool* x = std::get_if<bool>(&a)) {
    const bool y = std::get<bool>(b);
    return *x == y ? 0 : (*x ? 1 : -1);
  }
  return 0;
}

Table::Table(std::vector<Column> columns, std::vector<Row> rows)
    : columns_(std::move(columns)), rows_(std::move(rows)) {
  std::set<std::string> names;
  for (const auto& c : columns_) {
    if (!names.insert(c.name).second) throw SchemaError("duplicate column name '" + c.name + "'");
    if (c.integral && c.type != ColumnType::number)
      throw SchemaError("column '" + c.name + "' is marked integral but is not numeric");
  }
  for (std::size_t r = 0; r < rows_.size(); ++r) {
    if (rows_[r].size() != columns_.size())
      throw SchemaError("row " + std::to_string(r) + " has " + std::to_string(rows_[r].size()) +
                        " cells, expected " + std::to_string(columns_.size()));
    for (std::size_t c = 0; c < columns_.size(); ++c) {
      const Cell& cell = rows_[r][c];
      if (!cell_matches(cell, columns_[c].type))
        throw SchemaError("cell (" + std::to_string(r) + ", " + columns_[c].name + ") does not match the " +
                          std::string(to_string(columns_[c].type)) + " column type");
      if (columns_[c].integral)
        if (const double* v = std::get_if<double>(&cell); v && std::trunc(*v) != *v)
          columns_[c].integral = false;
    }
  }
}

std::optional<std::size_t> Table::find(std::string_view name) const noexcept {
  for (std::size_t i = 0; i < columns_.size(); ++i)
    if (columns_[i].name == name) return i;
  return std::nullopt;
}

std::size_t Table::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw MissingField("field '" + std::string(name) + "' does not exist in the table");
}

Table parse_csv(std::string_view text) {
  if (text::trim(text).empty()) throw EmptyInput("CSV input is empty");
  auto records = split_csv_records(text);
  if (records.empty()) throw EmptyInput("CSV input has no header");
  const auto& header = records.front();
  const std::size_t width = header.size();
  for (std::size_t r = 1; r < records.size(); ++r)
    if (records[r].size() != width)
      throw RaggedRow("line " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(width));

  std::vector<Column> columns;
  for (std::size_t c = 0; c < width; ++c) {
    bool numeric = true, boolean = true, integral = true, any = false;
    for (std::size_t r = 1; r < records.size(); ++r) {
      const std::string& s = records[r][c];
      if (s.empty()) continue;
      any = true;
      if (numeric) {
        if (!text::parse_number(s)) numeric = false;
        else if (!looks_integral(s)) integral = false;
      }
      if (boolean && !parse_bool(s)) boolean = false;
    }
    ColumnType type = ColumnType::string;
    if (any && numeric) type = ColumnType::number;
    else if (any && boolean) type = ColumnType::boolean;
    columns.push_back({header[c], type, type == ColumnType::number && integral});
  }

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (std::size_t r = 1; r < records.size(); ++r) {
    Row row;
    row.reserve(width);
    for (std::size_t c = 0; c < width; ++c) {
      const std::string& s = records[r][c];
      if (s.empty()) {
        row.emplace_back(Null{});
        continue;
      }
      switch (columns[c].type) {
        case ColumnType::number: row.emplace_back(*text::parse_number(s)); break;
        case ColumnType::boolean: row.emplace_back(*parse_bool(s)); break;
        case ColumnType::string: row.emplace_back(s); break;
      }
    }
    rows.push_back(std::move(row));
  }
  return Table(std::move(columns), std::move(rows));
}

std::string format_cell(const Cell& cell, const Column& column) {
  if (const double* v = std::get_if<double>(&cell)) return text::format_number(*v, column.integral);
  if (const std::string* s = std::get_if<std::string>(&cell)) return *s;
  if (const bool* b = std::get_if<bool>(&cell)) return *b ? "true" : "false";
  return "";
}

std::string serialize_csv(const Table& table) {
  std::string out;
  for (std::size_t c = 0; c < table.num_columns(); ++c) {
    if (c) out.push_back(',');
    out += quote_field(table.columns()[c].name);
  }
  out.push_back('\n');
  for (const auto& row : table.rows()) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out.push_back(',');
      out += quote_field(format_cell(row[c], table.columns()[c]));
    }
    out.push_back('\n');
  }
  return out;
}

std::string normalize_table_text(std::string_view input) {
  std::string s(input);
  s = text::replace_all(std::move(s), "\\r\\n", "\n");
  s = text::replace_all(std::move(s), "\\n", "\n");
  s = text::replace_all(std::move(s), "\r\n", "\n");
  s = text::strip_accents(s);
  std::vector<std::string> lines;
  for (const auto& raw : text::split_lines(s)) {
    std::string line = text::collapse_whitespace(raw);
    // Spaces hugging a delimiter are redundant.
    line = text::replace_all(std::move(line), " ,", ",");
    line = text::replace_all(std::move(line), ", ", ",");
    if (line.empty()) continue;
    if (!lines.empty() && line == lines.front()) continue;
    lines.push_back(std::move(line));
  }
  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i) out.push_back('\n');
    out += lines[i];
  }
  return out;
}

Table apply_transform_block(const ChartSpec& spec, const Table& raw) {
  Table t = raw;
  for (const auto& tr : spec.transforms) {
    if (const auto* f = std::get_if<FilterTransform>(&tr)) t = apply_filter(t, *f);
    else if (const auto* a = std::get_if<AggregateTransform>(&tr)) t = apply_aggregate(t, *a);
    else t = apply_sort(t, std::get<SortTransform>(tr));
  }
  return t;
}

VisTable execute_transforms(const ChartSpec& spec, const Table& raw) {
  const Table t = apply_transform_block(spec, raw);

  struct Slot {
    Channel channel;
    const FieldEncoding* enc;
    std::optional<std::size_t> source;
  };
  std::vector<Slot> slots;
  for (Channel ch : kAllChannels) {
    const FieldEncoding* enc = spec.encoding(ch);
    if (!enc) continue;
    Slot s{ch, enc, std::nullopt};
    if (!enc->field.empty()) s.source = t.index_of(enc->field);
    if (is_facet(ch) && t.columns()[*s.source].type != ColumnType::string)
      throw TypeMismatch("facet channel " + std::string(to_string(ch)) + " needs a string field, '" +
                         enc->field + "' is " + std::string(to_string(t.columns()[*s.source].type)));
    slots.push_back(s);
  }

  const bool aggregated = std::any_of(slots.begin(), slots.end(), [](const Slot& s) { return s.enc->aggregate; });
  std::vector<Column> cols;
  std::vector<Row> rows;
  if (aggregated) {
    // Group by every distinct non-aggregated field, fold every aggregated one.
    std::vector<std::size_t> keys;
    std::vector<std::string> key_names;
    std::vector<Measure> measures;
    for (const auto& s : slots) {
      if (s.enc->aggregate) {
        measures.push_back({*s.enc->aggregate, s.source, std::string(to_string(s.channel))});
      } else if (std::find(keys.begin(), keys.end(), *s.source) == keys.end()) {
        keys.push_back(*s.source);
        key_names.push_back(std::to_string(keys.size() - 1));
      }
    }
    const Table grouped = group_and_fold(t, keys, key_names, measures);
    std::size_t measure_index = 0;
    std::vector<std::size_t> picks;
    for (const auto& s : slots) {
      std::size_t pick;
      if (s.enc->aggregate) {
        pick = keys.size() + measure_index++;
      } else {
        pick = static_cast<std::size_t>(std::find(keys.begin(), keys.end(), *s.source) - keys.begin());
      }
      Column c = grouped.columns()[pick];
      c.name = std::string(to_string(s.channel));
      cols.push_back(std::move(c));
      picks.push_back(pick);
    }
    for (const auto& g : grouped.rows()) {
      Row r;
      for (std::size_t p : picks) r.push_back(g[p]);
      rows.push_back(std::move(r));
    }
  } else {
    for (const auto& s : slots) {
      Column c = t.columns()[*s.source];
      c.name = std::string(to_string(s.channel));
      cols.push_back(std::move(c));
    }
    for (const auto& src : t.rows()) {
      Row r;
      for (const auto& s : slots) r.push_back(src[*s.source]);
      rows.push_back(std::move(r));
    }
  }
  if (rows.empty()) throw EmptyResult("no rows remain after applying the spec's transforms");

  auto col_index = [&](std::string_view name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i].name == name) return i;
    return std::nullopt;
  };

  if (spec.mark == Mark::arc && spec.has(Channel::theta)) {
    const std::size_t theta = *col_index("theta");
    if (cols[theta].type != ColumnType::number)
      throw TypeMismatch("theta must be numeric for arc percentages");
    std::vector<std::size_t> facet_cols;
    for (auto name : {"row", "column"})
      if (auto i = col_index(name)) facet_cols.push_back(*i);
    std::map<std::vector<Cell>, double, CellLess> totals;
    auto facet_key = [&](const Row& r) {
      std::vector<Cell> k;
      for (std::size_t i : facet_cols) k.push_back(r[i]);
      return k;
    };
    for (const auto& r : rows)
      if (const double* v = std::get_if<double>(&r[theta])) totals[facet_key(r)] += *v;
    std::vector<Row> with_pct;
    for (auto& r : rows) {
      Cell pct = Null{};
      if (const double* v = std::get_if<double>(&r[theta])) {
        const double total = totals[facet_key(r)];
        pct = total == 0.0 ? 0.0 : 100.0 * *v / total;
      }
      r.insert(r.begin() + static_cast<std::ptrdiff_t>(theta) + 1, pct);
    }
    cols.insert(cols.begin() + static_cast<std::ptrdiff_t>(theta) + 1,
                Column{"percentage", ColumnType::number, false});
  }

  std::vector<std::pair<std::size_t, SortOrder>> sort_keys;
  for (const auto& s : slots) {
    if (!s.enc->sort || *s.enc->sort == SortOrder::none) continue;
    const Channel by = s.enc->sort_by.value_or(s.channel);
    if (auto i = col_index(to_string(by))) sort_keys.emplace_back(*i, *s.enc->sort);
  }
  stable_sort_rows(rows, sort_keys);
  return Table(std::move(cols), std::move(rows));
}

void validate_vis_table(const Table& table) {
  std::size_t last = 0;
  for (const auto& c : table.columns()) {
    auto it = std::find(kVisColumnOrder.begin(), kVisColumnOrder.end(), c.name);
    if (it == kVisColumnOrder.end()) throw SchemaError("'" + c.name + "' is not a visualization-table column");
    const auto pos = static_cast<std::size_t>(it - kVisColumnOrder.begin()) + 1;
    if (pos <= last) throw SchemaError("visualization-table columns are out of order");
    last = pos;
  }
}

nlohmann::ordered_json table_info(const Table& table, std::size_t example_rows) {
  nlohmann::ordered_json types = nlohmann::ordered_json::object();
  for (const auto& c : table.columns()) types[c.name] = std::string(to_string(c.type));
  nlohmann::ordered_json examples = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < std::min(example_rows, table.num_rows()); ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (const auto& cell : table.rows()[r])
      std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Null>) row.push_back(nullptr);
        else row.push_back(v);
      }, cell);
    examples.push_back(std::move(row));
  }
  nlohmann::ordered_json out;
  out["columns_with_type"] = std::move(types);
  out["column_examples"] = std::move(examples);
  return out;
}

nlohmann::ordered_json table_to_values(const Table& table) {
  nlohmann::ordered_json values = nlohmann::ordered_json::array();
  for (const auto& row : table.rows()) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) {
      const Column& col = table.columns()[c];
      std::visit([&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Null>) obj[col.name] = nullptr;
        else if constexpr (std::is_same_v<T, double>) {
          if (col.integral && std::fabs(v) < 9.2e18) obj[col.name] = static_cast<std::int64_t>(v);
          else obj[col.name] = v;
        } else obj[col.name] = v;
      }, row[c]);
    }
    values.push_back(std::move(obj));
  }
  return values;
}

Table table_from_values(const nlohmann::ordered_json& values) {
  if (!values.is_array()) throw SchemaError("data values must be an array of objects");
  std::vector<std::string> names;
  for (const auto& row : values) {
    if (!row.is_object()) throw SchemaError("data values must be objects");
    for (const auto& [k, v] : row.items())
      if (std::find(names.begin(), names.end(), k) == names.end()) names.push_back(k);
  }
  std::vector<Column> cols;
  for (const auto& name : names) {
    std::optional<ColumnType> type;
    bool integral = true;
    for (const auto& row : values) {
      auto it = row.find(name);
      if (it == row.end() || it->is_null()) continue;
      ColumnType t;
      if (it->is_number()) {
        t = ColumnType::number;
        if (it->is_number_float()) integral = false;
      } else if (it->is_string()) {
        t = ColumnType::string;
      } else if (it->is_boolean()) {
        t = ColumnType::boolean;
      } else {
        throw SchemaError("data value for '" + name + "' is not a scalar");
      }
      if (type && *type != t) throw SchemaError("column '" + name + "' mixes value types");
      type = t;
    }
    const ColumnType t = type.value_or(ColumnType::string);
    cols.push_back({name, t, t == ColumnType::number && integral});
  }
  std::vector<Row> rows;
  for (const auto& row : values) {
    Row r;
    for (const auto& name : names) {
      auto it = row.find(name);
      if (it == row.end() || it->is_null()) r.emplace_back(Null{});
      else if (it->is_number()) r.emplace_back(it->get<double>());
      else if (it->is_string()) r.emplace_back(it->get<std::string>());
      else r.emplace_back(it->get<bool>());
    }
    rows.push_back(std::move(r));
  }
  return Table(std::move(cols), std::move(rows));
}

}  // namespace chartcycle
