#include "chartcycle/spec.hpp"

#include "chartcycle/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <regex>
#include <set>

namespace chartcycle {

namespace {

constexpr std::array<std::pair<Mark, std::string_view>, 5> kMarks = {{
    {Mark::bar, "bar"}, {Mark::line, "line"}, {Mark::point, "point"},
    {Mark::arc, "arc"}, {Mark::area, "area"}}};

constexpr std::array<std::pair<Channel, std::string_view>, 7> kChannels = {{
    {Channel::x, "x"}, {Channel::y, "y"}, {Channel::color, "color"},
    {Channel::size, "size"}, {Channel::theta, "theta"}, {Channel::row, "row"},
    {Channel::column, "column"}}};

constexpr std::array<std::pair<FieldType, std::string_view>, 4> kTypes = {{
    {FieldType::quantitative, "quantitative"}, {FieldType::nominal, "nominal"},
    {FieldType::ordinal, "ordinal"}, {FieldType::temporal, "temporal"}}};

constexpr std::array<std::pair<AggregateOp, std::string_view>, 6> kAggregates = {{
    {AggregateOp::sum, "sum"}, {AggregateOp::mean, "mean"}, {AggregateOp::count, "count"},
    {AggregateOp::min, "min"}, {AggregateOp::max, "max"}, {AggregateOp::median, "median"}}};

// Top-level keys whose presence means the document uses composition the
// subset does not model.
constexpr std::array<std::string_view, 7> kCompositionKeys = {
    "layer", "hconcat", "vconcat", "concat", "repeat", "facet", "spec"};

template <typename E, std::size_t N>
std::string_view lookup_name(const std::array<std::pair<E, std::string_view>, N>& table, E v) {
  for (const auto& [e, name] : table)
    if (e == v) return name;
  return "?";
}

template <typename E, std::size_t N>
std::optional<E> lookup_value(const std::array<std::pair<E, std::string_view>, N>& table,
                              std::string_view s) {
  for (const auto& [e, name] : table)
    if (name == s) return e;
  return std::nullopt;
}

std::string describe(const Json& j) { return j.dump(); }

Literal literal_from_json(const Json& v, std::string_view where) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>();
  throw SchemaError("filter literal in " + std::string(where) + " must be a number, string or boolean, got " +
                    describe(v));
}

Json literal_to_json(const Literal& l) {
  return std::visit([](const auto& v) { return Json(v); }, l);
}

std::optional<SortOrder> order_from_string(std::string_view s) {
  if (s == "ascending") return SortOrder::asc;
  if (s == "descending") return SortOrder::desc;
  return std::nullopt;
}

std::string_view order_to_string(SortOrder o) {
  return o == SortOrder::desc ? "descending" : "ascending";
}

AggregateOp parse_aggregate_op(const Json& v, std::string_view where) {
  if (!v.is_string()) throw SchemaError(std::string(where) + ": aggregate must be a string");
  const auto s = v.get<std::string>();
  if (s == "average") return AggregateOp::mean;
  if (auto op = aggregate_from_string(s)) return *op;
  throw UnsupportedSpec(std::string(where) + ": aggregate '" + s + "' is outside the supported subset");
}

void parse_sort(const Json& v, FieldEncoding& enc, std::string_view where,
                std::vector<std::string>& warnings) {
  if (v.is_null()) {
    enc.sort = SortOrder::none;
    return;
  }
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (auto order = order_from_string(s)) {
      enc.sort = *order;
      return;
    }
    const bool desc = !s.empty() && s.front() == '-';
    if (auto ch = channel_from_string(desc ? std::string_view(s).substr(1) : std::string_view(s))) {
      enc.sort = desc ? SortOrder::desc : SortOrder::asc;
      enc.sort_by = *ch;
      return;
    }
  } else if (v.is_object()) {
    const auto order_it = v.find("order");
    std::optional<SortOrder> order = SortOrder::asc;
    if (order_it != v.end()) {
      order = order_it->is_null() ? std::optional(SortOrder::none)
              : order_it->is_string() ? order_from_string(order_it->get<std::string>())
                                      : std::nullopt;
    }
    const bool only_known = std::all_of(v.items().begin(), v.items().end(), [](const auto& kv) {
      return kv.key() == "order" || kv.key() == "encoding" || kv.key() == "field";
    });
    if (order && only_known) {
      if (auto e = v.find("encoding"); e != v.end() && e->is_string()) {
        if (auto ch = channel_from_string(e->get<std::string>())) {
          enc.sort = *order;
          enc.sort_by = *ch;
          return;
        }
      } else if (auto f = v.find("field"); f != v.end()) {
        if (f->is_string() && f->get<std::string>() == enc.field) {
          enc.sort = *order;
          return;
        }
      } else {
        enc.sort = *order;
        return;
      }
    }
  }
  enc.extras["sort"] = v;
  warnings.push_back(std::string(where) + ".sort: unsupported sort form preserved verbatim");
}

FieldEncoding parse_encoding(const Json& def, Channel ch, std::vector<std::string>& warnings) {
  const std::string where = "encoding." + std::string(to_string(ch));
  if (!def.is_object()) throw SchemaError(where + " must be an object");
  FieldEncoding enc;
  std::optional<Json> sort_value;
  bool has_type = false;
  for (const auto& [key, value] : def.items()) {
    if (key == "field") {
      if (!value.is_string()) throw UnsupportedSpec(where + ".field must be a plain column name");
      enc.field = value.get<std::string>();
    } else if (key == "type") {
      if (!value.is_string()) throw SchemaError(where + ".type must be a string");
      auto t = field_type_from_string(value.get<std::string>());
      if (!t) throw UnsupportedSpec(where + ": type '" + value.get<std::string>() + "' is not supported");
      enc.type = *t;
      has_type = true;
    } else if (key == "aggregate") {
      enc.aggregate = parse_aggregate_op(value, where);
    } else if (key == "sort") {
      sort_value = value;
    } else if (key == "value" || key == "datum" || key == "condition") {
      throw UnsupportedSpec(where + ": constant/conditional channel definitions are not supported");
    } else {
      enc.extras[key] = value;
      warnings.push_back(where + "." + key + ": unsupported key preserved verbatim");
    }
  }
  if (sort_value) parse_sort(*sort_value, enc, where, warnings);
  const bool is_count = enc.aggregate == AggregateOp::count;
  if (!has_type) {
    if (!is_count) throw SchemaError(where + " is missing a type");
    enc.type = FieldType::quantitative;
  }
  if (enc.field.empty() && !is_count) throw SchemaError(where + " has no field");
  return enc;
}

std::vector<FilterTransform> parse_filter_expression(const std::string& expr) {
  static const std::regex term(
      R"(^\s*\(?\s*datum(?:\.([A-Za-z_][A-Za-z0-9_]*)|\[\s*['"]([^'"]+)['"]\s*\])\s*(===|==|!==|!=|<=|>=|<|>)\s*(.+?)\s*\)?\s*$)");
  static const std::regex number(R"(^[-+]?(\d+\.?\d*|\.\d+)([eE][-+]?\d+)?$)");
  std::vector<FilterTransform> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = expr.find("&&", start);
    const std::string part = expr.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    std::smatch m;
    if (!std::regex_match(part, m, term))
      throw UnsupportedSpec("filter expression '" + expr + "' is outside the supported subset");
    FilterTransform f;
    f.field = m[1].matched ? m[1].str() : m[2].str();
    const std::string op = m[3].str();
    if (op == "==" || op == "===") f.op = FilterOp::eq;
    else if (op == "!=" || op == "!==") f.op = FilterOp::ne;
    else if (op == "<") f.op = FilterOp::lt;
    else if (op == "<=") f.op = FilterOp::le;
    else if (op == ">") f.op = FilterOp::gt;
    else f.op = FilterOp::ge;
    const std::string lit = m[4].str();
    if (lit.size() >= 2 && (lit.front() == '\'' || lit.front() == '"') && lit.back() == lit.front()) {
      f.values.emplace_back(lit.substr(1, lit.size() - 2));
    } else if (lit == "true" || lit == "false") {
      f.values.emplace_back(lit == "true");
    } else if (std::regex_match(lit, number)) {
      f.values.emplace_back(std::stod(lit));
    } else {
      throw UnsupportedSpec("filter literal '" + lit + "' is outside the supported subset");
    }
    out.push_back(std::move(f));
    if (pos == std::string::npos) break;
    start = pos + 2;
  }
  return out;
}

std::vector<FilterTransform> parse_filter_predicate(const Json& pred) {
  if (pred.is_string()) return parse_filter_expression(pred.get<std::string>());
  if (!pred.is_object()) throw SchemaError("filter must be an object or expression string");
  if (auto it = pred.find("not"); it != pred.end()) {
    if (pred.size() != 1) throw UnsupportedSpec("compound 'not' filter is not supported");
    auto inner = parse_filter_predicate(*it);
    if (inner.size() != 1 || inner[0].op != FilterOp::eq)
      throw UnsupportedSpec("only 'not equal' negation is supported");
    inner[0].op = FilterOp::ne;
    return inner;
  }
  const auto field = pred.find("field");
  if (field == pred.end() || !field->is_string())
    throw UnsupportedSpec("filter predicate " + describe(pred) + " is outside the supported subset");
  std::vector<FilterTransform> out;
  for (const auto& [key, value] : pred.items()) {
    if (key == "field") continue;
    FilterTransform f;
    f.field = field->get<std::string>();
    if (key == "equal") f.op = FilterOp::eq;
    else if (key == "lt") f.op = FilterOp::lt;
    else if (key == "lte") f.op = FilterOp::le;
    else if (key == "gt") f.op = FilterOp::gt;
    else if (key == "gte") f.op = FilterOp::ge;
    else if (key == "oneOf") f.op = FilterOp::in;
    else if (key == "range") {
      if (!value.is_array() || value.size() != 2)
        throw SchemaError("filter range must be a two-element array");
      FilterTransform lo = f, hi = f;
      lo.op = FilterOp::ge;
      lo.values = {literal_from_json(value[0], "range")};
      hi.op = FilterOp::le;
      hi.values = {literal_from_json(value[1], "range")};
      out.push_back(std::move(lo));
      out.push_back(std::move(hi));
      continue;
    } else {
      throw UnsupportedSpec("filter predicate key '" + key + "' is not supported");
    }
    if (f.op == FilterOp::in) {
      if (!value.is_array()) throw SchemaError("oneOf must be an array");
      for (const auto& v : value) f.values.push_back(literal_from_json(v, "oneOf"));
    } else {
      f.values.push_back(literal_from_json(value, key));
    }
    out.push_back(std::move(f));
  }
  if (out.empty()) throw SchemaError("filter predicate on '" + field->get<std::string>() + "' has no test");
  return out;
}

void parse_transforms(const Json& list, ChartSpec& spec) {
  if (!list.is_array()) throw SchemaError("transform must be an array");
  for (const auto& t : list) {
    if (!t.is_object()) throw SchemaError("transform entries must be objects");
    if (auto f = t.find("filter"); f != t.end()) {
      for (auto& ft : parse_filter_predicate(*f)) spec.transforms.emplace_back(std::move(ft));
    } else if (auto a = t.find("aggregate"); a != t.end()) {
      if (!a->is_array()) throw SchemaError("aggregate transform needs a measure list");
      AggregateTransform agg;
      for (const auto& m : *a) {
        AggregateMeasure measure;
        measure.op = parse_aggregate_op(m.value("op", Json()), "transform.aggregate");
        if (auto fld = m.find("field"); fld != m.end() && fld->is_string()) measure.field = fld->get<std::string>();
        if (auto as = m.find("as"); as != m.end() && as->is_string()) measure.alias = as->get<std::string>();
        if (measure.field.empty() && measure.op != AggregateOp::count)
          throw SchemaError("aggregate measure '" + std::string(to_string(measure.op)) + "' has no field");
        agg.measures.push_back(std::move(measure));
      }
      if (auto g = t.find("groupby"); g != t.end()) {
        if (!g->is_array()) throw SchemaError("groupby must be an array");
        for (const auto& fld : *g) {
          if (!fld.is_string()) throw SchemaError("groupby entries must be strings");
          agg.groupby.push_back(fld.get<std::string>());
        }
      }
      spec.transforms.emplace_back(std::move(agg));
    } else if (auto s = t.find("sort"); s != t.end() && t.size() == 1) {
      SortTransform sort;
      const Json keys = s->is_array() ? *s : Json::array({*s});
      for (const auto& k : keys) {
        if (!k.is_object() || !k.contains("field") || !k["field"].is_string())
          throw SchemaError("sort transform keys need a field");
        SortKey key{k["field"].get<std::string>(), SortOrder::asc};
        if (auto o = k.find("order"); o != k.end()) {
          auto order = o->is_string() ? order_from_string(o->get<std::string>()) : std::nullopt;
          if (!order) throw SchemaError("sort order must be ascending or descending");
          key.order = *order;
        }
        sort.keys.push_back(std::move(key));
      }
      spec.transforms.emplace_back(std::move(sort));
    } else {
      const std::string kind = t.empty() ? "{}" : t.begin().key();
      throw UnsupportedSpec("transform '" + kind + "' is outside the supported subset");
    }
  }
}

Json canonicalize(const Json& v) {
  switch (v.type()) {
    case Json::value_t::object: {
      Json out = Json::object();
      for (const auto& [k, child] : v.items()) out[k] = canonicalize(child);
      return out;
    }
    case Json::value_t::array: {
      Json out = Json::array();
      for (const auto& child : v) out.push_back(canonicalize(child));
      return out;
    }
    case Json::value_t::number_float: {
      const double d = v.get<double>();
      if (std::isfinite(d) && std::trunc(d) == d && std::fabs(d) < 9.2e18)
        return Json(static_cast<std::int64_t>(d));
      return v;
    }
    default:
      return v;
  }
}

Json encoding_to_json(const FieldEncoding& enc) {
  Json out = enc.extras.is_object() ? enc.extras : Json::object();
  if (!enc.field.empty()) out["field"] = enc.field;
  out["type"] = std::string(to_string(enc.type));
  if (enc.aggregate) out["aggregate"] = std::string(to_string(*enc.aggregate));
  if (enc.sort) {
    if (enc.sort_by) {
      out["sort"] = (*enc.sort == SortOrder::desc ? "-" : "") + std::string(to_string(*enc.sort_by));
    } else if (*enc.sort == SortOrder::none) {
      out["sort"] = nullptr;
    } else {
      out["sort"] = std::string(order_to_string(*enc.sort));
    }
  }
  return out;
}

Json transform_to_json(const Transform& t) {
  return std::visit(
      [](const auto& tr) -> Json {
        using T = std::decay_t<decltype(tr)>;
        if constexpr (std::is_same_v<T, FilterTransform>) {
          Json pred = {{"field", tr.field}};
          const Json first = tr.values.empty() ? Json() : literal_to_json(tr.values.front());
          switch (tr.op) {
            case FilterOp::eq: pred["equal"] = first; break;
            case FilterOp::ne: pred["equal"] = first; pred = Json{{"not", pred}}; break;
            case FilterOp::lt: pred["lt"] = first; break;
            case FilterOp::le: pred["lte"] = first; break;
            case FilterOp::gt: pred["gt"] = first; break;
            case FilterOp::ge: pred["gte"] = first; break;
            case FilterOp::in: {
              Json values = Json::array();
              for (const auto& v : tr.values) values.push_back(literal_to_json(v));
              pred["oneOf"] = values;
              break;
            }
          }
          return Json{{"filter", pred}};
        } else if constexpr (std::is_same_v<T, AggregateTransform>) {
          Json measures = Json::array();
          for (const auto& m : tr.measures) {
            Json jm = {{"op", std::string(to_string(m.op))}, {"as", m.alias}};
            if (!m.field.empty()) jm["field"] = m.field;
            measures.push_back(jm);
          }
          Json out = {{"aggregate", measures}};
          if (!tr.groupby.empty()) out["groupby"] = tr.groupby;
          return out;
        } else {
          Json keys = Json::array();
          for (const auto& k : tr.keys)
            keys.push_back({{"field", k.field}, {"order", std::string(order_to_string(k.order))}});
          return Json{{"sort", keys}};
        }
      },
      t);
}

}  // namespace

std::string_view to_string(Mark m) noexcept { return lookup_name(kMarks, m); }
std::string_view to_string(Channel c) noexcept { return lookup_name(kChannels, c); }
std::string_view to_string(FieldType t) noexcept { return lookup_name(kTypes, t); }
std::string_view to_string(AggregateOp op) noexcept { return lookup_name(kAggregates, op); }

std::string_view to_string(FilterOp op) noexcept {
  switch (op) {
    case FilterOp::eq: return "=";
    case FilterOp::ne: return "!=";
    case FilterOp::lt: return "<";
    case FilterOp::le: return "<=";
    case FilterOp::gt: return ">";
    case FilterOp::ge: return ">=";
    case FilterOp::in: return "in";
  }
  return "?";
}

std::optional<Mark> mark_from_string(std::string_view s) noexcept { return lookup_value(kMarks, s); }
std::optional<Channel> channel_from_string(std::string_view s) noexcept { return lookup_value(kChannels, s); }
std::optional<FieldType> field_type_from_string(std::string_view s) noexcept { return lookup_value(kTypes, s); }
std::optional<AggregateOp> aggregate_from_string(std::string_view s) noexcept {
  return lookup_value(kAggregates, s);
}

const FieldEncoding* ChartSpec::encoding(Channel c) const {
  auto it = encodings.find(c);
  return it == encodings.end() ? nullptr : &it->second;
}

bool operator==(const ChartSpec& a, const ChartSpec& b) {
  return a.mark == b.mark && a.encodings == b.encodings && a.transforms == b.transforms &&
         a.title == b.title && a.width == b.width && a.height == b.height &&
         a.mark_extras == b.mark_extras && a.extras == b.extras;
}

ChartSpec spec_from_json(const Json& doc) {
  if (!doc.is_object()) throw SchemaError("a chart spec must be a JSON object");
  for (auto key : kCompositionKeys)
    if (doc.contains(key)) throw UnsupportedSpec("composition key '" + std::string(key) + "' is not supported");

  ChartSpec spec;
  const auto mark = doc.find("mark");
  if (mark == doc.end()) throw SchemaError("spec has no mark");
  std::string mark_name;
  if (mark->is_string()) {
    mark_name = mark->get<std::string>();
  } else if (mark->is_object() && mark->contains("type") && (*mark)["type"].is_string()) {
    mark_name = (*mark)["type"].get<std::string>();
    for (const auto& [k, v] : mark->items())
      if (k != "type") spec.mark_extras[k] = canonicalize(v);
  } else {
    throw SchemaError("mark must be a string or an object with a type");
  }
  auto m = mark_from_string(mark_name);
  if (!m) throw UnsupportedSpec("mark '" + mark_name + "' is outside the supported subset");
  spec.mark = *m;

  for (const auto& [key, value] : doc.items()) {
    if (key == "mark") continue;
    if (key == "encoding") {
      if (!value.is_object()) throw SchemaError("encoding must be an object");
      for (const auto& [ch_name, def] : value.items()) {
        auto ch = channel_from_string(ch_name);
        if (!ch) throw UnsupportedSpec("channel '" + ch_name + "' is outside the supported subset");
        spec.encodings.emplace(*ch, parse_encoding(canonicalize(def), *ch, spec.warnings));
      }
    } else if (key == "transform") {
      parse_transforms(value, spec);
    } else if (key == "title" && value.is_string()) {
      spec.title = value.get<std::string>();
    } else if ((key == "width" || key == "height") && value.is_number() &&
               std::trunc(value.get<double>()) == value.get<double>()) {
      (key == "width" ? spec.width : spec.height) = static_cast<int>(value.get<double>());
    } else {
      spec.extras[key] = canonicalize(value);
      spec.warnings.push_back(key + ": unsupported key preserved verbatim");
    }
  }
  validate_spec(spec);
  return spec;
}

ChartSpec parse_spec(std::string_view text) {
  Json doc;
  try {
    doc = Json::parse(text.begin(), text.end());
  } catch (const Json::exception& e) {
    throw SyntaxError(std::string("malformed spec document: ") + e.what());
  }
  return spec_from_json(doc);
}

void validate_spec(const ChartSpec& spec) {
  if (!spec.has(Channel::x) && !spec.has(Channel::y) && !spec.has(Channel::theta))
    throw SchemaError("spec needs at least one of the x, y or theta channels");
  for (const auto& [ch, enc] : spec.encodings) {
    const std::string where = "encoding." + std::string(to_string(ch));
    if (is_facet(ch)) {
      if (enc.type != FieldType::nominal && enc.type != FieldType::ordinal)
        throw SchemaError(where + " must reference a categorical (nominal/ordinal) field");
      if (enc.aggregate) throw SchemaError(where + " cannot be aggregated");
    }
    if (enc.aggregate && *enc.aggregate != AggregateOp::count && enc.type != FieldType::quantitative)
      throw SchemaError(where + ": aggregate requires a quantitative type");
    if (enc.field.empty() && enc.aggregate != AggregateOp::count) throw SchemaError(where + " has no field");
    if (enc.sort_by && !spec.has(*enc.sort_by))
      throw SchemaError(where + " sorts by absent channel " + std::string(to_string(*enc.sort_by)));
  }
  for (const auto& t : spec.transforms) {
    if (const auto* agg = std::get_if<AggregateTransform>(&t)) {
      std::set<std::string> aliases;
      for (const auto& m : agg->measures) {
        if (m.alias.empty()) throw SchemaError("aggregate measure aliases must be non-empty");
        if (!aliases.insert(m.alias).second) throw SchemaError("duplicate aggregate alias '" + m.alias + "'");
      }
    } else if (const auto* f = std::get_if<FilterTransform>(&t)) {
      if (f->values.empty()) throw SchemaError("filter on '" + f->field + "' has no literal");
      if (f->op != FilterOp::in && f->values.size() != 1)
        throw SchemaError("filter on '" + f->field + "' takes exactly one literal");
    }
  }
}

Json spec_to_json(const ChartSpec& spec) {
  Json out = spec.extras.is_object() ? spec.extras : Json::object();
  if (spec.mark_extras.empty()) {
    out["mark"] = std::string(to_string(spec.mark));
  } else {
    Json mark = spec.mark_extras;
    mark["type"] = std::string(to_string(spec.mark));
    out["mark"] = mark;
  }
  Json enc = Json::object();
  for (const auto& [ch, def] : spec.encodings) enc[std::string(to_string(ch))] = encoding_to_json(def);
  out["encoding"] = enc;
  if (!spec.transforms.empty()) {
    Json list = Json::array();
    for (const auto& t : spec.transforms) list.push_back(transform_to_json(t));
    out["transform"] = list;
  }
  if (spec.title) out["title"] = *spec.title;
  if (spec.width) out["width"] = *spec.width;
  if (spec.height) out["height"] = *spec.height;
  return out;
}

std::string canonical_json(const Json& value) {
  return canonicalize(value).dump(-1, ' ', false, Json::error_handler_t::replace);
}

std::string normalize_spec(const ChartSpec& spec) { return canonical_json(spec_to_json(spec)); }

std::string canonicalize_json_text(std::string_view text) {
  try {
    return canonical_json(Json::parse(text.begin(), text.end()));
  } catch (const Json::exception& e) {
    throw SyntaxError(std::string("malformed document: ") + e.what());
  }
}

ChartSpec strip_transforms(const ChartSpec& spec) {
  ChartSpec out = spec;
  out.transforms.clear();
  return out;
}

std::vector<SpecDifference> diff_specs(const ChartSpec& a, const ChartSpec& b) {
  std::vector<SpecDifference> out;
  auto mark_json = [](const ChartSpec& s) {
    Json m = s.mark_extras;
    m["type"] = std::string(to_string(s.mark));
    return m;
  };
  if (a.mark != b.mark || a.mark_extras != b.mark_extras) out.push_back({"mark", mark_json(a), mark_json(b)});
  for (Channel ch : kAllChannels) {
    const auto* ea = a.encoding(ch);
    const auto* eb = b.encoding(ch);
    if (!ea && !eb) continue;
    if (ea && eb && *ea == *eb) continue;
    out.push_back({"encoding." + std::string(to_string(ch)), ea ? encoding_to_json(*ea) : Json(),
                   eb ? encoding_to_json(*eb) : Json()});
  }
  const std::size_t n = std::max(a.transforms.size(), b.transforms.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Transform* ta = i < a.transforms.size() ? &a.transforms[i] : nullptr;
    const Transform* tb = i < b.transforms.size() ? &b.transforms[i] : nullptr;
    if (ta && tb && *ta == *tb) continue;
    out.push_back({"transform[" + std::to_string(i) + "]", ta ? transform_to_json(*ta) : Json(),
                   tb ? transform_to_json(*tb) : Json()});
  }
  auto opt = [](const auto& o) { return o ? Json(*o) : Json(); };
  if (a.title != b.title) out.push_back({"title", opt(a.title), opt(b.title)});
  if (a.width != b.width) out.push_back({"width", opt(a.width), opt(b.width)});
  if (a.height != b.height) out.push_back({"height", opt(a.height), opt(b.height)});
  std::set<std::string> keys;
  for (const auto& [k, v] : a.extras.items()) keys.insert(k);
  for (const auto& [k, v] : b.extras.items()) keys.insert(k);
  for (const auto& k : keys) {
    const Json va = a.extras.contains(k) ? a.extras[k] : Json();
    const Json vb = b.extras.contains(k) ? b.extras[k] : Json();
    if (va != vb) out.push_back({k, va, vb});
  }
  return out;
}

std::vector<std::string> referenced_fields(const ChartSpec& spec) {
  std::vector<std::string> out;
  std::set<std::string> produced;
  auto note = [&](const std::string& f) {
    if (f.empty() || produced.count(f)) return;
    if (std::find(out.begin(), out.end(), f) == out.end()) out.push_back(f);
  };
  for (const auto& t : spec.transforms) {
    if (const auto* f = std::get_if<FilterTransform>(&t)) note(f->field);
    if (const auto* s = std::get_if<SortTransform>(&t))
      for (const auto& k : s->keys) note(k.field);
    if (const auto* agg = std::get_if<AggregateTransform>(&t)) {
      for (const auto& m : agg->measures) note(m.field);
      for (const auto& g : agg->groupby) note(g);
      for (const auto& m : agg->measures) produced.insert(m.alias);
    }
  }
  for (const auto& [ch, enc] : spec.encodings) note(enc.field);
  return out;
}

}  // namespace chartcycle
