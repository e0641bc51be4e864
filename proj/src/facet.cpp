#include "chartcycle/facet.hpp"

#include "chartcycle/error.hpp"

#include <algorithm>
#include <set>

namespace chartcycle {

namespace {

std::size_t distinct_strings(const Table& t, std::size_t col) {
  std::set<std::string> seen;
  for (const auto& row : t.rows())
    if (const auto* s = std::get_if<std::string>(&row[col])) seen.insert(*s);
  return seen.size();
}

}  // namespace

std::vector<FacetCandidate> find_candidates(const ChartSpec& spec, const Table& raw, const FacetConfig& cfg) {
  std::vector<FacetCandidate> out;
  if (spec.faceted()) return out;
  Table transformed;
  try {
    transformed = apply_transform_block(spec, raw);
  } catch (const Error&) {
    return out;
  }
  std::set<std::string> encoded;
  for (const auto& [ch, enc] : spec.encodings)
    if (!enc.field.empty()) encoded.insert(enc.field);

  Channel axis = Channel::column;
  if (spec.mark == Mark::bar) {
    const FieldEncoding* x = spec.encoding(Channel::x);
    if (x && x->type == FieldType::nominal && !x->aggregate) {
      if (auto col = transformed.find(x->field); col && distinct_strings(transformed, *col) > cfg.row_axis_x_cardinality)
        axis = Channel::row;
    }
  }

  for (std::size_t i = 0; i < raw.num_columns(); ++i) {
    const Column& c = raw.columns()[i];
    if (c.type != ColumnType::string || encoded.count(c.name)) continue;
    if (!transformed.find(c.name)) continue;
    const std::size_t k = distinct_strings(raw, i);
    if (k < 2 || k > cfg.max_cardinality) continue;
    out.push_back({c.name, k, axis});
  }
  std::sort(out.begin(), out.end(), [](const FacetCandidate& a, const FacetCandidate& b) {
    return a.cardinality != b.cardinality ? a.cardinality < b.cardinality : a.field < b.field;
  });
  return out;
}

ChartSpec inject_facet(const ChartSpec& spec, const FacetCandidate& c) {
  if (!is_facet(c.axis)) throw SchemaError("facet axis must be row or column");
  if (spec.has(c.axis)) throw ChannelCollision(std::string(to_string(c.axis)) + " channel already encoded");
  ChartSpec out = spec;
  FieldEncoding enc;
  enc.field = c.field;
  enc.type = FieldType::nominal;
  out.encodings[c.axis] = enc;
  validate_spec(out);
  return out;
}

std::string facet_query(const std::string& query, const FacetCandidate& c) {
  std::string q = query;
  while (!q.empty() && (q.back() == ' ' || q.back() == '\n')) q.pop_back();
  if (!q.empty() && q.back() != '.' && q.back() != '?' && q.back() != '!') q += '.';
  if (!q.empty()) q += ' ';
  q += "Show one ";
  q += c.axis == Channel::row ? "row" : "column";
  q += " of panels per " + c.field + ".";
  return q;
}

AugmentCheck check_facet_partitions(const ChartSpec& spec, const Table& raw) {
  AugmentCheck check;
  Table vis;
  try {
    vis = execute_transforms(spec, raw);
  } catch (const Error& e) {
    check.reasons.push_back(std::string("execution error: ") + e.what());
    return check;
  }
  for (Channel ch : {Channel::row, Channel::column}) {
    const FieldEncoding* enc = spec.encoding(ch);
    if (!enc) continue;
    const std::size_t raw_col = raw.index_of(enc->field);
    const std::size_t vis_col = vis.index_of(to_string(ch));
    std::set<std::string> shown;
    for (const auto& row : vis.rows())
      if (const auto* s = std::get_if<std::string>(&row[vis_col])) shown.insert(*s);
    std::set<std::string> expected;
    for (const auto& row : raw.rows())
      if (const auto* s = std::get_if<std::string>(&row[raw_col])) expected.insert(*s);
    for (const auto& v : expected)
      if (!shown.count(v)) check.reasons.push_back("empty facet: " + enc->field + "=" + v);
  }
  check.pass = check.reasons.empty();
  return check;
}

AugmentCheck validate_augmented(const ChartSpec& spec, const Table& raw, RenderBridge* bridge) {
  if (!bridge) throw RendererUnavailable("facet validation needs a renderer");
  AugmentCheck check = check_facet_partitions(spec, raw);
  const RenderResult r = bridge->render(normalize_spec(spec), raw);
  if (!r.ok()) {
    check.reasons.push_back("render error: " + std::string(to_string(r.status)) +
                            (r.reason.empty() ? "" : " " + r.reason));
  }
  check.pass = check.reasons.empty();
  return check;
}

}  // namespace chartcycle
