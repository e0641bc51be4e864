#include "chartcycle/error.hpp"
#include "chartcycle/harness.hpp"
#include "chartcycle/text.hpp"

#include <cctype>
#include <set>

namespace chartcycle {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string literal(const Literal& v) {
  if (const auto* d = std::get_if<double>(&v)) return text::format_number(*d, *d == static_cast<double>(static_cast<long long>(*d)));
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "TRUE" : "FALSE";
  return "'" + std::get<std::string>(v) + "'";
}

std::string condition(const FilterTransform& f) {
  static const std::map<FilterOp, const char*> ops = {{FilterOp::eq, "="}, {FilterOp::ne, "!="}, {FilterOp::lt, "<"},
                                                      {FilterOp::le, "<="}, {FilterOp::gt, ">"}, {FilterOp::ge, ">="}};
  if (f.op == FilterOp::in) {
    std::string list;
    for (const auto& v : f.values) list += (list.empty() ? "" : " , ") + literal(v);
    return f.field + " IN ( " + list + " )";
  }
  return f.field + " " + ops.at(f.op) + " " + literal(f.values.at(0));
}

std::string query_key(const nlohmann::ordered_json& table_info, const std::string& query) {
  return sha256_hex(query + "\n" + table_info.dump());
}

}  // namespace

std::string spec_to_vql(const ChartSpec& spec, const std::string& table_name) {
  // Transform-block measures appear under their source expression.
  std::map<std::string, std::string> measures;
  std::vector<std::string> where, group, order;
  for (const auto& t : spec.transforms) {
    if (const auto* f = std::get_if<FilterTransform>(&t)) where.push_back(condition(*f));
    if (const auto* a = std::get_if<AggregateTransform>(&t)) {
      for (const auto& m : a->measures)
        measures[m.alias] = upper(to_string(m.op)) + "(" + (m.field.empty() ? "*" : m.field) + ")";
      for (const auto& g : a->groupby) group.push_back(g);
    }
    if (const auto* s = std::get_if<SortTransform>(&t))
      for (const auto& k : s->keys) order.push_back(k.field + (k.order == SortOrder::desc ? " DESC" : " ASC"));
  }
  std::vector<std::string> fields;
  bool encoding_aggregate = false;
  for (Channel c : {Channel::x, Channel::y, Channel::theta, Channel::color, Channel::size, Channel::column, Channel::row}) {
    const FieldEncoding* e = spec.encoding(c);
    if (!e) continue;
    std::string expr;
    if (e->aggregate) {
      encoding_aggregate = true;
      expr = upper(to_string(*e->aggregate)) + "(" + (e->field.empty() ? "*" : e->field) + ")";
    } else if (auto it = measures.find(e->field); it != measures.end()) {
      expr = it->second;
    } else {
      expr = e->field;
      if (encoding_aggregate || group.empty()) group.push_back(e->field);
    }
    fields.push_back(expr);
    if (e->sort && *e->sort != SortOrder::none && !e->sort_by)
      order.push_back(expr + (*e->sort == SortOrder::desc ? " DESC" : " ASC"));
  }
  bool aggregated = encoding_aggregate || !measures.empty();
  std::string out = "Visualize " + upper(to_string(spec.mark)) + " SELECT ";
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? " , " : "") + fields[i];
  out += " FROM " + table_name;
  for (std::size_t i = 0; i < where.size(); ++i) out += (i ? " AND " : " WHERE ") + where[i];
  if (aggregated && !group.empty()) {
    std::set<std::string> seen;
    std::string by;
    for (const auto& g : group)
      if (seen.insert(g).second) by += (by.empty() ? "" : " , ") + g;
    out += " GROUP BY " + by;
  }
  if (!order.empty()) out += " ORDER BY " + order.front();
  return out;
}

OracleChartModel::OracleChartModel(const std::vector<LifecycleSample>& samples) {
  for (const auto& s : samples) {
    Gold g;
    g.spec = normalize_spec(s.spec);
    g.stripped = normalize_spec(s.stripped_spec);
    g.vis_csv = serialize_csv(s.vis_table);
    g.vql = spec_to_vql(s.spec);
    for (const auto& q : s.qa) g.answers.emplace(q.question, q.answer);
    const std::size_t index = gold_.size();
    gold_.push_back(std::move(g));
    images_.emplace(content_key(s.spec, s.raw_table), index);
    queries_.emplace(query_key(table_info(s.raw_table), s.nl_query), index);
  }
}

const OracleChartModel::Gold& OracleChartModel::by_image(const ChartImage& image) const {
  const auto it = images_.find(image.content_key);
  if (it == images_.end()) throw EmptyResponse("oracle does not know this chart");
  return gold_[it->second];
}

const OracleChartModel::Gold& OracleChartModel::by_query(const nlohmann::ordered_json& table_info,
                                                         const std::string& query) const {
  const auto it = queries_.find(query_key(table_info, query));
  if (it == queries_.end()) throw EmptyResponse("oracle does not know this query");
  return gold_[it->second];
}

namespace {
ModelReply echo(std::string text) { return {text, text, {}}; }
}  // namespace

ModelReply OracleChartModel::nl2chart(const nlohmann::ordered_json& table_info, const std::string& query) {
  return echo(by_query(table_info, query).spec);
}

ModelReply OracleChartModel::parse_schema(const ChartImage& image, const nlohmann::ordered_json&) {
  return echo(by_image(image).stripped);
}

ModelReply OracleChartModel::parse_data(const ChartImage& image, const std::string&) {
  return echo(by_image(image).vis_csv);
}

ModelReply OracleChartModel::answer_qa(const ChartImage& image, const std::string& question) {
  const auto& answers = by_image(image).answers;
  const auto it = answers.find(question);
  return echo(it == answers.end() ? "unanswerable" : it->second);
}

ModelReply OracleChartModel::nl2vql(const nlohmann::ordered_json& table_info, const std::string& query) {
  return echo(by_query(table_info, query).vql);
}

}  // namespace chartcycle
