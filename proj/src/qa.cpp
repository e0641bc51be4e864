#include "chartcycle/qa.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/text.hpp"
#include "chartcycle/util.hpp"

#include <algorithm>
#include <map>

namespace chartcycle {

using OJson = nlohmann::ordered_json;

std::string_view to_string(QAKind k) noexcept {
  switch (k) {
    case QAKind::extremum: return "extremum";
    case QAKind::comparison: return "comparison";
    case QAKind::aggregation: return "aggregation";
    case QAKind::facet_compare: return "facet_compare";
    case QAKind::facet_count: return "facet_count";
  }
  return "?";
}

std::string_view to_string(AnswerType t) noexcept {
  switch (t) {
    case AnswerType::number: return "number";
    case AnswerType::category: return "category";
    case AnswerType::boolean: return "boolean";
  }
  return "?";
}

std::optional<QAKind> qa_kind_from_string(std::string_view s) noexcept {
  for (QAKind k : {QAKind::extremum, QAKind::comparison, QAKind::aggregation, QAKind::facet_compare,
                   QAKind::facet_count})
    if (to_string(k) == s) return k;
  return std::nullopt;
}

std::optional<AnswerType> answer_type_from_string(std::string_view s) noexcept {
  for (AnswerType t : {AnswerType::number, AnswerType::category, AnswerType::boolean})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

OJson qa_to_json(const QAPair& q) {
  OJson j;
  j["question"] = q.question;
  j["answer"] = q.answer;
  j["kind"] = to_string(q.kind);
  j["answer_type"] = to_string(q.answer_type);
  j["params"] = q.params;
  if (q.value) j["value"] = *q.value;
  if (q.original_question) j["original_question"] = *q.original_question;
  return j;
}

QAPair qa_from_json(const OJson& j) {
  try {
    QAPair q;
    q.question = j.at("question").get<std::string>();
    q.answer = j.at("answer").get<std::string>();
    const auto kind = qa_kind_from_string(j.at("kind").get<std::string>());
    const auto type = answer_type_from_string(j.at("answer_type").get<std::string>());
    if (!kind || !type) throw SchemaError("unknown QA kind or answer type");
    q.kind = *kind;
    q.answer_type = *type;
    q.params = j.value("params", OJson::object());
    if (j.contains("value")) q.value = j.at("value").get<double>();
    if (j.contains("original_question")) q.original_question = j.at("original_question").get<std::string>();
    return q;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("QA record: ") + e.what());
  }
}

namespace {

struct Entry {
  std::string category;  // empty when the template has no category
  double measure = 0.0;
  std::string panel;
};

// Rows with a numeric measure, in table order.
struct Bound {
  std::vector<Entry> entries;
  bool integral = false;
  bool percent = false;
};

std::size_t column_or_mismatch(const Table& vis, const std::string& name) {
  if (auto i = vis.find(name)) return *i;
  throw TemplateMismatch("table has no column '" + name + "'");
}

Bound bind_rows(const OJson& params, const Table& vis) {
  Bound b;
  const std::string measure = params.value("measure", "");
  const std::string category = params.value("category", "");
  const std::string facet = params.value("facet", "");
  const std::size_t mi = column_or_mismatch(vis, measure);
  if (vis.columns()[mi].type != ColumnType::number) throw TemplateMismatch("measure is not numeric");
  b.integral = vis.columns()[mi].integral;
  b.percent = measure == "percentage";
  std::optional<std::size_t> ci, fi;
  if (!category.empty()) ci = column_or_mismatch(vis, category);
  if (!facet.empty()) fi = column_or_mismatch(vis, facet);
  for (const auto& row : vis.rows()) {
    const auto* v = std::get_if<double>(&row[mi]);
    if (!v) continue;
    Entry e;
    e.measure = *v;
    if (ci) {
      const auto* s = std::get_if<std::string>(&row[*ci]);
      if (!s) continue;
      e.category = *s;
    }
    if (fi) {
      const auto* s = std::get_if<std::string>(&row[*fi]);
      if (!s) continue;
      e.panel = *s;
    }
    b.entries.push_back(std::move(e));
  }
  return b;
}

std::string number_text(double v, bool integral, bool percent) {
  std::string s = text::format_number(v, integral && std::floor(v) == v);
  if (percent) s += '%';
  return s;
}

// Panels in first-appearance order with their totals and maxima.
struct Panel {
  std::string name;
  double total = 0.0;
  double max = 0.0;
};

std::vector<Panel> panels_of(const Bound& b) {
  std::vector<Panel> out;
  std::map<std::string, std::size_t> index;
  for (const auto& e : b.entries) {
    auto [it, fresh] = index.emplace(e.panel, out.size());
    if (fresh) out.push_back({e.panel, 0.0, e.measure});
    Panel& p = out[it->second];
    p.total += e.measure;
    p.max = std::max(p.max, e.measure);
  }
  return out;
}

struct Computed {
  std::string answer;
  AnswerType type = AnswerType::number;
  std::optional<double> value;
  bool tie = false;
};

std::size_t arg_extreme(const std::vector<double>& values, bool max, bool* tie) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (max ? values[i] > values[best] : values[i] < values[best]) best = i;
  *tie = std::count(values.begin(), values.end(), values[best]) > 1;
  return best;
}

const Entry& entry_for(const Bound& b, const std::string& category) {
  for (const auto& e : b.entries)
    if (e.category == category) return e;
  throw TemplateMismatch("no row for category '" + category + "'");
}

Computed compute(const OJson& params, const Table& vis) {
  const std::string tmpl = params.value("template", "");
  const Bound b = bind_rows(params, vis);
  if (b.entries.empty()) throw TemplateMismatch("template binds no rows");
  Computed out;
  std::vector<double> measures;
  for (const auto& e : b.entries) measures.push_back(e.measure);

  if (tmpl == "extremum_category" || tmpl == "extremum_value") {
    const bool max = params.value("direction", "") == "max";
    const std::size_t i = arg_extreme(measures, max, &out.tie);
    if (tmpl == "extremum_category") {
      out.answer = b.entries[i].category;
      out.type = AnswerType::category;
    } else {
      out.answer = number_text(measures[i], b.integral, b.percent);
      out.value = measures[i];
    }
    return out;
  }
  if (tmpl == "comparison") {
    const double a = entry_for(b, params.value("a", "")).measure;
    const double c = entry_for(b, params.value("b", "")).measure;
    out.answer = a > c ? "yes" : "no";
    out.type = AnswerType::boolean;
    return out;
  }
  if (tmpl == "sum" || tmpl == "mean") {
    long double total = 0;
    for (double v : measures) total += v;
    const double value = tmpl == "sum" ? static_cast<double>(total)
                                       : static_cast<double>(total / static_cast<long double>(measures.size()));
    out.answer = number_text(value, tmpl == "sum" && b.integral, b.percent);
    out.value = value;
    return out;
  }
  if (tmpl == "share") {
    const double v = entry_for(b, params.value("a", "")).measure;
    out.answer = number_text(v, false, b.percent);
    out.value = v;
    return out;
  }
  if (tmpl == "facet_extremum" || tmpl == "facet_compare" || tmpl == "facet_count") {
    const auto panels = panels_of(b);
    auto find_panel = [&](const std::string& name) -> const Panel& {
      for (const auto& p : panels)
        if (p.name == name) return p;
      throw TemplateMismatch("no panel '" + name + "'");
    };
    if (tmpl == "facet_extremum") {
      std::vector<double> totals;
      for (const auto& p : panels) totals.push_back(p.total);
      out.answer = panels[arg_extreme(totals, true, &out.tie)].name;
      out.type = AnswerType::category;
    } else if (tmpl == "facet_compare") {
      out.answer = find_panel(params.value("a", "")).total > find_panel(params.value("b", "")).total ? "yes" : "no";
      out.type = AnswerType::boolean;
    } else {
      const double c = params.value("threshold", 0.0);
      const auto n = std::count_if(panels.begin(), panels.end(), [&](const Panel& p) { return p.max > c; });
      out.answer = std::to_string(n);
      out.value = static_cast<double>(n);
    }
    return out;
  }
  throw TemplateMismatch("unknown template '" + tmpl + "'");
}

std::string label_of(const ChartSpec& spec, Channel ch) {
  const FieldEncoding* enc = spec.encoding(ch);
  if (!enc) return std::string(to_string(ch));
  if (enc->aggregate == AggregateOp::count && enc->field.empty()) return "count of records";
  if (enc->aggregate) return std::string(to_string(*enc->aggregate)) + " of " + enc->field;
  return enc->field;
}

std::optional<Channel> first_typed(const ChartSpec& spec, const Table& vis, std::initializer_list<Channel> order,
                                   ColumnType type, std::optional<Channel> except = std::nullopt) {
  for (Channel ch : order) {
    if (ch == except || !spec.has(ch)) continue;
    auto col = vis.find(to_string(ch));
    if (col && vis.columns()[*col].type == type) return ch;
  }
  return std::nullopt;
}

struct Candidate {
  QAKind kind;
  OJson params;
  // Builds the question; `tie` selects the tie phrasing.
  std::function<std::string(const Computed&)> question;
};

bool unique_categories(const Bound& b) {
  std::set<std::string> seen;
  for (const auto& e : b.entries)
    if (!seen.insert(e.category).second) return false;
  return true;
}

std::vector<Candidate> enumerate(const ChartSpec& spec, const Table& vis) {
  std::vector<Candidate> out;
  const auto measure = first_typed(spec, vis, {Channel::y, Channel::theta, Channel::x, Channel::size}, ColumnType::number);
  if (!measure) return out;
  const auto category = first_typed(spec, vis, {Channel::x, Channel::color, Channel::y}, ColumnType::string, measure);
  std::optional<Channel> facet;
  for (Channel ch : {Channel::column, Channel::row})
    if (spec.has(ch) && vis.find(to_string(ch))) {
      facet = ch;
      break;
    }
  const std::string m = std::string(to_string(*measure));
  const std::string m_label = label_of(spec, *measure);

  OJson base;
  base["measure"] = m;

  // Single-view templates.
  {
    OJson p = base;
    const Bound b = bind_rows(p, vis);
    if (b.entries.size() >= 2) {
      for (const char* dir : {"max", "min"}) {
        OJson q = base;
        q["template"] = "extremum_value";
        q["direction"] = dir;
        const std::string word = std::string(dir) == "max" ? "highest" : "lowest";
        out.push_back({QAKind::extremum, q, [=](const Computed&) { return "What is the " + word + " " + m_label + "?"; }});
      }
      for (const char* agg : {"sum", "mean"}) {
        OJson q = base;
        q["template"] = agg;
        const std::string word = std::string(agg) == "sum" ? "total" : "average";
        out.push_back({QAKind::aggregation, q, [=](const Computed&) {
                         return "What is the " + word + " " + m_label + " across all marks in the chart?";
                       }});
      }
    }
  }
  if (category) {
    OJson p = base;
    p["category"] = std::string(to_string(*category));
    const Bound b = bind_rows(p, vis);
    const std::string c_label = label_of(spec, *category);
    if (b.entries.size() >= 2 && unique_categories(b)) {
      for (const char* dir : {"max", "min"}) {
        OJson q = p;
        q["template"] = "extremum_category";
        q["direction"] = dir;
        const std::string word = std::string(dir) == "max" ? "highest" : "lowest";
        out.push_back({QAKind::extremum, q, [=](const Computed& c) {
                         return c.tie ? "Which " + c_label + " is one of those with the " + word + " " + m_label + "?"
                                      : "Which " + c_label + " has the " + word + " " + m_label + "?";
                       }});
      }
      for (std::size_t i = 0; i < b.entries.size(); ++i)
        for (std::size_t j = i + 1; j < b.entries.size(); ++j) {
          OJson q = p;
          q["template"] = "comparison";
          q["a"] = b.entries[i].category;
          q["b"] = b.entries[j].category;
          const std::string a = b.entries[i].category, o = b.entries[j].category;
          out.push_back({QAKind::comparison, q, [=](const Computed&) {
                           return "Is the " + m_label + " of " + a + " greater than that of " + o + "?";
                         }});
        }
      if (spec.mark == Mark::arc && !facet && vis.find("percentage")) {
        for (const auto& e : b.entries) {
          OJson q = p;
          q["measure"] = "percentage";
          q["template"] = "share";
          q["a"] = e.category;
          const std::string a = e.category;
          out.push_back({QAKind::aggregation, q, [=](const Computed&) {
                           return "What percentage of the total " + m_label + " does " + a + " account for?";
                         }});
        }
      }
    }
  }
  // Cross-facet templates.
  if (facet) {
    OJson p = base;
    p["facet"] = std::string(to_string(*facet));
    const Bound b = bind_rows(p, vis);
    const auto panels = panels_of(b);
    const std::string f_label = label_of(spec, *facet);
    if (panels.size() >= 2) {
      OJson q = p;
      q["template"] = "facet_extremum";
      out.push_back({QAKind::facet_compare, q, [=](const Computed& c) {
                       return c.tie ? "Which " + f_label + " panel is one of those with the highest total " + m_label + "?"
                                    : "Which " + f_label + " panel has the highest total " + m_label + "?";
                     }});
      for (std::size_t i = 0; i < panels.size(); ++i)
        for (std::size_t j = i + 1; j < panels.size(); ++j) {
          OJson r = p;
          r["template"] = "facet_compare";
          r["a"] = panels[i].name;
          r["b"] = panels[j].name;
          const std::string a = panels[i].name, o = panels[j].name;
          out.push_back({QAKind::facet_compare, r, [=](const Computed&) {
                           return "Is the total " + m_label + " in the " + a + " panel greater than in the " + o +
                                  " panel?";
                         }});
        }
      std::set<double> maxima;
      for (const auto& panel : panels) maxima.insert(panel.max);
      for (double c : maxima) {
        OJson r = p;
        r["template"] = "facet_count";
        r["threshold"] = c;
        const std::string c_text = number_text(c, b.integral, b.percent);
        out.push_back({QAKind::facet_count, r, [=](const Computed&) {
                         return "How many " + f_label + " panels have a maximum " + m_label + " greater than " + c_text +
                                "?";
                       }});
      }
    }
  }
  return out;
}

}  // namespace

std::vector<QAPair> generate_qa(const ChartSpec& spec, const Table& vis, std::uint64_t seed, const QAOptions& options) {
  if (vis.empty()) throw NoApplicableTemplate("empty visualization table");
  std::vector<Candidate> candidates;
  for (auto& c : enumerate(spec, vis)) {
    if (!options.kinds.empty() && !options.kinds.count(c.kind)) continue;
    candidates.push_back(std::move(c));
  }
  if (candidates.empty()) throw NoApplicableTemplate("no template applies to this chart");
  Rng rng(seed);
  rng.shuffle(candidates);
  if (candidates.size() > options.n) candidates.resize(options.n);
  std::vector<QAPair> out;
  for (const auto& c : candidates) {
    const Computed r = compute(c.params, vis);
    QAPair q;
    q.kind = c.kind;
    q.params = c.params;
    q.question = c.question(r);
    q.answer = r.answer;
    q.answer_type = r.type;
    q.value = r.value;
    out.push_back(std::move(q));
  }
  return out;
}

std::string answer_oracle(const QAPair& q, const Table& vis) { return compute(q.params, vis).answer; }

void verify_qa(const QAPair& q, const Table& vis) {
  const std::string expected = answer_oracle(q, vis);
  if (expected != q.answer)
    throw TemplateMismatch("stored answer '" + q.answer + "' differs from recomputed '" + expected + "'");
}

QAPair paraphrase_hook(const QAPair& q, const QuestionRewriter& rewriter, std::vector<std::string>* warnings) {
  if (!rewriter) return q;
  try {
    std::string rewritten{text::trim(rewriter(q.question))};
    if (rewritten.empty()) throw EmptyResponse("empty paraphrase");
    QAPair out = q;
    out.original_question = q.original_question.value_or(q.question);
    out.question = std::move(rewritten);
    return out;
  } catch (const std::exception& e) {
    if (warnings) warnings->push_back(std::string("paraphrase failed, kept template question: ") + e.what());
    return q;
  }
}

}  // namespace chartcycle
