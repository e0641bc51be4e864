#include "chartcycle/error.hpp"
#include "chartcycle/metrics.hpp"
#include "chartcycle/qa.hpp"
#include "support/random_cases.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace chartcycle;

namespace {

const char* kXY = R"({"mark":"bar","encoding":{"x":{"field":"x","type":"nominal"},
    "y":{"field":"y","type":"quantitative"}}})";

const QAPair* find_template(const std::vector<QAPair>& qs, const std::string& tmpl, const std::string& dir = "") {
  for (const auto& q : qs)
    if (q.params.value("template", "") == tmpl && (dir.empty() || q.params.value("direction", "") == dir)) return &q;
  return nullptr;
}

std::vector<QAPair> all_pairs(const ChartSpec& spec, const Table& vis, std::set<QAKind> kinds = {}) {
  QAOptions o;
  o.n = 100000;
  o.kinds = std::move(kinds);
  return generate_qa(spec, vis, 1, o);
}

}  // namespace

TEST(GenerateQa, ExtremumExample) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3\nv,6"));
  const auto qs = all_pairs(spec, vis, {QAKind::extremum});
  const QAPair* q = find_template(qs, "extremum_category", "max");
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(q->question, "Which x has the highest y?");
  EXPECT_EQ(q->answer, "v");
  EXPECT_EQ(q->answer_type, AnswerType::category);
  const QAPair* low = find_template(qs, "extremum_value", "min");
  ASSERT_NE(low, nullptr);
  EXPECT_EQ(low->question, "What is the lowest y?");
  EXPECT_EQ(low->answer, "3");
}

TEST(GenerateQa, SingleCategoryComparisonNotApplicable) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3"));
  QAOptions o;
  o.kinds = {QAKind::comparison};
  EXPECT_THROW(generate_qa(spec, vis, 1, o), NoApplicableTemplate);
}

TEST(GenerateQa, FacetCountMatchesBruteForce) {
  const ChartSpec spec = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"x","type":"nominal"},
      "y":{"field":"y","type":"quantitative"},"column":{"field":"g","type":"nominal"}}})");
  const Table raw = parse_csv("x,y,g\na,1,p\nb,8,p\na,5,q\nb,2,q\na,9,r\nb,3,r");
  const Table vis = execute_transforms(spec, raw);
  const auto qs = all_pairs(spec, vis, {QAKind::facet_count});
  // Panel maxima: p 8, q 5, r 9.
  const std::map<double, std::string> expected = {{5.0, "2"}, {8.0, "1"}, {9.0, "0"}};
  ASSERT_EQ(qs.size(), expected.size());
  for (const auto& q : qs) {
    const double c = q.params.at("threshold").get<double>();
    EXPECT_EQ(q.answer, expected.at(c)) << q.question;
    EXPECT_EQ(q.answer_type, AnswerType::number);
  }
  const auto q5 = std::find_if(qs.begin(), qs.end(), [](const QAPair& q) { return q.answer == "2"; });
  EXPECT_EQ(q5->question, "How many g panels have a maximum y greater than 5?");
}

TEST(GenerateQa, FacetCompare) {
  const ChartSpec spec = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"x","type":"nominal"},
      "y":{"field":"y","type":"quantitative"},"row":{"field":"g","type":"nominal"}}})");
  const Table vis = execute_transforms(spec, parse_csv("x,y,g\na,1,p\nb,8,p\na,5,q\nb,2,q"));
  const auto qs = all_pairs(spec, vis, {QAKind::facet_compare});
  const QAPair* top = find_template(qs, "facet_extremum");
  ASSERT_NE(top, nullptr);
  EXPECT_EQ(top->answer, "p");
  const QAPair* cmp = find_template(qs, "facet_compare");
  ASSERT_NE(cmp, nullptr);
  EXPECT_EQ(cmp->question, "Is the total y in the p panel greater than in the q panel?");
  EXPECT_EQ(cmp->answer, "yes");
}

TEST(GenerateQa, FacetKindsOnlyForFacetedSpecs) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3\nv,6\nw,1"));
  for (const auto& q : all_pairs(spec, vis)) {
    EXPECT_NE(q.kind, QAKind::facet_compare);
    EXPECT_NE(q.kind, QAKind::facet_count);
  }
}

TEST(GenerateQa, TieBreaksByFirstOccurrence) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nc,1\na,5\nb,5"));
  const auto qs = all_pairs(spec, vis, {QAKind::extremum});
  const QAPair* q = find_template(qs, "extremum_category", "max");
  ASSERT_NE(q, nullptr);
  EXPECT_EQ(q->answer, "a");
  EXPECT_EQ(q->question, "Which x is one of those with the highest y?");
}

TEST(GenerateQa, PercentageShare) {
  const ChartSpec spec = parse_spec(R"({"mark":"arc","encoding":{"theta":{"field":"v","type":"quantitative"},
      "color":{"field":"k","type":"nominal"}}})");
  const Table vis = execute_transforms(spec, parse_csv("k,v\na,30\nb,90"));
  const auto qs = all_pairs(spec, vis, {QAKind::aggregation});
  std::map<std::string, std::string> shares;
  for (const auto& q : qs)
    if (q.params.value("template", "") == "share") shares[q.params.value("a", "")] = q.answer;
  EXPECT_EQ(shares["a"], "25.0%");
  EXPECT_EQ(shares["b"], "75.0%");
}

TEST(GenerateQa, AggregateLabels) {
  const ChartSpec spec = parse_spec(R"({"mark":"bar","encoding":{"x":{"field":"k","type":"nominal"},
      "y":{"aggregate":"mean","field":"v","type":"quantitative"}}})");
  const Table vis = execute_transforms(spec, parse_csv("k,v\na,1\na,3\nb,5"));
  const auto qs = all_pairs(spec, vis, {QAKind::extremum});
  EXPECT_EQ(find_template(qs, "extremum_category", "max")->question, "Which k has the highest mean of v?");
}

TEST(AnswerOracle, ReproducesAndDetectsTampering) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3\nv,6\nw,2"));
  for (const auto& q : all_pairs(spec, vis)) {
    EXPECT_EQ(answer_oracle(q, vis), q.answer);
    EXPECT_NO_THROW(verify_qa(q, vis));
    QAPair bad = q;
    bad.answer += "x";
    EXPECT_THROW(verify_qa(bad, vis), TemplateMismatch);
  }
  QAPair unbound = all_pairs(spec, vis).front();
  unbound.params["measure"] = "nope";
  EXPECT_THROW(answer_oracle(unbound, vis), TemplateMismatch);
}

TEST(GenerateQa, SeededDeterminismAndSampling) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3\nv,6\nw,2\nz,9"));
  QAOptions o;
  o.n = 4;
  const auto a = generate_qa(spec, vis, 42, o);
  const auto b = generate_qa(spec, vis, 42, o);
  ASSERT_EQ(a.size(), 4u);
  EXPECT_EQ(a, b);
  std::string ja, jb;
  for (const auto& q : a) ja += qa_to_json(q).dump();
  for (const auto& q : b) jb += qa_to_json(q).dump();
  EXPECT_EQ(ja, jb);
  bool differs = false;
  for (std::uint64_t seed = 1; seed < 20 && !differs; ++seed) differs = generate_qa(spec, vis, seed, o) != a;
  EXPECT_TRUE(differs);
}

TEST(GenerateQa, JsonRoundTrip) {
  const ChartSpec spec = parse_spec(kXY);
  const Table vis = execute_transforms(spec, parse_csv("x,y\nu,3.5\nv,6"));
  for (auto q : all_pairs(spec, vis)) {
    q.original_question = "orig";
    EXPECT_EQ(qa_from_json(qa_to_json(q)), q);
  }
}

TEST(GenerateQa, RandomChartsProperties) {
  Rng rng(123);
  int pairs = 0;
  for (int i = 0; i < 300; ++i) {
    const Table raw = cases::random_table(rng);
    const ChartSpec spec = cases::random_spec(rng);
    Table vis;
    try {
      vis = execute_transforms(spec, raw);
    } catch (const EmptyResult&) {
      continue;
    }
    std::vector<QAPair> qs;
    try {
      qs = all_pairs(spec, vis);
    } catch (const NoApplicableTemplate&) {
      continue;
    }
    std::set<std::string> keys;
    for (const auto& q : qs) {
      ++pairs;
      ASSERT_EQ(answer_oracle(q, vis), q.answer);
      ASSERT_TRUE(keys.insert(std::string(to_string(q.kind)) + qa_to_json(q)["params"].dump()).second);
      ASSERT_EQ(em(q.answer, q.answer), 1) << q.answer;
      if (!spec.faceted()) {
        ASSERT_NE(q.kind, QAKind::facet_count);
        ASSERT_NE(q.kind, QAKind::facet_compare);
      }
      const std::string tmpl = q.params.value("template", "");
      if (tmpl == "sum" || tmpl == "mean") {
        // Brute-force fold straight over the table.
        const std::size_t col = vis.index_of(q.params.value("measure", ""));
        double total = 0;
        std::size_t n = 0;
        for (const auto& r : vis.rows())
          if (const auto* v = std::get_if<double>(&r[col])) total += *v, ++n;
        const double expected = tmpl == "sum" ? total : total / static_cast<double>(n);
        ASSERT_TRUE(q.value.has_value());
        ASSERT_LE(std::fabs(*q.value - expected), 1e-9 * std::max(1.0, std::fabs(expected)));
      }
    }
  }
  EXPECT_GT(pairs, 1000);
}

TEST(ParaphraseHook, FallbacksAndRewrite) {
  QAPair q;
  q.question = "Which x has the highest y?";
  q.answer = "v";
  EXPECT_EQ(paraphrase_hook(q, nullptr), q);

  std::vector<std::string> warnings;
  const auto failed = paraphrase_hook(q, [](const std::string&) -> std::string { throw TransportError("down"); },
                                      &warnings);
  EXPECT_EQ(failed, q);
  ASSERT_EQ(warnings.size(), 1u);

  const auto rewritten = paraphrase_hook(q, [](const std::string& s) { return "  Reworded: " + s + "\n"; });
  EXPECT_EQ(rewritten.question, "Reworded: Which x has the highest y?");
  EXPECT_EQ(rewritten.original_question, q.question);
  EXPECT_EQ(rewritten.answer, q.answer);
}
