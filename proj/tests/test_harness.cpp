#include "chartcycle/error.hpp"
#include "chartcycle/harness.hpp"
#include "support/stub_renderer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numeric>

using namespace chartcycle;

namespace {

const std::string kCorpus = std::string(CHARTCYCLE_SOURCE_DIR) + "/data/mini_corpus";

const std::vector<CorpusRecord>& corpus() {
  static const auto c = load_corpus(kCorpus);
  return c;
}

// Built once; several tests only read it.
const BenchResult& mini_bench() {
  static const BenchResult r = build_bench(corpus(), BenchConfig{}, 0);
  return r;
}

std::vector<LifecycleSample> test_split(const std::vector<LifecycleSample>& all) {
  std::vector<LifecycleSample> out;
  for (const auto& s : all)
    if (s.split == Split::test) out.push_back(s);
  return out;
}

CorpusRecord record(std::string id, std::string spec, std::string table = "k,v\na,3\nb,5\nc,1\n") {
  return {std::move(id), "Show v by k.", std::move(spec), std::move(table)};
}

const char* kBar = R"({"mark":"bar","encoding":{"x":{"field":"k","type":"nominal"},"y":{"field":"v","type":"quantitative"}}})";

// Independent largest-remainder allocation in rational arithmetic.
std::array<std::size_t, 3> largest_remainder(std::size_t count, std::size_t n, const std::array<std::size_t, 3>& totals) {
  std::array<std::size_t, 3> out{};
  std::array<std::pair<std::size_t, std::size_t>, 3> rems;  // (remainder numerator, index)
  std::size_t given = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = count * totals[i] / n;
    rems[i] = {count * totals[i] % n, i};
    given += out[i];
  }
  std::stable_sort(rems.begin(), rems.end(), [](auto a, auto b) { return a.first > b.first; });
  for (std::size_t k = 0; given < count; ++k, ++given) ++out[rems[k].second];
  return out;
}

}  // namespace

// ---- splits ----------------------------------------------------------------

TEST(Splits, SizesFloorTrainAndValAndGiveTheRestToTest) {
  EXPECT_EQ(split_sizes(6507, 0.8, 0.1), (std::array<std::size_t, 3>{5205, 650, 652}));
  EXPECT_EQ(split_sizes(100, 0.8, 0.1), (std::array<std::size_t, 3>{80, 10, 10}));
  EXPECT_EQ(split_sizes(0, 0.8, 0.1), (std::array<std::size_t, 3>{0, 0, 0}));
  for (std::size_t n = 1; n < 400; ++n) {
    const auto s = split_sizes(n, 0.8, 0.1);
    EXPECT_EQ(s[0] + s[1] + s[2], n);
    EXPECT_EQ(s[0], n * 8 / 10);
    EXPECT_EQ(s[1], n / 10);
  }
}

TEST(Splits, StratumAllocationMatchesLargestRemainderOracle) {
  EXPECT_EQ(stratum_allocation(1135, 6507, {5205, 650, 652}), (std::array<std::size_t, 3>{908, 113, 114}));
  for (std::size_t n = 10; n < 300; n += 7) {
    const auto totals = split_sizes(n, 0.8, 0.1);
    for (std::size_t count = 0; count <= n; count += 3) {
      const auto got = stratum_allocation(count, n, totals);
      EXPECT_EQ(got, largest_remainder(count, n, totals)) << count << "/" << n;
      for (std::size_t i = 0; i < 3; ++i)
        EXPECT_LE(std::fabs(static_cast<double>(got[i]) - static_cast<double>(count * totals[i]) / n), 1.0);
    }
  }
}

// ---- bench construction -----------------------------------------------------

TEST(BuildBench, MiniCorpusYieldsOneHundredStratifiedSamples) {
  const auto& r = mini_bench();
  ASSERT_EQ(r.samples.size(), 100u);
  std::array<std::array<int, 2>, 3> counts{};
  for (const auto& s : r.samples) ++counts[static_cast<int>(s.split)][s.faceted];
  EXPECT_EQ(counts[0][0] + counts[0][1], 80);
  EXPECT_EQ(counts[1][0] + counts[1][1], 10);
  EXPECT_EQ(counts[2][0] + counts[2][1], 10);
  const int faceted = counts[0][1] + counts[1][1] + counts[2][1];
  EXPECT_EQ(faceted, 17);
  // Each split's faceted share is within one sample of the global share.
  for (int i = 0; i < 3; ++i) {
    const double total = counts[i][0] + counts[i][1];
    EXPECT_LE(std::fabs(counts[i][1] - total * faceted / 100.0), 1.0);
  }
}

TEST(BuildBench, UnsupportedMarksAreExcludedWithAReason) {
  const auto& r = mini_bench();
  ASSERT_EQ(r.excluded.size(), 1u);
  EXPECT_EQ(r.excluded[0].id, "mc-084");
  EXPECT_EQ(r.excluded[0].reason.rfind("unsupported", 0), 0u) << r.excluded[0].reason;
}

TEST(BuildBench, SamplesSatisfyStoredInvariants) {
  const auto& r = mini_bench();
  EXPECT_TRUE(lint_dataset(r.samples).empty());
  for (const auto& s : r.samples) {
    EXPECT_EQ(s.faceted, s.spec.faceted());
    EXPECT_FALSE(s.qa.empty()) << s.id;
    EXPECT_EQ(s.image_ref, image_ref_for(content_key(s.spec, s.raw_table)));
    if (s.faceted) {
      EXPECT_TRUE(s.id.size() > 6 && s.id.substr(s.id.size() - 6) == "-facet") << s.id;
    }
  }
  EXPECT_TRUE(std::is_sorted(r.samples.begin(), r.samples.end(),
                             [](const auto& a, const auto& b) { return a.id < b.id; }));
}

TEST(BuildBench, RegenerationIsByteIdentical) {
  const BenchResult again = build_bench(corpus(), BenchConfig{}, 0);
  EXPECT_EQ(dataset_to_jsonl(again.samples), dataset_to_jsonl(mini_bench().samples));
}

TEST(BuildBench, GoldenDatasetHash) {
  // Pins the bundled corpus, seed 0 and default config. A change here means
  // the stored benchmark changed, which invalidates earlier reports.
  EXPECT_EQ(sha256_hex(dataset_to_jsonl(mini_bench().samples)),
            "8f150ced8ceb5242f5b9299fb079434d81c52a90ae03e71b622f3c745a18d79a");
}

TEST(BuildBench, RenderingDoesNotChangeTheDataset) {
  auto stub = std::make_shared<cases::StubRenderer>();
  RenderBridge bridge(stub);
  const BenchResult rendered = build_bench(corpus(), BenchConfig{}, 0, &bridge);
  EXPECT_EQ(dataset_to_jsonl(rendered.samples), dataset_to_jsonl(mini_bench().samples));
  EXPECT_EQ(rendered.images.size(), rendered.samples.size());
  for (const auto& s : rendered.samples) EXPECT_EQ(rendered.images.count(s.image_ref), 1u) << s.id;
}

TEST(BuildBench, SeedChangesSplitsNotContent) {
  const BenchResult other = build_bench(corpus(), BenchConfig{}, 99);
  ASSERT_EQ(other.samples.size(), mini_bench().samples.size());
  // The seed picks which singles get a faceted variant and how strata are
  // shuffled; corpus records themselves are unchanged.
  std::map<std::string, const LifecycleSample*> base;
  for (const auto& s : mini_bench().samples) base[s.id] = &s;
  std::size_t moved = 0, faceted = 0;
  for (const auto& s : other.samples) {
    faceted += s.faceted;
    if (s.faceted) continue;
    ASSERT_EQ(base.count(s.id), 1u) << s.id;
    EXPECT_EQ(normalize_spec(s.spec), normalize_spec(base[s.id]->spec));
    moved += s.split != base[s.id]->split;
  }
  EXPECT_EQ(faceted, 17u);
  EXPECT_GT(moved, 0u);
}

TEST(BuildBench, NoAugmentationKeepsOnlyCorpusRecords) {
  BenchConfig cfg;
  cfg.augment = false;
  const BenchResult r = build_bench(corpus(), cfg, 0);
  EXPECT_EQ(r.samples.size(), 83u);
  for (const auto& s : r.samples) EXPECT_FALSE(s.faceted);
}

TEST(BuildBench, EmptyCorpusWarns) {
  const BenchResult r = build_bench({}, BenchConfig{}, 0);
  EXPECT_TRUE(r.samples.empty());
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0], "empty corpus");
}

TEST(BuildBench, BadRecordsAreExcludedNotThrown) {
  BenchConfig cfg;
  cfg.augment = false;
  const std::vector<CorpusRecord> recs = {
      record("a", kBar),
      record("a", kBar),
      record("b", "{broken"),
      record("c", R"({"mark":"bar","encoding":{"x":{"field":"nope","type":"nominal"},"y":{"field":"v","type":"quantitative"}}})"),
      record("d", kBar, "k,v\na,1\nb\n"),
      {"e", "", kBar, "k,v\na,1\n"},
  };
  const BenchResult r = build_bench(recs, cfg, 0);
  ASSERT_EQ(r.samples.size(), 1u);
  EXPECT_EQ(r.samples[0].id, "a");
  std::map<std::string, std::string> why;
  for (const auto& e : r.excluded) why[e.id] += e.reason;
  EXPECT_NE(why["a"].find("duplicate"), std::string::npos);
  EXPECT_EQ(why["b"].rfind("invalid spec", 0), 0u) << why["b"];
  EXPECT_EQ(why["c"].rfind("execution error", 0), 0u) << why["c"];
  EXPECT_EQ(why["d"].rfind("invalid table", 0), 0u) << why["d"];
  EXPECT_EQ(why["e"], "empty query");
}

TEST(BuildBench, ConfigIsValidated) {
  BenchConfig cfg;
  cfg.train_fraction = 0.95;
  EXPECT_THROW(build_bench(corpus(), cfg, 0), ConfigError);
  cfg = {};
  cfg.facet_fraction = 1.0;
  EXPECT_THROW(build_bench(corpus(), cfg, 0), ConfigError);
}

// ---- storage ---------------------------------------------------------------------

TEST(Dataset, JsonlRoundTripIsByteStable) {
  const std::string text = dataset_to_jsonl(mini_bench().samples);
  const auto back = dataset_from_jsonl(text);
  EXPECT_EQ(dataset_to_jsonl(back), text);
  EXPECT_TRUE(lint_dataset(back).empty());
}

TEST(Dataset, MalformedRecordsThrowSchemaError) {
  EXPECT_THROW(dataset_from_jsonl("{\"id\":\"x\"}\n"), SchemaError);
  EXPECT_THROW(dataset_from_jsonl("not json\n"), Error);
}

TEST(Lint, DetectsTampering) {
  auto samples = test_split(mini_bench().samples);
  ASSERT_GE(samples.size(), 3u);
  samples[0].image_ref = "images/stale.png";
  samples[1].faceted = !samples[1].faceted;
  samples[2].qa[0].answer = "definitely wrong";
  samples.push_back(samples.back());
  const auto issues = lint_dataset(samples);
  std::map<std::string, std::string> by_id;
  for (const auto& i : issues) by_id[i.id] += i.message + ";";
  EXPECT_NE(by_id[samples[0].id].find("content-addressed"), std::string::npos);
  EXPECT_NE(by_id[samples[1].id].find("faceted flag"), std::string::npos);
  EXPECT_NE(by_id[samples[2].id].find("stored answer"), std::string::npos);
  EXPECT_NE(by_id[samples.back().id].find("duplicate id"), std::string::npos);
}

// ---- evaluation -------------------------------------------------------------------

namespace {

struct Fixture {
  std::vector<LifecycleSample> dataset = mini_bench().samples;
  std::shared_ptr<cases::StubRenderer> stub = std::make_shared<cases::StubRenderer>();
  RenderBridge bridge{stub};
  HarnessConfig cfg;
};

class DownModel final : public ChartModel {
 public:
  ModelReply nl2chart(const nlohmann::ordered_json&, const std::string&) override { throw TransportError("down"); }
  ModelReply parse_schema(const ChartImage&, const nlohmann::ordered_json&) override { throw TransportError("down"); }
  ModelReply parse_data(const ChartImage&, const std::string&) override { throw RateLimited("slow down"); }
  ModelReply answer_qa(const ChartImage&, const std::string&) override { throw EmptyResponse("nothing"); }
  ModelReply nl2vql(const nlohmann::ordered_json&, const std::string&) override { throw TransportError("down"); }
  std::string name() const override { return "down"; }
};

class GarbageModel final : public ChartModel {
 public:
  ModelReply reply(std::string s) { return {s, s, {}}; }
  ModelReply nl2chart(const nlohmann::ordered_json&, const std::string&) override { return reply("{\"mark\":\"sparkle\"}"); }
  ModelReply parse_schema(const ChartImage&, const nlohmann::ordered_json&) override { return reply("{}"); }
  ModelReply parse_data(const ChartImage&, const std::string&) override { return reply("x\n1\n"); }
  ModelReply answer_qa(const ChartImage&, const std::string&) override { return reply("no idea"); }
  ModelReply nl2vql(const nlohmann::ordered_json&, const std::string&) override { return reply("SELECT"); }
  std::string name() const override { return "garbage"; }
};

// Generates a wrong chart (an extra filter on the first raw column) and then
// parses its own image back perfectly: consistent with itself, wrong
// against gold.
class SelfConsistentModel final : public ChartModel {
 public:
  explicit SelfConsistentModel(const std::vector<LifecycleSample>& samples) {
    for (const auto& s : samples) by_query_[s.nl_query + "\n" + table_info(s.raw_table).dump()] = &s;
  }

  ModelReply nl2chart(const nlohmann::ordered_json& info, const std::string& query) override {
    const LifecycleSample& s = *by_query_.at(query + "\n" + info.dump());
    const Json gold = Json::parse(normalize_spec(s.spec));
    const Column& col = s.raw_table.columns()[0];
    // First value of the first column that leaves a non-empty chart.
    for (const Row& row : s.raw_table.rows()) {
      const std::string cell = format_cell(row[0], col);
      Json filter = {{"field", col.name}};
      filter["equal"] = col.type == ColumnType::number ? Json(std::stod(cell)) : Json(cell);
      Json doc = gold;
      Json transforms = Json::array({{{"filter", filter}}});
      for (const auto& t : gold.value("transform", Json::array())) transforms.push_back(t);
      doc["transform"] = transforms;
      const std::string text = doc.dump();
      const ChartSpec gen = parse_spec(text);
      try {
        const std::string csv = serialize_csv(execute_transforms(gen, s.raw_table));
        std::lock_guard lock(mutex_);
        generated_[content_key(gen, s.raw_table)] = {normalize_spec(strip_transforms(gen)), csv};
        return {text, text, {}};
      } catch (const EmptyResult&) {
      }
    }
    throw EmptyResponse("no usable filter");
  }
  ModelReply parse_schema(const ChartImage& image, const nlohmann::ordered_json&) override {
    return echo(image, true);
  }
  ModelReply parse_data(const ChartImage& image, const std::string&) override { return echo(image, false); }
  ModelReply answer_qa(const ChartImage&, const std::string&) override { return {"0", "0", {}}; }
  ModelReply nl2vql(const nlohmann::ordered_json&, const std::string&) override { return {"", "", {}}; }
  std::string name() const override { return "self-consistent"; }

 private:
  ModelReply echo(const ChartImage& image, bool schema) {
    std::lock_guard lock(mutex_);
    const auto it = generated_.find(image.content_key);
    if (it == generated_.end()) throw EmptyResponse("unknown image");
    const std::string& text = schema ? it->second.first : it->second.second;
    return {text, text, {}};
  }

  std::map<std::string, const LifecycleSample*> by_query_;
  std::mutex mutex_;
  std::map<std::string, std::pair<std::string, std::string>> generated_;
};

// Emits one fixed spec for every query. It only executes on tables with the
// "sales" schema; on those it parses its own chart back perfectly.
class FixedSpecModel final : public ChartModel {
 public:
  static constexpr const char* kSpec =
      R"({"mark":"bar","encoding":{"x":{"field":"region","type":"nominal"},"y":{"field":"units","type":"quantitative","aggregate":"sum"}}})";

  explicit FixedSpecModel(const std::vector<LifecycleSample>& samples) {
    const ChartSpec spec = parse_spec(kSpec);
    for (const auto& s : samples) {
      try {
        tables_[content_key(spec, s.raw_table)] = serialize_csv(execute_transforms(spec, s.raw_table));
      } catch (const Error&) {
      }
    }
  }
  std::size_t executable() const { return tables_.size(); }

  ModelReply nl2chart(const nlohmann::ordered_json&, const std::string&) override { return {kSpec, kSpec, {}}; }
  ModelReply parse_schema(const ChartImage&, const nlohmann::ordered_json&) override {
    const std::string t = normalize_spec(parse_spec(kSpec));
    return {t, t, {}};
  }
  ModelReply parse_data(const ChartImage& image, const std::string&) override {
    const auto it = tables_.find(image.content_key);
    if (it == tables_.end()) throw EmptyResponse("unknown image");
    return {it->second, it->second, {}};
  }
  ModelReply answer_qa(const ChartImage&, const std::string&) override { return {"0", "0", {}}; }
  ModelReply nl2vql(const nlohmann::ordered_json&, const std::string&) override { return {"", "", {}}; }
  std::string name() const override { return "fixed"; }

 private:
  std::map<std::string, std::string> tables_;
};

// Answers the data task with a scripted CSV per sample id.
class ScriptedDataModel final : public ChartModel {
 public:
  std::map<std::string, std::string> by_key;
  ModelReply nl2chart(const nlohmann::ordered_json&, const std::string&) override { throw EmptyResponse("unused"); }
  ModelReply parse_schema(const ChartImage&, const nlohmann::ordered_json&) override { throw EmptyResponse("unused"); }
  ModelReply parse_data(const ChartImage& image, const std::string&) override {
    const std::string& t = by_key.at(image.content_key);
    return {t, t, {}};
  }
  ModelReply answer_qa(const ChartImage&, const std::string&) override { throw EmptyResponse("unused"); }
  ModelReply nl2vql(const nlohmann::ordered_json&, const std::string&) override { throw EmptyResponse("unused"); }
  std::string name() const override { return "scripted"; }
};

double mean_of(const MetricReport& r, const std::string& key) {
  const auto m = r.mean(key);
  EXPECT_TRUE(m.has_value()) << key;
  return m.value_or(-1.0);
}

}  // namespace

TEST(RunTask, OracleModelScoresAtCeilingOnEveryTask) {
  Fixture f;
  OracleChartModel oracle(f.dataset);
  const EvalContext ctx{&oracle, &f.bridge, nullptr, ""};

  const auto nl = run_task(ctx, f.dataset, Task::nl2chart, f.cfg);
  EXPECT_EQ(nl.samples.size(), 10u);
  EXPECT_DOUBLE_EQ(mean_of(nl, "rouge_l_recall"), 1.0);
  EXPECT_DOUBLE_EQ(mean_of(nl, "valid"), 1.0);
  EXPECT_DOUBLE_EQ(mean_of(nl, "psnr"), f.cfg.metrics.psnr_cap_db);
  EXPECT_DOUBLE_EQ(mean_of(nl, "ms_ssim"), 1.0);
  EXPECT_TRUE(nl.samples[0].scores["clip"].is_null());

  const auto schema = run_task(ctx, f.dataset, Task::schema, f.cfg);
  EXPECT_DOUBLE_EQ(mean_of(schema, "rouge_l_recall"), 1.0);

  const auto data = run_task(ctx, f.dataset, Task::data, f.cfg);
  for (const char* k : {"rnss", "table_s", "f1_k", "acc_cell"}) EXPECT_DOUBLE_EQ(mean_of(data, k), 1.0) << k;

  const auto qa = run_task(ctx, f.dataset, Task::qa, f.cfg);
  EXPECT_GE(qa.samples.size(), 10u);
  EXPECT_DOUBLE_EQ(mean_of(qa, "em"), 1.0);

  const auto vql = run_vql(ctx, f.dataset, f.cfg);
  EXPECT_DOUBLE_EQ(mean_of(vql, "vql_match"), 1.0);
}

TEST(RunTask, OnlyTheTestSplitByDefault) {
  Fixture f;
  OracleChartModel oracle(f.dataset);
  const EvalContext ctx{&oracle, nullptr, nullptr, ""};
  const auto r = run_task(ctx, f.dataset, Task::data, f.cfg);
  for (const auto& s : r.samples) {
    const auto it = std::find_if(f.dataset.begin(), f.dataset.end(), [&](const auto& d) { return d.id == s.id; });
    ASSERT_NE(it, f.dataset.end());
    EXPECT_EQ(it->split, Split::test);
  }
  f.cfg.test_split_only = false;
  EXPECT_EQ(run_task(ctx, f.dataset, Task::data, f.cfg).samples.size(), 100u);
}

TEST(RunTask, WithoutRendererVisualMetricsAreNull) {
  Fixture f;
  OracleChartModel oracle(f.dataset);
  const EvalContext ctx{&oracle, nullptr, nullptr, ""};
  const auto r = run_task(ctx, f.dataset, Task::nl2chart, f.cfg);
  for (const auto& s : r.samples) {
    EXPECT_TRUE(s.scores["psnr"].is_null());
    EXPECT_TRUE(s.scores["ms_ssim"].is_null());
    EXPECT_EQ(s.scores["rouge_l_recall"], 1.0);
  }
}

TEST(RunTask, EndpointDownScoresZeroWithNotes) {
  Fixture f;
  DownModel down;
  const EvalContext ctx{&down, &f.bridge, nullptr, ""};
  const auto nl = run_task(ctx, f.dataset, Task::nl2chart, f.cfg);
  ASSERT_EQ(nl.samples.size(), 10u);
  for (const auto& s : nl.samples) {
    EXPECT_EQ(s.scores["rouge_l_recall"], 0.0);
    EXPECT_EQ(s.scores["valid"], 0.0);
    ASSERT_FALSE(s.notes.empty());
    EXPECT_EQ(s.notes[0].rfind("nl2chart failed: Transport:", 0), 0u) << s.notes[0];
  }
  const auto data = run_task(ctx, f.dataset, Task::data, f.cfg);
  for (const auto& s : data.samples) {
    EXPECT_EQ(s.scores["table_s"], 0.0);
    EXPECT_EQ(s.notes[0].rfind("data failed: RateLimited", 0), 0u) << s.notes[0];
  }
  const auto qa = run_task(ctx, f.dataset, Task::qa, f.cfg);
  EXPECT_DOUBLE_EQ(mean_of(qa, "em"), 0.0);
}

TEST(RunTask, DataScoresMatchDirectMetricCalls) {
  Fixture f;
  auto test = test_split(f.dataset);
  test.resize(3);
  ScriptedDataModel model;
  std::vector<std::string> preds;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const std::string gold = serialize_csv(test[i].vis_table);
    std::string pred = gold;
    if (i == 1) pred = gold.substr(0, gold.find('\n') + 1);  // header only
    if (i == 2) {
      // Drop the last data row.
      pred = gold.substr(0, gold.rfind('\n', gold.size() - 2) + 1);
    }
    model.by_key[content_key(test[i].spec, test[i].raw_table)] = pred;
    preds.push_back(pred);
  }
  const auto r = run_task({&model, nullptr, nullptr, ""}, test, Task::data, f.cfg);
  ASSERT_EQ(r.samples.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const std::string gold = serialize_csv(test[i].vis_table);
    const TableScore t = table_score(preds[i], gold, f.cfg.metrics);
    EXPECT_DOUBLE_EQ(r.samples[i].scores["table_s"].get<double>(), t.s);
    EXPECT_DOUBLE_EQ(r.samples[i].scores["f1_k"].get<double>(), t.f1_k);
    EXPECT_DOUBLE_EQ(r.samples[i].scores["rnss"].get<double>(),
                     rnss(table_numbers(preds[i]), table_numbers(gold), f.cfg.metrics.rnss_epsilon));
  }
  EXPECT_DOUBLE_EQ(r.samples[0].scores["table_s"].get<double>(), 1.0);
  EXPECT_DOUBLE_EQ(r.samples[1].scores["table_s"].get<double>(), 0.0);
  EXPECT_GT(r.samples[2].scores["table_s"].get<double>(), 0.0);
  EXPECT_LT(r.samples[2].scores["table_s"].get<double>(), 1.0);
}

TEST(RunTask, ConcurrencyDoesNotChangeResults) {
  Fixture f;
  OracleChartModel oracle(f.dataset);
  const EvalContext ctx{&oracle, &f.bridge, nullptr, ""};
  f.cfg.test_split_only = false;
  f.cfg.concurrency = 1;
  const auto serial = run_task(ctx, f.dataset, Task::nl2chart, f.cfg).to_json();
  f.cfg.concurrency = 8;
  auto parallel = run_task(ctx, f.dataset, Task::nl2chart, f.cfg).to_json();
  parallel["settings"] = serial["settings"];
  EXPECT_EQ(serial.dump(), parallel.dump());
}

TEST(RunCycle, OracleClosesEveryLoop) {
  Fixture f;
  OracleChartModel oracle(f.dataset);
  const auto r = run_cycle({&oracle, &f.bridge, nullptr, ""}, f.dataset, f.cfg);
  ASSERT_EQ(r.closure.size(), 10u);
  EXPECT_EQ(r.closure_rate(), 1.0);
  EXPECT_EQ(r.valid_rate(), 1.0);
  EXPECT_DOUBLE_EQ(mean_of(r.schema, "closure_rouge"), 1.0);
  EXPECT_DOUBLE_EQ(mean_of(r.data, "closure_table_s"), 1.0);
  EXPECT_DOUBLE_EQ(mean_of(r.qa, "em"), 1.0);
  const auto j = r.to_json();
  EXPECT_EQ(j["task"], "cycle");
  EXPECT_EQ(j["cycle"]["closure_defined"], 10);
}

TEST(RunCycle, SelfConsistencyIsNotCorrectness) {
  Fixture f;
  f.cfg.test_split_only = false;
  SelfConsistentModel model(f.dataset);
  const auto r = run_cycle({&model, &f.bridge, nullptr, ""}, f.dataset, f.cfg);
  EXPECT_EQ(r.valid_rate(), 1.0);
  EXPECT_EQ(r.closure_rate(), 1.0);
  // Recall of gold tokens survives the extra filter; the data does not.
  EXPECT_DOUBLE_EQ(mean_of(r.nl2chart, "rouge_l_recall"), 1.0);
  EXPECT_LT(mean_of(r.data, "table_s"), 0.9);
  EXPECT_DOUBLE_EQ(mean_of(r.data, "closure_table_s"), 1.0);
}

TEST(RunCycle, FixedSpecClosesButMissesGold) {
  Fixture f;
  f.cfg.test_split_only = false;
  FixedSpecModel model(f.dataset);
  ASSERT_GT(model.executable(), 0u);
  ASSERT_LT(model.executable(), f.dataset.size());
  const auto r = run_cycle({&model, &f.bridge, nullptr, ""}, f.dataset, f.cfg);
  std::size_t defined = 0;
  for (const auto& [id, c] : r.closure) defined += c.has_value();
  EXPECT_EQ(defined, model.executable());
  EXPECT_DOUBLE_EQ(r.valid_rate(), static_cast<double>(model.executable()) / f.dataset.size());
  EXPECT_EQ(r.closure_rate(), 1.0);
  EXPECT_LT(mean_of(r.nl2chart, "rouge_l_recall"), 0.9);
  EXPECT_LT(mean_of(r.data, "table_s"), 0.5);
}

TEST(RunCycle, AllInvalidGenerationsLeaveClosureUndefined) {
  Fixture f;
  GarbageModel model;
  const auto r = run_cycle({&model, &f.bridge, nullptr, ""}, f.dataset, f.cfg);
  EXPECT_EQ(r.valid_rate(), 0.0);
  EXPECT_FALSE(r.closure_rate().has_value());
  for (const auto& [id, c] : r.closure) EXPECT_FALSE(c.has_value()) << id;
  for (const auto& s : r.data.samples) {
    EXPECT_EQ(s.scores["table_s"], 0.0);
    EXPECT_NE(std::find(s.notes.begin(), s.notes.end(), "generation invalid"), s.notes.end());
  }
  EXPECT_TRUE(r.to_json()["cycle"]["closure"].is_null());
}

TEST(HarnessConfig, RejectsBadValues) {
  HarnessConfig c;
  c.concurrency = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.closure_rouge_threshold = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(SampleImage, PrefersStoredFileThenRenders) {
  Fixture f;
  const auto& s = f.dataset.front();
  const ChartImage rendered = sample_image(s, {nullptr, &f.bridge, nullptr, "/nonexistent"});
  EXPECT_EQ(rendered.content_key, content_key(s.spec, s.raw_table));
  EXPECT_FALSE(rendered.png.empty());
  EXPECT_EQ(sample_image(s, {nullptr, nullptr, nullptr, ""}).png, "");
}

TEST(TableNumbers, SkipsHeaderAndReadsCells) {
  EXPECT_EQ(table_numbers("x,y\na,1\nb,2.5\n"), (std::vector<double>{1, 2.5}));
  EXPECT_EQ(table_numbers("2020,y\n2021,3\n"), (std::vector<double>{2021, 3}));
}

// ---- task mix ---------------------------------------------------------------------

TEST(TaskMix, SameSeedSameStream) {
  const auto w = TaskMixSampler::kDefaultWeights;
  TaskMixSampler a(w, 5), b(w, 5), c(w, 6);
  const auto x = a.take(200), y = b.take(200), z = c.take(200);
  EXPECT_EQ(x, y);
  EXPECT_NE(x, z);
}

TEST(TaskMix, ZeroWeightIsNeverDrawn) {
  TaskMixSampler s({1, 1, 0, 0}, 3);
  for (Task t : s.take(2000)) EXPECT_TRUE(t == Task::nl2chart || t == Task::schema);
}

TEST(TaskMix, SingleWeightGivesConstantStream) {
  TaskMixSampler s({1, 0, 0, 0}, 8);
  for (Task t : s.take(500)) EXPECT_EQ(t, Task::nl2chart);
}

TEST(TaskMix, DefaultShareOfReasoning) {
  TaskMixSampler s;
  std::array<int, 4> counts{};
  for (Task t : s.take(20000)) ++counts[static_cast<int>(t)];
  EXPECT_NEAR(counts[3] / 20000.0, 0.2, 0.01);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(counts[i] / 20000.0, 0.8 / 3, 0.015);
}

TEST(TaskMix, RejectsBadWeights) {
  EXPECT_THROW(TaskMixSampler({0, 0, 0, 0}), ConfigError);
  EXPECT_THROW(TaskMixSampler({1, -1, 1, 1}), ConfigError);
  EXPECT_THROW(TaskMixSampler({1, NAN, 1, 1}), ConfigError);
}

// ---- VQL ------------------------------------------------------------------------------

TEST(SpecToVql, EncodingAggregate) {
  EXPECT_EQ(spec_to_vql(parse_spec(
                R"({"mark":"bar","encoding":{"x":{"field":"k","type":"nominal"},"y":{"field":"v","type":"quantitative","aggregate":"sum"}}})")),
            "Visualize BAR SELECT k , SUM(v) FROM table GROUP BY k");
}

TEST(SpecToVql, TransformBlockFilterAndSort) {
  const ChartSpec spec = parse_spec(R"({"mark":"bar","transform":[
      {"filter":{"field":"region","equal":"North"}},
      {"aggregate":[{"op":"mean","field":"v","as":"avg"}],"groupby":["k"]},
      {"sort":[{"field":"avg","order":"descending"}]}],
    "encoding":{"x":{"field":"k","type":"nominal"},"y":{"field":"avg","type":"quantitative"}}})");
  EXPECT_EQ(spec_to_vql(spec, "sales"),
            "Visualize BAR SELECT k , MEAN(v) FROM sales WHERE region = 'North' GROUP BY k ORDER BY avg DESC");
}

TEST(SpecToVql, CountAndNoAggregate) {
  EXPECT_EQ(spec_to_vql(parse_spec(
                R"({"mark":"bar","encoding":{"x":{"field":"k","type":"nominal"},"y":{"aggregate":"count","type":"quantitative"}}})")),
            "Visualize BAR SELECT k , COUNT(*) FROM table GROUP BY k");
  EXPECT_EQ(spec_to_vql(parse_spec(
                R"({"mark":"point","encoding":{"x":{"field":"a","type":"quantitative"},"y":{"field":"b","type":"quantitative"}}})")),
            "Visualize POINT SELECT a , b FROM table");
}
