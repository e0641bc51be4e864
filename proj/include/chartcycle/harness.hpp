#pragma once

// Benchmark assembly and the evaluation loop over a chart model:
// generate -> render -> parse -> reason.

#include "chartcycle/facet.hpp"
#include "chartcycle/metrics.hpp"
#include "chartcycle/model_client.hpp"
#include "chartcycle/qa.hpp"
#include "chartcycle/render.hpp"
#include "chartcycle/spec.hpp"
#include "chartcycle/table.hpp"
#include "chartcycle/util.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace chartcycle {

enum class Split { train, val, test };
std::string_view to_string(Split s) noexcept;
std::optional<Split> split_from_string(std::string_view s) noexcept;

enum class Task { nl2chart, schema, data, qa };
std::string_view to_string(Task t) noexcept;
std::optional<Task> task_from_string(std::string_view s) noexcept;

/// One aligned unit (raw table, query, spec, vis table, image, QA).
/// Invariants: vis_table = execute_transforms(spec, raw_table);
/// stripped_spec = strip_transforms(spec); image_ref names the render of
/// stripped_spec over apply_transform_block(spec, raw_table).
struct LifecycleSample {
  std::string id;
  RawTable raw_table;
  std::string nl_query;
  ChartSpec spec;
  ChartSpec stripped_spec;
  VisTable vis_table;
  std::string image_ref;
  std::vector<QAPair> qa;
  bool faceted = false;
  Mark mark = Mark::bar;
  Split split = Split::train;
};

/// sha256 of the normalized spec and the raw table CSV.
std::string content_key(const ChartSpec& spec, const Table& raw);
inline std::string image_ref_for(const std::string& key) { return "images/" + key + ".png"; }

/// Spec document and data the chart image is rendered from.
struct RenderInput {
  std::string spec_text;
  Table data;
};
RenderInput stripped_context(const ChartSpec& spec, const Table& raw);

nlohmann::ordered_json sample_to_json(const LifecycleSample& s);
/// Throws SchemaError on missing or malformed fields.
LifecycleSample sample_from_json(const nlohmann::ordered_json& j);

/// One JSON record per line in sample order.
std::string dataset_to_jsonl(const std::vector<LifecycleSample>& samples);
std::vector<LifecycleSample> dataset_from_jsonl(std::string_view text);

// ---- corpus and bench construction ----------------------------------------

struct CorpusRecord {
  std::string id;
  std::string query;
  std::string spec_text;
  std::string table_csv;
};

/// Reads corpus.jsonl records {id, query, spec, table}. `path` may be the
/// file or its directory. Throws ConfigError when missing or malformed.
std::vector<CorpusRecord> load_corpus(const std::string& path);

struct BenchConfig {
  bool augment = true;
  // Target share of faceted samples in the finished bench.
  double facet_fraction = 0.174;
  FacetConfig facet;
  QAOptions qa;
  double train_fraction = 0.8;
  double val_fraction = 0.1;

  void validate() const;
};

struct Exclusion {
  std::string id;
  std::string reason;
};

struct BenchResult {
  std::vector<LifecycleSample> samples;  // sorted by id
  std::map<std::string, std::string> images;  // image_ref -> PNG, when rendered
  std::vector<Exclusion> excluded;
  std::vector<std::string> warnings;
};

/// Validates, augments facets, executes, renders (when `bridge` is set),
/// generates QA and assigns stratified splits. Per-record failures are
/// excluded with reasons; nothing throws for bad records.
BenchResult build_bench(const std::vector<CorpusRecord>& corpus, const BenchConfig& cfg, std::uint64_t seed,
                        RenderBridge* bridge = nullptr);

/// Split sizes for n samples: floor(train n), floor(val n), remainder.
std::array<std::size_t, 3> split_sizes(std::size_t n, double train, double val);
/// Largest-remainder share of `totals` for a stratum of `count` samples
/// out of `n`; ties go to the earlier split.
std::array<std::size_t, 3> stratum_allocation(std::size_t count, std::size_t n, const std::array<std::size_t, 3>& totals);

struct LintIssue {
  std::string id;
  std::string message;
};
/// Re-derives every stored invariant; an empty result means clean.
std::vector<LintIssue> lint_dataset(const std::vector<LifecycleSample>& samples);

// ---- evaluation -----------------------------------------------------------

struct HarnessConfig {
  MetricConfig metrics;
  std::size_t concurrency = 4;
  bool test_split_only = true;
  // Data parsing receives the stripped spec unless this is set.
  bool data_task_full_spec = false;
  double closure_rouge_threshold = 0.9;
  double closure_table_threshold = 0.9;

  void validate() const;
};

struct EvalContext {
  ChartModel* model = nullptr;
  RenderBridge* bridge = nullptr;     // visual metrics are skipped without it
  ImageEmbedder* embedder = nullptr;  // CLIP is null without it
  std::string image_dir;              // root that image_ref paths resolve against
};

/// The chart image for a sample: stored file, else a fresh render, else an
/// empty PNG with the content key set.
ChartImage sample_image(const LifecycleSample& s, const EvalContext& ctx);

/// Numbers in the data cells of a CSV text (header excluded).
std::vector<double> table_numbers(std::string_view csv);

MetricReport run_task(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset, Task task,
                      const HarnessConfig& cfg);

/// Alternate VQL template: per-sample "vql_match" (case- and
/// whitespace-insensitive equality with spec_to_vql of the gold spec), with
/// extraction warnings as notes.
MetricReport run_vql(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset, const HarnessConfig& cfg);

struct ConsistencyReport {
  MetricReport nl2chart, schema, data, qa;
  // Per sample in dataset order; nullopt where the generation was invalid.
  std::vector<std::pair<std::string, std::optional<bool>>> closure;

  std::optional<double> closure_rate() const;
  double valid_rate() const;
  nlohmann::ordered_json to_json() const;
};

ConsistencyReport run_cycle(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset,
                            const HarnessConfig& cfg);

/// Seeded task stream; weights are for (nl2chart, schema, data, qa).
class TaskMixSampler {
 public:
  static constexpr std::array<double, 4> kDefaultWeights = {0.8 / 3, 0.8 / 3, 0.8 / 3, 0.2};

  explicit TaskMixSampler(std::array<double, 4> weights = kDefaultWeights, std::uint64_t seed = 0);
  Task next();
  std::vector<Task> take(std::size_t n);

 private:
  std::array<double, 4> cumulative_;
  Rng rng_;
};

/// VQL statement for a spec, used as the oracle's nl2vql answer.
std::string spec_to_vql(const ChartSpec& spec, const std::string& table_name = "table");

/// Answers every task from the gold samples: the model whose outputs are
/// exactly right. Images are recognized by content key, queries by text
/// and table summary.
class OracleChartModel final : public ChartModel {
 public:
  explicit OracleChartModel(const std::vector<LifecycleSample>& samples);

  ModelReply nl2chart(const nlohmann::ordered_json& table_info, const std::string& query) override;
  ModelReply parse_schema(const ChartImage& image, const nlohmann::ordered_json& table_info) override;
  ModelReply parse_data(const ChartImage& image, const std::string& spec_text) override;
  ModelReply answer_qa(const ChartImage& image, const std::string& question) override;
  ModelReply nl2vql(const nlohmann::ordered_json& table_info, const std::string& query) override;
  std::string name() const override { return "oracle"; }

 private:
  struct Gold {
    std::string spec, stripped, vis_csv, vql;
    std::map<std::string, std::string> answers;
  };
  const Gold& by_image(const ChartImage& image) const;
  const Gold& by_query(const nlohmann::ordered_json& table_info, const std::string& query) const;

  std::vector<Gold> gold_;
  std::map<std::string, std::size_t> images_;
  std::map<std::string, std::size_t> queries_;
};

}  // namespace chartcycle
