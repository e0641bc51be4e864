#include "chartcycle/error.hpp"
#include "chartcycle/harness.hpp"
#include "chartcycle/image.hpp"
#include "chartcycle/text.hpp"

#include <cmath>
#include <filesystem>
#include <numeric>

namespace chartcycle {

using OJson = nlohmann::ordered_json;

void HarnessConfig::validate() const {
  metrics.validate();
  if (concurrency == 0) throw ConfigError("concurrency must be positive");
  for (double t : {closure_rouge_threshold, closure_table_threshold})
    if (!(t >= 0 && t <= 1)) throw ConfigError("closure thresholds must be in [0, 1]");
}

ChartImage sample_image(const LifecycleSample& s, const EvalContext& ctx) {
  ChartImage img;
  img.content_key = content_key(s.spec, s.raw_table);
  if (!ctx.image_dir.empty() && !s.image_ref.empty()) {
    const auto path = std::filesystem::path(ctx.image_dir) / s.image_ref;
    if (std::filesystem::exists(path)) {
      img.png = read_file(path.string());
      return img;
    }
  }
  if (ctx.bridge) {
    const RenderInput in = stripped_context(s.spec, s.raw_table);
    try {
      const RenderResult r = ctx.bridge->render(in.spec_text, in.data);
      if (r.ok()) img.png = r.png;
    } catch (const Timeout&) {
    }
  }
  return img;
}

std::vector<double> table_numbers(std::string_view csv) {
  std::vector<double> out;
  const auto records = split_csv_records(normalize_table_text(csv));
  for (std::size_t r = 1; r < records.size(); ++r)
    for (const auto& cell : records[r])
      for (const auto& n : extract_numbers(cell)) out.push_back(n.value);
  return out;
}

namespace {

bool is_model_failure(const Error& e) {
  return e.code() == ErrorCode::transport || e.code() == ErrorCode::rate_limited ||
         e.code() == ErrorCode::empty_response;
}

std::string failure_note(const char* stage, const Error& e) {
  return std::string(stage) + " failed: " + to_string(e.code()) + ": " + e.what();
}

// Runs fn, turning model failures into a note; other errors propagate.
template <typename Fn>
std::optional<ModelReply> call_model(const char* stage, SampleScores& out, Fn&& fn) {
  try {
    ModelReply r = fn();
    for (const auto& w : r.warnings) out.notes.push_back(std::string(stage) + ": " + w);
    return r;
  } catch (const Error& e) {
    if (!is_model_failure(e)) throw;
    out.notes.push_back(failure_note(stage, e));
    return std::nullopt;
  }
}

OJson number_or_null(std::optional<double> v) { return v ? OJson(*v) : OJson(); }

struct Visual {
  double psnr = 0, ms_ssim = 0;
};

Visual compare_images(const std::string& pred_png, const std::string& gold_png, const MetricConfig& m,
                      SampleScores& out) {
  if (pred_png.empty() || gold_png.empty()) return {};
  if (pred_png == gold_png) return {m.psnr_cap_db, 1.0};
  try {
    const Image a = decode_png(pred_png);
    const Image b = decode_png(gold_png);
    return {psnr(&a, &b, m.psnr_cap_db), ms_ssim(&a, &b)};
  } catch (const Error& e) {
    out.notes.push_back(std::string("image decode failed: ") + e.what());
    return {};
  }
}

std::string render_png(RenderBridge* bridge, const std::string& spec_text, const Table& data) {
  try {
    const RenderResult r = bridge->render(spec_text, data);
    return r.ok() ? r.png : std::string();
  } catch (const Timeout&) {
    return {};
  }
}

// Spec-prediction scores: ROUGE-L recall, validity and, when a renderer or
// embedder is present, visual similarity against `gold_png`.
void score_spec(const std::optional<std::string>& pred, const std::string& gold_text, const Table& data,
                const std::string& gold_png, const EvalContext& ctx, const MetricConfig& m, SampleScores& out) {
  out.scores["rouge_l_recall"] = pred ? spec_rouge(*pred, gold_text, m.rouge_tokens).value_or(0.0) : 0.0;
  ValidityResult v;
  if (pred) {
    v = validity(*pred, data, ctx.bridge);
    if (!v.valid) out.notes.push_back("invalid (" + v.mode + "): " + v.reason);
  }
  out.scores["valid"] = v.valid ? 1.0 : 0.0;
  std::string pred_png;
  if (ctx.bridge) {
    if (v.valid) pred_png = render_png(ctx.bridge, *pred, data);
    const Visual vis = compare_images(pred_png, gold_png, m, out);
    out.scores["psnr"] = vis.psnr;
    out.scores["ms_ssim"] = vis.ms_ssim;
  } else {
    out.scores["psnr"] = nullptr;
    out.scores["ms_ssim"] = nullptr;
  }
  if (ctx.embedder && ctx.bridge) {
    try {
      out.scores["clip"] = v.valid ? number_or_null(clip_similarity(pred_png, gold_png, ctx.embedder)) : OJson(0.0);
    } catch (const EmbedderUnavailable& e) {
      out.scores["clip"] = nullptr;
      out.notes.push_back(std::string("clip skipped: ") + e.what());
    }
  } else {
    out.scores["clip"] = nullptr;
  }
}

void score_table(const std::optional<std::string>& pred, const std::string& gold_csv, const MetricConfig& m,
                 SampleScores& out) {
  if (!pred) {
    for (const char* k : {"rnss", "table_s", "f1_k", "acc_cell"}) out.scores[k] = 0.0;
    return;
  }
  out.scores["rnss"] = rnss(table_numbers(*pred), table_numbers(gold_csv), m.rnss_epsilon);
  const TableScore t = table_score(*pred, gold_csv, m);
  out.scores["table_s"] = t.s;
  out.scores["f1_k"] = t.f1_k;
  out.scores["acc_cell"] = t.acc_cell;
}

SampleScores score_answer(const std::string& id, const std::optional<std::string>& pred, const std::string& gold,
                          const MetricConfig& m, std::vector<std::string> notes) {
  SampleScores s;
  s.id = id;
  s.notes = std::move(notes);
  if (m.exclude_unanswerable && is_unanswerable(gold)) {
    s.scores["em"] = nullptr;
    s.notes.push_back("unanswerable gold excluded");
  } else {
    s.scores["em"] = pred ? em(*pred, gold, m) : 0;
  }
  return s;
}

std::vector<const LifecycleSample*> selected(const std::vector<LifecycleSample>& dataset, const HarnessConfig& cfg) {
  std::vector<const LifecycleSample*> out;
  for (const auto& s : dataset)
    if (!cfg.test_split_only || s.split == Split::test) out.push_back(&s);
  std::stable_sort(out.begin(), out.end(), [](const auto* a, const auto* b) { return a->id < b->id; });
  return out;
}

OJson settings(const EvalContext& ctx, const HarnessConfig& cfg, std::size_t n) {
  OJson j;
  j["model"] = ctx.model ? ctx.model->name() : "none";
  j["renderer"] = ctx.bridge ? ctx.bridge->describe() : "none";
  j["embedder"] = ctx.embedder ? ctx.embedder->describe() : "none";
  j["split"] = cfg.test_split_only ? "test" : "all";
  j["data_spec"] = cfg.data_task_full_spec ? "full" : "stripped";
  j["evaluated_samples"] = n;
  j["metrics"] = cfg.metrics.to_json();
  return j;
}

void require_model(const EvalContext& ctx, const HarnessConfig& cfg) {
  if (!ctx.model) throw ConfigError("no model endpoint configured");
  cfg.validate();
}

std::string gold_full_png(const LifecycleSample& s, const EvalContext& ctx) {
  return ctx.bridge ? render_png(ctx.bridge, normalize_spec(s.spec), s.raw_table) : std::string();
}

}  // namespace

MetricReport run_task(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset, Task task,
                      const HarnessConfig& cfg) {
  require_model(ctx, cfg);
  const auto items = selected(dataset, cfg);
  const MetricConfig& m = cfg.metrics;
  ChartModel& model = *ctx.model;
  std::vector<std::vector<SampleScores>> rows(items.size());

  parallel_for(items.size(), cfg.concurrency, [&](std::size_t i) {
    const LifecycleSample& s = *items[i];
    SampleScores out;
    out.id = s.id;
    switch (task) {
      case Task::nl2chart: {
        const auto reply = call_model("nl2chart", out, [&] { return model.nl2chart(table_info(s.raw_table), s.nl_query); });
        score_spec(reply ? std::optional(reply->extracted) : std::nullopt, normalize_spec(s.spec), s.raw_table,
                   gold_full_png(s, ctx), ctx, m, out);
        break;
      }
      case Task::schema: {
        const ChartImage img = sample_image(s, ctx);
        const auto reply = call_model("schema", out, [&] { return model.parse_schema(img, table_info(s.raw_table)); });
        const RenderInput in = stripped_context(s.spec, s.raw_table);
        score_spec(reply ? std::optional(reply->extracted) : std::nullopt, in.spec_text, in.data, img.png, ctx, m, out);
        break;
      }
      case Task::data: {
        const ChartImage img = sample_image(s, ctx);
        const std::string spec_text = normalize_spec(cfg.data_task_full_spec ? s.spec : s.stripped_spec);
        const auto reply = call_model("data", out, [&] { return model.parse_data(img, spec_text); });
        score_table(reply ? std::optional(reply->extracted) : std::nullopt, serialize_csv(s.vis_table), m, out);
        break;
      }
      case Task::qa: {
        const ChartImage img = sample_image(s, ctx);
        for (std::size_t k = 0; k < s.qa.size(); ++k) {
          SampleScores tmp;
          const auto reply = call_model("qa", tmp, [&] { return model.answer_qa(img, s.qa[k].question); });
          rows[i].push_back(score_answer(s.id + "#" + std::to_string(k),
                                         reply ? std::optional(reply->extracted) : std::nullopt, s.qa[k].answer, m,
                                         std::move(tmp.notes)));
        }
        return;
      }
    }
    rows[i].push_back(std::move(out));
  });

  MetricReport report;
  report.task = std::string(to_string(task));
  report.settings = settings(ctx, cfg, items.size());
  for (auto& r : rows)
    for (auto& s : r) report.samples.push_back(std::move(s));
  return report;
}

MetricReport run_vql(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset, const HarnessConfig& cfg) {
  require_model(ctx, cfg);
  const auto items = selected(dataset, cfg);
  std::vector<SampleScores> rows(items.size());
  parallel_for(items.size(), cfg.concurrency, [&](std::size_t i) {
    const LifecycleSample& s = *items[i];
    SampleScores& out = rows[i];
    out.id = s.id;
    const auto reply = call_model("vql", out, [&] { return ctx.model->nl2vql(table_info(s.raw_table), s.nl_query); });
    const auto norm = [](std::string_view v) { return text::to_lower(text::collapse_whitespace(v)); };
    out.scores["vql_match"] = reply && norm(reply->extracted) == norm(spec_to_vql(s.spec)) ? 1.0 : 0.0;
  });
  MetricReport report;
  report.task = "vql";
  report.settings = settings(ctx, cfg, items.size());
  report.samples = std::move(rows);
  return report;
}

std::optional<double> ConsistencyReport::closure_rate() const {
  std::size_t defined = 0, closed = 0;
  for (const auto& [id, c] : closure)
    if (c) ++defined, closed += *c ? 1 : 0;
  if (defined == 0) return std::nullopt;
  return static_cast<double>(closed) / static_cast<double>(defined);
}

double ConsistencyReport::valid_rate() const { return nl2chart.mean("valid").value_or(0.0); }

OJson ConsistencyReport::to_json() const {
  OJson j;
  j["task"] = "cycle";
  auto& stages = j["stages"];
  stages["nl2chart"] = nl2chart.to_json();
  stages["schema"] = schema.to_json();
  stages["data"] = data.to_json();
  stages["qa"] = qa.to_json();
  auto& c = j["cycle"];
  c["valid_rate"] = valid_rate();
  const auto rate = closure_rate();
  c["closure"] = number_or_null(rate);
  std::size_t defined = 0;
  auto& rows = c["samples"] = OJson::array();
  for (const auto& [id, v] : closure) {
    defined += v ? 1 : 0;
    rows.push_back({{"id", id}, {"closure", v ? OJson(*v ? 1 : 0) : OJson()}});
  }
  c["closure_defined"] = defined;
  return j;
}

ConsistencyReport run_cycle(const EvalContext& ctx, const std::vector<LifecycleSample>& dataset,
                            const HarnessConfig& cfg) {
  require_model(ctx, cfg);
  const auto items = selected(dataset, cfg);
  const MetricConfig& m = cfg.metrics;
  ChartModel& model = *ctx.model;

  struct Row {
    SampleScores gen, schema, data;
    std::vector<SampleScores> qa;
    std::optional<bool> closure;
  };
  std::vector<Row> rows(items.size());

  parallel_for(items.size(), cfg.concurrency, [&](std::size_t i) {
    const LifecycleSample& s = *items[i];
    Row& row = rows[i];
    row.gen.id = row.schema.id = row.data.id = s.id;

    const auto gen = call_model("nl2chart", row.gen, [&] { return model.nl2chart(table_info(s.raw_table), s.nl_query); });
    const RenderInput gold_in = stripped_context(s.spec, s.raw_table);
    score_spec(gen ? std::optional(gen->extracted) : std::nullopt, normalize_spec(s.spec), s.raw_table,
               gold_full_png(s, ctx), ctx, m, row.gen);

    // The generated chart, executed; nullopt when the generation is invalid.
    std::optional<ChartSpec> gen_spec;
    VisTable gen_vis;
    if (row.gen.scores["valid"] == 1.0) {
      try {
        gen_spec = parse_spec(gen->extracted);
        gen_vis = execute_transforms(*gen_spec, s.raw_table);
      } catch (const Error& e) {
        gen_spec.reset();
        row.gen.scores["valid"] = 0.0;
        row.gen.notes.push_back("generated spec not executable: " + std::string(e.what()));
      }
    }

    auto fail_all = [&] {
      auto& sc = row.schema.scores;
      sc["rouge_l_recall"] = 0.0;
      sc["valid"] = 0.0;
      sc["psnr"] = ctx.bridge ? OJson(0.0) : OJson();
      sc["ms_ssim"] = ctx.bridge ? OJson(0.0) : OJson();
      sc["clip"] = ctx.bridge && ctx.embedder ? OJson(0.0) : OJson();
      row.schema.notes.push_back("generation invalid");
      score_table(std::nullopt, {}, m, row.data);
      row.data.notes.push_back("generation invalid");
      for (std::size_t k = 0; k < s.qa.size(); ++k)
        row.qa.push_back(score_answer(s.id + "#" + std::to_string(k), std::nullopt, s.qa[k].answer, m,
                                      {"generation invalid"}));
    };
    if (!gen_spec) {
      fail_all();
      return;
    }

    ChartImage img;
    img.content_key = content_key(*gen_spec, s.raw_table);
    const RenderInput gen_in = stripped_context(*gen_spec, s.raw_table);
    if (ctx.bridge) img.png = render_png(ctx.bridge, gen_in.spec_text, gen_in.data);

    const auto schema = call_model("schema", row.schema, [&] { return model.parse_schema(img, table_info(s.raw_table)); });
    const std::optional<std::string> schema_text = schema ? std::optional(schema->extracted) : std::nullopt;
    score_spec(schema_text, gold_in.spec_text, gold_in.data, ctx.bridge ? sample_image(s, ctx).png : std::string(), ctx,
               m, row.schema);
    const double own_rouge = schema_text ? spec_rouge(*schema_text, gen_in.spec_text, m.rouge_tokens).value_or(0.0) : 0.0;
    row.schema.scores["closure_rouge"] = own_rouge;

    const std::string data_spec = cfg.data_task_full_spec ? normalize_spec(*gen_spec) : gen_in.spec_text;
    const auto data = call_model("data", row.data, [&] { return model.parse_data(img, data_spec); });
    const std::optional<std::string> data_text = data ? std::optional(data->extracted) : std::nullopt;
    score_table(data_text, serialize_csv(s.vis_table), m, row.data);
    const double own_table = data_text ? table_score(*data_text, serialize_csv(gen_vis), m).s : 0.0;
    row.data.scores["closure_table_s"] = own_table;

    row.closure = own_rouge >= cfg.closure_rouge_threshold && own_table >= cfg.closure_table_threshold;

    for (std::size_t k = 0; k < s.qa.size(); ++k) {
      SampleScores tmp;
      const auto reply = call_model("qa", tmp, [&] { return model.answer_qa(img, s.qa[k].question); });
      row.qa.push_back(score_answer(s.id + "#" + std::to_string(k), reply ? std::optional(reply->extracted) : std::nullopt,
                                    s.qa[k].answer, m, std::move(tmp.notes)));
    }
  });

  ConsistencyReport report;
  const std::pair<MetricReport*, Task> stages[] = {
      {&report.nl2chart, Task::nl2chart}, {&report.schema, Task::schema}, {&report.data, Task::data}, {&report.qa, Task::qa}};
  for (const auto& [r, t] : stages) {
    r->task = "cycle/" + std::string(to_string(t));
    r->settings = settings(ctx, cfg, items.size());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    report.nl2chart.samples.push_back(std::move(rows[i].gen));
    report.schema.samples.push_back(std::move(rows[i].schema));
    report.data.samples.push_back(std::move(rows[i].data));
    for (auto& q : rows[i].qa) report.qa.samples.push_back(std::move(q));
    report.closure.emplace_back(items[i]->id, rows[i].closure);
  }
  return report;
}

TaskMixSampler::TaskMixSampler(std::array<double, 4> weights, std::uint64_t seed) : rng_(seed) {
  double total = 0;
  for (double w : weights) {
    if (!(w >= 0) || !std::isfinite(w)) throw ConfigError("task weights must be finite and non-negative");
    total += w;
  }
  if (total <= 0) throw ConfigError("task weights must not all be zero");
  double acc = 0;
  for (std::size_t i = 0; i < 4; ++i) cumulative_[i] = (acc += weights[i]) / total;
  // Rounding must not leave a gap below 1 after the last positive weight.
  for (std::size_t i = 4; i-- > 0;)
    if (weights[i] > 0) {
      cumulative_[i] = 1.0;
      break;
    }
}

Task TaskMixSampler::next() {
  const double u = rng_.uniform();
  for (std::size_t i = 0; i < 4; ++i)
    if (u < cumulative_[i]) return static_cast<Task>(i);
  return Task::qa;
}

std::vector<Task> TaskMixSampler::take(std::size_t n) {
  std::vector<Task> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(next());
  return out;
}

}  // namespace chartcycle
