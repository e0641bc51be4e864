// chartcycle: build benchmarks, evaluate chart models, score files.
// Exit status: 0 success, 1 evaluation errors, 2 configuration errors.

#include "chartcycle/config.hpp"
#include "chartcycle/error.hpp"
#include "chartcycle/harness.hpp"
#include "chartcycle/image.hpp"
#include "chartcycle/text.hpp"
#include "chartcycle/util.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace chartcycle;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0;
constexpr int kEvalError = 1;
constexpr int kConfigError = 2;

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string endpoint;
  std::size_t concurrency = 0;
};

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  if (v == std::floor(v) && std::fabs(v) < 1e15) std::snprintf(buf, sizeof buf, "%.1f", v);
  else std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string fmt_json(const nlohmann::ordered_json& v) {
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  return v.is_number() ? fmt(v.get<double>()) : "-";
}

AppConfig load(const Globals& g) {
  AppConfig cfg = load_config(g.config_path);
  if (g.concurrency) cfg.harness.concurrency = g.concurrency;
  return cfg;
}

std::vector<LifecycleSample> load_dataset(const std::string& path) {
  if (!fs::exists(path)) throw ConfigError("dataset not found: " + path);
  return dataset_from_jsonl(read_file(path));
}

// Renderer, model and embedder owned for one command.
struct Runtime {
  std::shared_ptr<Renderer> renderer;
  std::unique_ptr<RenderBridge> bridge;
  std::unique_ptr<ChartModel> model;
  std::unique_ptr<ImageEmbedder> embedder;

  EvalContext context(const std::string& image_dir) {
    return {model.get(), bridge.get(), embedder.get(), image_dir};
  }
};

void attach_renderer(Runtime& rt, const AppConfig& cfg) {
  rt.renderer = make_renderer(cfg.renderer);
  if (rt.renderer) rt.bridge = std::make_unique<RenderBridge>(rt.renderer, cfg.renderer.options, cfg.renderer.width);
}

void attach_model(Runtime& rt, const AppConfig& cfg, const Globals& g, const std::vector<LifecycleSample>& dataset) {
  if (g.endpoint.empty()) throw ConfigError("no endpoint selected; pass --endpoint <name>");
  const auto it = cfg.endpoints.find(g.endpoint);
  if (it == cfg.endpoints.end()) throw ConfigError("endpoint '" + g.endpoint + "' is not configured");
  if (it->second.kind == "oracle") rt.model = std::make_unique<OracleChartModel>(dataset);
  else rt.model = std::make_unique<RemoteChartModel>(it->second, std::make_shared<HttpTransport>());
  if (!cfg.embedder_url.empty())
    rt.embedder = std::make_unique<HttpImageEmbedder>(cfg.embedder_url, std::make_shared<HttpTransport>());
}

void write_or_print(const nlohmann::ordered_json& j, const std::string& out) {
  if (out.empty()) {
    std::cout << j.dump(2) << "\n";
  } else {
    write_file(out, j.dump(2) + "\n");
  }
}

void print_aggregate(const std::string& title, const nlohmann::ordered_json& agg) {
  std::cout << title << "\n";
  for (const auto& [k, v] : agg.items()) std::cout << "  " << k << ": " << fmt_json(v) << "\n";
}

int cmd_build(const Globals& g, const std::string& corpus, const std::string& out_dir, bool no_render) {
  const AppConfig cfg = load(g);
  Runtime rt;
  if (!no_render) attach_renderer(rt, cfg);
  const auto records = load_corpus(corpus);
  const BenchResult r = build_bench(records, cfg.bench, g.seed, rt.bridge.get());
  fs::create_directories(fs::path(out_dir) / "images");
  const std::string jsonl = dataset_to_jsonl(r.samples);
  write_file((fs::path(out_dir) / "dataset.jsonl").string(), jsonl);
  for (const auto& [ref, png] : r.images) write_file((fs::path(out_dir) / ref).string(), png);
  std::string excluded;
  for (const auto& e : r.excluded) excluded += nlohmann::ordered_json{{"id", e.id}, {"reason", e.reason}}.dump() + "\n";
  write_file((fs::path(out_dir) / "excluded.jsonl").string(), excluded);

  std::array<std::array<std::size_t, 2>, 3> counts{};
  for (const auto& s : r.samples) ++counts[static_cast<std::size_t>(s.split)][s.faceted ? 1 : 0];
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& e : r.excluded) std::cerr << "excluded " << e.id << ": " << e.reason << "\n";
  std::cout << "samples " << r.samples.size() << " excluded " << r.excluded.size() << " images " << r.images.size() << "\n";
  for (std::size_t s = 0; s < 3; ++s)
    std::cout << to_string(static_cast<Split>(s)) << " " << counts[s][0] + counts[s][1] << " (faceted " << counts[s][1]
              << ")\n";
  std::cout << "dataset sha256 " << sha256_hex(jsonl) << "\n";
  return kOk;
}

int cmd_lint(const std::string& dataset) {
  const auto samples = load_dataset(dataset);
  const auto issues = lint_dataset(samples);
  for (const auto& i : issues) std::cout << i.id << ": " << i.message << "\n";
  std::cout << samples.size() << " samples, " << issues.size() << " issues\n";
  return issues.empty() ? kOk : kEvalError;
}

int cmd_render(const Globals& g, const std::string& spec_path, const std::string& data_path, const std::string& out) {
  const AppConfig cfg = load(g);
  Runtime rt;
  attach_renderer(rt, cfg);
  if (!rt.bridge) throw ConfigError("no renderer configured");
  const RenderResult r = rt.bridge->render(read_file(spec_path), parse_csv(read_file(data_path)));
  if (!r.ok()) {
    std::cerr << to_string(r.status) << ": " << r.reason << "\n";
    return kEvalError;
  }
  write_file(out, r.png);
  std::cout << out << " " << r.png.size() << " bytes\n";
  return kOk;
}

int cmd_gen_qa(const Globals& g, const std::string& spec_path, const std::string& data_path, std::size_t n,
               bool paraphrase) {
  const AppConfig cfg = load(g);
  const ChartSpec spec = parse_spec(read_file(spec_path));
  const Table vis = execute_transforms(spec, parse_csv(read_file(data_path)));
  QAOptions opts = cfg.bench.qa;
  if (n) opts.n = n;
  auto pairs = generate_qa(spec, vis, g.seed, opts);
  std::unique_ptr<RemoteChartModel> rewriter;
  if (paraphrase) {
    const auto it = cfg.endpoints.find(g.endpoint);
    if (g.endpoint.empty() || it == cfg.endpoints.end() || it->second.kind != "openai")
      throw ConfigError("--paraphrase needs a remote --endpoint");
    rewriter = std::make_unique<RemoteChartModel>(it->second, std::make_shared<HttpTransport>());
  }
  for (auto& q : pairs) {
    if (rewriter) {
      std::vector<std::string> warnings;
      q = paraphrase_hook(q, [&](const std::string& s) { return rewriter->rewrite_question(s); }, &warnings);
      for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    }
    std::cout << qa_to_json(q).dump() << "\n";
  }
  return kOk;
}

int cmd_eval(const Globals& g, const std::string& task_name, const std::string& dataset_path, const std::string& out) {
  const AppConfig cfg = load(g);
  const auto dataset = load_dataset(dataset_path);
  Runtime rt;
  attach_model(rt, cfg, g, dataset);
  attach_renderer(rt, cfg);
  const EvalContext ctx = rt.context(fs::path(dataset_path).parent_path().string());
  MetricReport report;
  if (task_name == "vql") {
    report = run_vql(ctx, dataset, cfg.harness);
  } else {
    const auto task = task_from_string(task_name);
    if (!task) throw ConfigError("unknown task '" + task_name + "'");
    report = run_task(ctx, dataset, *task, cfg.harness);
  }
  const auto j = report.to_json();
  if (!out.empty()) write_or_print(j, out);
  print_aggregate(report.task, j["aggregate"]);
  if (task_name == "vql") std::cout << "  vql_match: " << fmt(report.mean("vql_match").value_or(0.0)) << "\n";
  return kOk;
}

int cmd_cycle(const Globals& g, const std::string& dataset_path, const std::string& out) {
  const AppConfig cfg = load(g);
  const auto dataset = load_dataset(dataset_path);
  Runtime rt;
  attach_model(rt, cfg, g, dataset);
  attach_renderer(rt, cfg);
  const ConsistencyReport report = run_cycle(rt.context(fs::path(dataset_path).parent_path().string()), dataset, cfg.harness);
  const auto j = report.to_json();
  if (!out.empty()) write_or_print(j, out);
  for (const auto* r : {&report.nl2chart, &report.schema, &report.data, &report.qa}) print_aggregate(r->task, r->aggregate());
  std::cout << "cycle\n  valid_rate: " << fmt(report.valid_rate()) << "\n  closure: "
            << (report.closure_rate() ? fmt(*report.closure_rate()) : "undefined") << "\n";
  return kOk;
}

std::vector<std::string> lines_of(const std::string& path) {
  std::vector<std::string> out;
  for (const auto& l : text::split_lines(read_file(path))) out.emplace_back(l);
  while (!out.empty() && text::trim(out.back()).empty()) out.pop_back();
  return out;
}

int cmd_score(const Globals& g, const std::string& metric, const std::string& pred, const std::string& gold) {
  const AppConfig cfg = load(g);
  const MetricConfig& m = cfg.metrics;
  if (metric == "table") {
    const TableScore t = table_score(read_file(pred), read_file(gold), m);
    std::cout << "s=" << fmt(t.s) << " f1_k=" << fmt(t.f1_k) << " acc_cell=" << fmt(t.acc_cell) << "\n";
  } else if (metric == "rnss") {
    std::cout << "rnss=" << fmt(rnss(table_numbers(read_file(pred)), table_numbers(read_file(gold)), m.rnss_epsilon)) << "\n";
  } else if (metric == "em") {
    const auto p = lines_of(pred), q = lines_of(gold);
    if (p.size() != q.size()) throw ConfigError("em: prediction and gold files need the same number of lines");
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < p.size(); ++i) pairs.emplace_back(p[i], q[i]);
    const EMResult r = avg_em(pairs, m);
    std::cout << "em=" << fmt(r.score) << " evaluated=" << r.evaluated << " excluded=" << r.excluded << "\n";
  } else if (metric == "rouge") {
    const auto r = spec_rouge(read_file(pred), read_file(gold), m.rouge_tokens);
    std::cout << "rouge_l_recall=" << (r ? fmt(*r) : "undefined") << "\n";
  } else if (metric == "psnr" || metric == "ms_ssim") {
    const Image a = decode_png(read_file(pred)), b = decode_png(read_file(gold));
    if (metric == "psnr") std::cout << "psnr=" << fmt(psnr(&a, &b, m.psnr_cap_db)) << "\n";
    else std::cout << "ms_ssim=" << fmt(ms_ssim(&a, &b)) << "\n";
  } else if (metric == "valid") {
    Runtime rt;
    attach_renderer(rt, cfg);
    const ValidityResult v = validity(read_file(pred), parse_csv(read_file(gold)), rt.bridge.get());
    std::cout << "valid=" << (v.valid ? 1 : 0) << " mode=" << v.mode << (v.reason.empty() ? "" : " reason=" + v.reason) << "\n";
  } else {
    throw ConfigError("unknown metric '" + metric + "'");
  }
  return kOk;
}

int cmd_report(const std::string& in) {
  const auto j = nlohmann::ordered_json::parse(read_file(in));
  if (j.contains("stages")) {
    for (const auto& [name, stage] : j["stages"].items()) print_aggregate(stage.value("task", name), stage["aggregate"]);
    const auto& c = j["cycle"];
    std::cout << "cycle\n  valid_rate: " << fmt_json(c["valid_rate"]) << "\n  closure: " << fmt_json(c["closure"])
              << " over " << c.value("closure_defined", 0) << " samples\n";
  } else if (j.contains("aggregate")) {
    print_aggregate(j.value("task", "report"), j["aggregate"]);
  } else {
    throw ConfigError(in + " is not a report");
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Chart lifecycle benchmark builder and evaluator."};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "JSON config file");
  app.add_option("--seed", g.seed, "Seed for shuffles and QA sampling");
  app.add_option("--endpoint", g.endpoint, "Model endpoint name from the config");
  app.add_option("--concurrency", g.concurrency, "Parallel samples")->check(CLI::PositiveNumber);

  std::string corpus = "data/mini_corpus", out_dir = "bench", dataset, out, spec, data, task, metric, pred, gold, report_in;
  std::size_t n = 0;
  bool no_render = false, paraphrase = false;

  auto* build = app.add_subcommand("build-bench", "Build a dataset from a corpus");
  build->add_option("--corpus", corpus, "Corpus directory or corpus.jsonl");
  build->add_option("--out", out_dir, "Output directory");
  build->add_flag("--no-render", no_render, "Skip rendering even when a renderer is configured");

  auto* lint = app.add_subcommand("lint-bench", "Check stored dataset invariants");
  lint->add_option("--dataset", dataset, "dataset.jsonl")->required();

  auto* render = app.add_subcommand("render", "Render one spec with the configured renderer");
  render->add_option("--spec", spec, "Spec document")->required();
  render->add_option("--data", data, "CSV table")->required();
  render->add_option("--out", out, "PNG path")->required();

  auto* genqa = app.add_subcommand("gen-qa", "Generate QA pairs for one chart");
  genqa->add_option("--spec", spec, "Spec document")->required();
  genqa->add_option("--data", data, "Raw CSV table")->required();
  genqa->add_option("--n", n, "Pairs to sample");
  genqa->add_flag("--paraphrase", paraphrase, "Reword questions with --endpoint");

  auto* eval = app.add_subcommand("eval", "Evaluate a model on one task");
  eval->add_option("--task", task, "nl2chart | schema | data | qa | vql")->required();
  eval->add_option("--dataset", dataset, "dataset.jsonl")->required();
  eval->add_option("--out", out, "Write the full report here");

  auto* cycle = app.add_subcommand("run-cycle", "Generate, render, parse back and answer");
  cycle->add_option("--dataset", dataset, "dataset.jsonl")->required();
  cycle->add_option("--out", out, "Write the full report here");

  auto* score = app.add_subcommand("score-files", "Score a prediction file against a gold file");
  score->add_option("--metric", metric, "table | rnss | em | rouge | psnr | ms_ssim | valid")->required();
  score->add_option("--pred", pred, "Prediction file")->required();
  score->add_option("--gold", gold, "Gold file (the data CSV for valid)")->required();

  auto* report = app.add_subcommand("report", "Print the aggregate block of a report");
  report->add_option("--in", report_in, "Report JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    load(g);  // a bad --config fails every command, even those that ignore it
    if (*build) return cmd_build(g, corpus, out_dir, no_render);
    if (*lint) return cmd_lint(dataset);
    if (*render) return cmd_render(g, spec, data, out);
    if (*genqa) return cmd_gen_qa(g, spec, data, n, paraphrase);
    if (*eval) return cmd_eval(g, task, dataset, out);
    if (*cycle) return cmd_cycle(g, dataset, out);
    if (*score) return cmd_score(g, metric, pred, gold);
    if (*report) return cmd_report(report_in);
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const RendererUnavailable& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEvalError;
  }
  return kConfigError;
}
