#include "chartcycle/config.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/util.hpp"

#include <filesystem>
#include <set>

namespace chartcycle {

using OJson = nlohmann::ordered_json;

namespace {

void only_keys(const nlohmann::json& j, const std::string& where, const std::set<std::string>& known) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

ModelEndpoint oracle_endpoint() {
  ModelEndpoint e;
  e.name = "oracle";
  e.kind = "oracle";
  return e;
}

}  // namespace

AppConfig::AppConfig() { endpoints.emplace("oracle", oracle_endpoint()); }

AppConfig AppConfig::from_json(const nlohmann::json& j, const std::string& base_dir) {
  only_keys(j, "config", {"metrics", "endpoints", "renderer", "embedder", "facet", "qa", "splits", "harness"});
  AppConfig c;
  if (j.contains("metrics")) c.metrics = MetricConfig::from_json(j["metrics"]);

  if (j.contains("endpoints")) {
    if (!j["endpoints"].is_object()) throw ConfigError("endpoints must be an object");
    for (const auto& [name, e] : j["endpoints"].items()) c.endpoints[name] = ModelEndpoint::from_json(name, e);
  }

  if (j.contains("renderer")) {
    const auto& r = j["renderer"];
    only_keys(r, "renderer", {"kind", "command", "url", "scale", "timeout_s", "width"});
    read(r, "kind", c.renderer.kind, "renderer");
    read(r, "command", c.renderer.command, "renderer");
    read(r, "url", c.renderer.url, "renderer");
    read(r, "scale", c.renderer.options.scale, "renderer");
    double timeout_s = static_cast<double>(c.renderer.options.timeout.count()) / 1000.0;
    read(r, "timeout_s", timeout_s, "renderer");
    c.renderer.options.timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
    read(r, "width", c.renderer.width, "renderer");
    if (c.renderer.kind != "none" && c.renderer.kind != "subprocess" && c.renderer.kind != "http")
      throw ConfigError("renderer.kind must be none, subprocess or http");
    if (c.renderer.kind == "subprocess" && c.renderer.command.empty())
      throw ConfigError("renderer.command is required for a subprocess renderer");
    if (c.renderer.kind == "http" && c.renderer.url.empty()) throw ConfigError("renderer.url is required");
    if (!(c.renderer.options.scale > 0) || c.renderer.options.timeout.count() <= 0 || c.renderer.width == 0)
      throw ConfigError("renderer scale, timeout and width must be positive");
    // Paths like "../tools/x" are relative to the config file; the program
    // itself always is, later arguments only when the file exists there.
    for (std::size_t i = 0; i < c.renderer.command.size() && !base_dir.empty(); ++i) {
      const std::filesystem::path arg = c.renderer.command[i];
      if (!arg.is_relative() || !arg.has_parent_path()) continue;
      const auto resolved = std::filesystem::path(base_dir) / arg;
      if (i == 0 || std::filesystem::exists(resolved)) c.renderer.command[i] = resolved.string();
    }
  }

  if (j.contains("embedder")) {
    only_keys(j["embedder"], "embedder", {"url"});
    read(j["embedder"], "url", c.embedder_url, "embedder");
  }

  if (j.contains("facet")) {
    const auto& f = j["facet"];
    only_keys(f, "facet", {"enabled", "fraction", "max_cardinality", "row_axis_x_cardinality"});
    read(f, "enabled", c.bench.augment, "facet");
    read(f, "fraction", c.bench.facet_fraction, "facet");
    read(f, "max_cardinality", c.bench.facet.max_cardinality, "facet");
    read(f, "row_axis_x_cardinality", c.bench.facet.row_axis_x_cardinality, "facet");
  }

  if (j.contains("qa")) {
    const auto& q = j["qa"];
    only_keys(q, "qa", {"n", "kinds"});
    read(q, "n", c.bench.qa.n, "qa");
    std::vector<std::string> kinds;
    read(q, "kinds", kinds, "qa");
    for (const auto& k : kinds) {
      const auto kind = qa_kind_from_string(k);
      if (!kind) throw ConfigError("qa.kinds: unknown kind '" + k + "'");
      c.bench.qa.kinds.insert(*kind);
    }
  }

  if (j.contains("splits")) {
    only_keys(j["splits"], "splits", {"train", "val"});
    read(j["splits"], "train", c.bench.train_fraction, "splits");
    read(j["splits"], "val", c.bench.val_fraction, "splits");
  }

  if (j.contains("harness")) {
    const auto& h = j["harness"];
    only_keys(h, "harness", {"concurrency", "test_split_only", "data_spec", "closure_rouge_threshold",
                             "closure_table_threshold"});
    read(h, "concurrency", c.harness.concurrency, "harness");
    read(h, "test_split_only", c.harness.test_split_only, "harness");
    std::string data_spec = "stripped";
    read(h, "data_spec", data_spec, "harness");
    if (data_spec != "stripped" && data_spec != "full") throw ConfigError("harness.data_spec must be stripped or full");
    c.harness.data_task_full_spec = data_spec == "full";
    read(h, "closure_rouge_threshold", c.harness.closure_rouge_threshold, "harness");
    read(h, "closure_table_threshold", c.harness.closure_table_threshold, "harness");
  }

  c.harness.metrics = c.metrics;
  c.bench.validate();
  c.harness.validate();
  return c;
}

OJson AppConfig::to_json() const {
  OJson j;
  j["metrics"] = metrics.to_json();
  auto& eps = j["endpoints"] = OJson::object();
  for (const auto& [name, e] : endpoints) {
    OJson o{{"kind", e.kind}};
    if (e.kind != "oracle") {
      o["base_url"] = e.base_url;
      o["model"] = e.model;
      o["api_key_env"] = e.api_key_env;
      o["max_tokens"] = e.max_output_tokens;
      o["temperature"] = e.temperature;
      o["top_p"] = e.top_p;
      o["max_retries"] = e.max_retries;
      o["concurrency"] = e.concurrency;
    }
    eps[name] = o;
  }
  j["renderer"] = {{"kind", renderer.kind}, {"scale", renderer.options.scale},
                   {"timeout_s", static_cast<double>(renderer.options.timeout.count()) / 1000.0}, {"width", renderer.width}};
  if (!renderer.command.empty()) j["renderer"]["command"] = renderer.command;
  if (!renderer.url.empty()) j["renderer"]["url"] = renderer.url;
  j["facet"] = {{"enabled", bench.augment}, {"fraction", bench.facet_fraction},
                {"max_cardinality", bench.facet.max_cardinality},
                {"row_axis_x_cardinality", bench.facet.row_axis_x_cardinality}};
  auto kinds = OJson::array();
  for (auto k : bench.qa.kinds) kinds.push_back(to_string(k));
  j["qa"] = {{"n", bench.qa.n}, {"kinds", kinds}};
  j["splits"] = {{"train", bench.train_fraction}, {"val", bench.val_fraction}};
  j["harness"] = {{"concurrency", harness.concurrency}, {"test_split_only", harness.test_split_only},
                  {"data_spec", harness.data_task_full_spec ? "full" : "stripped"},
                  {"closure_rouge_threshold", harness.closure_rouge_threshold},
                  {"closure_table_threshold", harness.closure_table_threshold}};
  return j;
}

AppConfig load_config(const std::string& path) {
  if (path.empty()) return AppConfig{};
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::exception& e) {
    throw ConfigError("cannot read config " + path + ": " + e.what());
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not JSON: " + e.what());
  }
  return AppConfig::from_json(j, std::filesystem::path(path).parent_path().string());
}

std::shared_ptr<Renderer> make_renderer(const RendererConfig& cfg) {
  if (cfg.kind == "subprocess") return std::make_shared<SubprocessRenderer>(cfg.command);
  if (cfg.kind == "http") return std::make_shared<HttpRenderer>(cfg.url);
  return nullptr;
}

}  // namespace chartcycle
