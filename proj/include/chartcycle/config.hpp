#pragma once

// One JSON config file for metrics, endpoints, renderer, benchmark
// construction and the harness. Unknown keys are errors.

#include "chartcycle/harness.hpp"

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace chartcycle {

struct RendererConfig {
  std::string kind = "none";          // none | subprocess | http
  std::vector<std::string> command;  // subprocess argv; "{scale}" is substituted
  std::string url;                   // http
  RenderOptions options;
  std::size_t width = 4;
};

struct AppConfig {
  MetricConfig metrics;
  // Always holds "oracle" unless the file redefines it.
  std::map<std::string, ModelEndpoint> endpoints;
  RendererConfig renderer;
  std::string embedder_url;
  BenchConfig bench;
  HarnessConfig harness;

  AppConfig();
  /// `base_dir` resolves relative renderer commands. Throws ConfigError.
  static AppConfig from_json(const nlohmann::json& j, const std::string& base_dir = "");
  nlohmann::ordered_json to_json() const;
};

/// Empty path gives the defaults. Throws ConfigError.
AppConfig load_config(const std::string& path);

/// Null when the renderer kind is "none".
std::shared_ptr<Renderer> make_renderer(const RendererConfig& cfg);

}  // namespace chartcycle
