#include "chartcycle/config.hpp"
#include "chartcycle/error.hpp"
#include "chartcycle/util.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace chartcycle;
using nlohmann::json;

TEST(Config, DefaultsWithoutAFile) {
  const AppConfig c = load_config("");
  EXPECT_EQ(c.renderer.kind, "none");
  EXPECT_EQ(c.endpoints.count("oracle"), 1u);
  EXPECT_EQ(c.endpoints.at("oracle").kind, "oracle");
  EXPECT_DOUBLE_EQ(c.bench.facet_fraction, 0.174);
  EXPECT_DOUBLE_EQ(c.harness.closure_rouge_threshold, 0.9);
  EXPECT_TRUE(c.harness.test_split_only);
  EXPECT_EQ(make_renderer(c.renderer), nullptr);
}

TEST(Config, ReadsEverySection) {
  const json j = json::parse(R"({
    "metrics": {"em_rel_tol": 0.02},
    "endpoints": {"m": {"kind": "openai", "base_url": "http://localhost:9/v1", "model": "x", "api_key_env": "K",
                        "max_retries": 1, "timeout_s": 5}},
    "renderer": {"kind": "subprocess", "command": ["/bin/true"], "scale": 1.5, "timeout_s": 2, "width": 2},
    "embedder": {"url": "http://localhost:9/embed"},
    "facet": {"enabled": false, "fraction": 0.3},
    "qa": {"n": 5, "kinds": ["extremum"]},
    "splits": {"train": 0.7, "val": 0.2},
    "harness": {"concurrency": 2, "test_split_only": false, "data_spec": "full", "closure_table_threshold": 0.8}
  })");
  const AppConfig c = AppConfig::from_json(j);
  EXPECT_DOUBLE_EQ(c.metrics.em_rel_tol, 0.02);
  EXPECT_DOUBLE_EQ(c.harness.metrics.em_rel_tol, 0.02);
  EXPECT_EQ(c.endpoints.at("m").max_retries, 1);
  EXPECT_EQ(c.endpoints.at("m").timeout, std::chrono::milliseconds(5000));
  EXPECT_EQ(c.endpoints.count("oracle"), 1u);
  EXPECT_DOUBLE_EQ(c.renderer.options.scale, 1.5);
  EXPECT_EQ(c.renderer.options.timeout, std::chrono::milliseconds(2000));
  EXPECT_EQ(c.renderer.width, 2u);
  EXPECT_EQ(c.embedder_url, "http://localhost:9/embed");
  EXPECT_FALSE(c.bench.augment);
  EXPECT_DOUBLE_EQ(c.bench.facet_fraction, 0.3);
  EXPECT_EQ(c.bench.qa.n, 5u);
  EXPECT_EQ(c.bench.qa.kinds, std::set<QAKind>{QAKind::extremum});
  EXPECT_DOUBLE_EQ(c.bench.train_fraction, 0.7);
  EXPECT_EQ(c.harness.concurrency, 2u);
  EXPECT_FALSE(c.harness.test_split_only);
  EXPECT_TRUE(c.harness.data_task_full_spec);
  EXPECT_DOUBLE_EQ(c.harness.closure_table_threshold, 0.8);
  EXPECT_NE(make_renderer(c.renderer), nullptr);
}

TEST(Config, RoundTripsThroughJson) {
  const json j = json::parse(R"({"renderer": {"kind": "http", "url": "http://r/render"}, "qa": {"n": 2},
                                 "harness": {"data_spec": "full"}})");
  const AppConfig a = AppConfig::from_json(j);
  const AppConfig b = AppConfig::from_json(json::parse(a.to_json().dump()));
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
  for (const char* bad : {
           R"({"renderr": {}})",
           R"({"renderer": {"kind": "subprocess"}})",
           R"({"renderer": {"kind": "http"}})",
           R"({"renderer": {"kind": "sparkle"}})",
           R"({"renderer": {"kind": "subprocess", "command": ["x"], "scale": 0}})",
           R"({"harness": {"concurrency": "four"}})",
           R"({"harness": {"concurrency": 0}})",
           R"({"harness": {"data_spec": "half"}})",
           R"({"harness": {"closure_rouge_threshold": 2}})",
           R"({"qa": {"kinds": ["riddle"]}})",
           R"({"splits": {"train": 0.95, "val": 0.1}})",
           R"({"facet": {"fraction": 1.0}})",
           R"({"metrics": {"em_rel_tol": -1}})",
           R"({"endpoints": {"m": {"kind": "openai"}}})",
           R"({"endpoints": {"m": {"kind": "oracle", "api_key": "sk-123"}}})",
       }) {
    EXPECT_THROW(AppConfig::from_json(json::parse(bad)), ConfigError) << bad;
  }
}

TEST(Config, MissingOrMalformedFileIsAConfigError) {
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
  const auto path = std::filesystem::temp_directory_path() / "chartcycle_bad_config.json";
  write_file(path.string(), "{not json");
  EXPECT_THROW(load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
}

TEST(Config, RelativeRendererPathsResolveAgainstTheConfigDirectory) {
  const auto dir = std::filesystem::temp_directory_path() / "chartcycle_cfg_dir";
  std::filesystem::create_directories(dir / "tools");
  write_file((dir / "tools" / "r.py").string(), "");
  write_file((dir / "c.json").string(),
             R"({"renderer": {"kind": "subprocess", "command": ["python3", "tools/r.py", "tools/absent.py", "--scale", "{scale}"]}})");
  const AppConfig c = load_config((dir / "c.json").string());
  ASSERT_EQ(c.renderer.command.size(), 5u);
  // PATH lookups stay untouched; existing relative files are anchored.
  EXPECT_EQ(c.renderer.command[0], "python3");
  EXPECT_EQ(c.renderer.command[1], (dir / "tools" / "r.py").string());
  EXPECT_EQ(c.renderer.command[2], "tools/absent.py");
  EXPECT_EQ(c.renderer.command[4], "{scale}");

  write_file((dir / "d.json").string(), R"({"renderer": {"kind": "subprocess", "command": ["bin/render"]}})");
  EXPECT_EQ(load_config((dir / "d.json").string()).renderer.command[0], (dir / "bin" / "render").string());
  std::filesystem::remove_all(dir);
}
