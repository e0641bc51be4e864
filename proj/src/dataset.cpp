#include "chartcycle/error.hpp"
#include "chartcycle/harness.hpp"
#include "chartcycle/text.hpp"
#include "chartcycle/util.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

namespace chartcycle {

using OJson = nlohmann::ordered_json;

namespace {

constexpr std::array<std::string_view, 3> kSplits = {"train", "val", "test"};
constexpr std::array<std::string_view, 4> kTasks = {"nl2chart", "schema", "data", "qa"};

std::string error_text(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

std::uint64_t derived_seed(std::uint64_t seed, const std::string& id) {
  const std::string h = sha256_hex(std::to_string(seed) + ":" + id);
  return std::stoull(h.substr(0, 16), nullptr, 16);
}

}  // namespace

std::string_view to_string(Split s) noexcept { return kSplits[static_cast<std::size_t>(s)]; }

std::optional<Split> split_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kSplits.size(); ++i)
    if (kSplits[i] == s) return static_cast<Split>(i);
  return std::nullopt;
}

std::string_view to_string(Task t) noexcept { return kTasks[static_cast<std::size_t>(t)]; }

std::optional<Task> task_from_string(std::string_view s) noexcept {
  for (std::size_t i = 0; i < kTasks.size(); ++i)
    if (kTasks[i] == s) return static_cast<Task>(i);
  return std::nullopt;
}

std::string content_key(const ChartSpec& spec, const Table& raw) {
  return sha256_hex(normalize_spec(spec) + "\n" + serialize_csv(raw));
}

RenderInput stripped_context(const ChartSpec& spec, const Table& raw) {
  return {normalize_spec(strip_transforms(spec)), apply_transform_block(spec, raw)};
}

OJson sample_to_json(const LifecycleSample& s) {
  OJson j;
  j["id"] = s.id;
  j["raw_table"] = serialize_csv(s.raw_table);
  j["nl_query"] = s.nl_query;
  j["spec"] = normalize_spec(s.spec);
  j["stripped_spec"] = normalize_spec(s.stripped_spec);
  j["vis_table"] = serialize_csv(s.vis_table);
  j["image_ref"] = s.image_ref;
  auto& qa = j["qa"] = OJson::array();
  for (const auto& q : s.qa) qa.push_back(qa_to_json(q));
  j["faceted"] = s.faceted;
  j["mark"] = to_string(s.mark);
  j["split"] = to_string(s.split);
  return j;
}

LifecycleSample sample_from_json(const OJson& j) {
  LifecycleSample s;
  try {
    s.id = j.at("id").get<std::string>();
    s.raw_table = parse_csv(j.at("raw_table").get<std::string>());
    s.nl_query = j.at("nl_query").get<std::string>();
    s.spec = parse_spec(j.at("spec").get<std::string>());
    s.stripped_spec = parse_spec(j.at("stripped_spec").get<std::string>());
    s.vis_table = parse_csv(j.at("vis_table").get<std::string>());
    s.image_ref = j.at("image_ref").get<std::string>();
    for (const auto& q : j.at("qa")) s.qa.push_back(qa_from_json(q));
    s.faceted = j.at("faceted").get<bool>();
    const auto mark = mark_from_string(j.at("mark").get<std::string>());
    const auto split = split_from_string(j.at("split").get<std::string>());
    if (!mark || !split) throw SchemaError("bad mark or split");
    s.mark = *mark;
    s.split = *split;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("sample record: ") + e.what());
  } catch (const Error& e) {
    throw SchemaError("sample " + s.id + ": " + error_text(e));
  }
  return s;
}

std::string dataset_to_jsonl(const std::vector<LifecycleSample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += sample_to_json(s).dump();
    out += '\n';
  }
  return out;
}

std::vector<LifecycleSample> dataset_from_jsonl(std::string_view text) {
  std::vector<LifecycleSample> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(text)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    OJson j;
    try {
      j = OJson::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(sample_from_json(j));
  }
  return out;
}

std::vector<CorpusRecord> load_corpus(const std::string& path) {
  namespace fs = std::filesystem;
  fs::path file = path;
  if (fs::is_directory(file)) file /= "corpus.jsonl";
  if (!fs::exists(file)) throw ConfigError("corpus not found: " + file.string());
  std::vector<CorpusRecord> out;
  std::size_t line_no = 0;
  for (const auto& line : text::split_lines(read_file(file.string()))) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      CorpusRecord r;
      r.id = j.at("id").get<std::string>();
      r.query = j.at("query").get<std::string>();
      const auto& spec = j.at("spec");
      r.spec_text = spec.is_string() ? spec.get<std::string>() : spec.dump();
      r.table_csv = j.at("table").get<std::string>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(file.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void BenchConfig::validate() const {
  if (!(facet_fraction >= 0 && facet_fraction < 1)) throw ConfigError("facet_fraction must be in [0, 1)");
  if (!(train_fraction > 0 && val_fraction >= 0 && train_fraction + val_fraction <= 1))
    throw ConfigError("split fractions must be positive and sum to at most 1");
  if (facet.max_cardinality < 2) throw ConfigError("facet max_cardinality must be at least 2");
  if (qa.n == 0) throw ConfigError("qa n must be positive");
}

std::array<std::size_t, 3> split_sizes(std::size_t n, double train, double val) {
  const auto tr = static_cast<std::size_t>(std::floor(train * static_cast<double>(n) + 1e-9));
  const auto va = std::min(n - tr, static_cast<std::size_t>(std::floor(val * static_cast<double>(n) + 1e-9)));
  return {tr, va, n - tr - va};
}

std::array<std::size_t, 3> stratum_allocation(std::size_t count, std::size_t n, const std::array<std::size_t, 3>& totals) {
  std::array<std::size_t, 3> out{};
  if (n == 0) return out;
  std::array<std::size_t, 3> rem{};
  std::size_t given = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = count * totals[i] / n;
    rem[i] = count * totals[i] % n;
    given += out[i];
  }
  std::array<std::size_t, 3> order = {0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; given < count; ++k, ++given) ++out[order[k % 3]];
  return out;
}

namespace {

struct Builder {
  const BenchConfig& cfg;
  std::uint64_t seed;
  RenderBridge* bridge;
  BenchResult& result;

  void exclude(const std::string& id, std::string reason) { result.excluded.push_back({id, std::move(reason)}); }

  // Executes, renders and generates QA; false when the sample is excluded.
  bool finish(LifecycleSample& s) {
    try {
      s.vis_table = execute_transforms(s.spec, s.raw_table);
      validate_vis_table(s.vis_table);
    } catch (const Error& e) {
      exclude(s.id, "execution error: " + error_text(e));
      return false;
    }
    s.stripped_spec = strip_transforms(s.spec);
    s.faceted = s.spec.faceted();
    s.mark = s.spec.mark;
    s.image_ref = image_ref_for(content_key(s.spec, s.raw_table));
    try {
      s.qa = generate_qa(s.spec, s.vis_table, derived_seed(seed, s.id), cfg.qa);
    } catch (const NoApplicableTemplate& e) {
      exclude(s.id, std::string("no QA template: ") + e.what());
      return false;
    }
    if (bridge) {
      const RenderInput in = stripped_context(s.spec, s.raw_table);
      try {
        const RenderResult r = bridge->render(in.spec_text, in.data);
        if (!r.ok()) {
          exclude(s.id, "render error: " + std::string(to_string(r.status)) + " " + r.reason);
          return false;
        }
        result.images[s.image_ref] = r.png;
      } catch (const Timeout& e) {
        exclude(s.id, std::string("render timeout: ") + e.what());
        return false;
      }
    }
    return true;
  }

  std::optional<LifecycleSample> prepare(const CorpusRecord& r) {
    LifecycleSample s;
    s.id = r.id;
    s.nl_query = std::string(text::trim(r.query));
    if (s.nl_query.empty()) {
      exclude(r.id, "empty query");
      return std::nullopt;
    }
    try {
      s.spec = parse_spec(r.spec_text);
      validate_spec(s.spec);
    } catch (const UnsupportedSpec& e) {
      exclude(r.id, std::string("unsupported: ") + e.what());
      return std::nullopt;
    } catch (const Error& e) {
      exclude(r.id, "invalid spec: " + error_text(e));
      return std::nullopt;
    }
    try {
      s.raw_table = parse_csv(r.table_csv);
    } catch (const Error& e) {
      exclude(r.id, "invalid table: " + error_text(e));
      return std::nullopt;
    }
    if (!finish(s)) return std::nullopt;
    return s;
  }

  // Faceted variant of a single-view sample, or nullopt when no candidate
  // survives validation.
  std::optional<LifecycleSample> augment(const LifecycleSample& base) {
    for (const auto& c : find_candidates(base.spec, base.raw_table, cfg.facet)) {
      LifecycleSample s;
      s.id = base.id + "-facet";
      s.raw_table = base.raw_table;
      s.nl_query = facet_query(base.nl_query, c);
      s.spec = inject_facet(base.spec, c);
      const AugmentCheck check =
          bridge ? validate_augmented(s.spec, s.raw_table, bridge) : check_facet_partitions(s.spec, s.raw_table);
      if (!check.pass) continue;
      const std::size_t before = result.excluded.size();
      if (finish(s)) return s;
      result.excluded.resize(before);  // a failed candidate is not an exclusion
    }
    return std::nullopt;
  }
};

}  // namespace

BenchResult build_bench(const std::vector<CorpusRecord>& corpus, const BenchConfig& cfg, std::uint64_t seed,
                        RenderBridge* bridge) {
  cfg.validate();
  BenchResult result;
  if (corpus.empty()) {
    result.warnings.push_back("empty corpus");
    return result;
  }
  Builder b{cfg, seed, bridge, result};

  std::set<std::string> ids;
  std::vector<LifecycleSample> samples;
  for (const auto& r : corpus) {
    if (!ids.insert(r.id).second) {
      b.exclude(r.id, "duplicate id");
      continue;
    }
    if (auto s = b.prepare(r)) samples.push_back(std::move(*s));
  }

  if (cfg.augment && !samples.empty()) {
    std::vector<std::size_t> singles;
    std::size_t faceted = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].faceted) ++faceted;
      else singles.push_back(i);
    }
    const double f = cfg.facet_fraction;
    const auto target = static_cast<std::size_t>(std::llround(f * static_cast<double>(singles.size()) / (1 - f)));
    const std::size_t wanted = target > faceted ? target - faceted : 0;
    std::sort(singles.begin(), singles.end(), [&](std::size_t a, std::size_t c) { return samples[a].id < samples[c].id; });
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    rng.shuffle(singles);
    std::vector<LifecycleSample> added;
    for (std::size_t k = 0; k < singles.size() && added.size() < wanted; ++k) {
      const LifecycleSample& base = samples[singles[k]];
      if (ids.count(base.id + "-facet")) continue;
      if (auto s = b.augment(base)) {
        ids.insert(s->id);
        added.push_back(std::move(*s));
      }
    }
    if (added.size() < wanted)
      result.warnings.push_back("facet augmentation reached " + std::to_string(added.size()) + " of " +
                                std::to_string(wanted) + " samples");
    for (auto& s : added) samples.push_back(std::move(s));
  }

  std::sort(samples.begin(), samples.end(), [](const auto& a, const auto& c) { return a.id < c.id; });
  const auto totals = split_sizes(samples.size(), cfg.train_fraction, cfg.val_fraction);
  std::vector<std::size_t> strata[2];
  for (std::size_t i = 0; i < samples.size(); ++i) strata[samples[i].faceted ? 1 : 0].push_back(i);
  const auto fac = stratum_allocation(strata[1].size(), samples.size(), totals);
  const std::array<std::size_t, 3> single = {totals[0] - fac[0], totals[1] - fac[1], totals[2] - fac[2]};
  Rng rng(seed);
  for (int k = 0; k < 2; ++k) {
    rng.shuffle(strata[k]);
    const auto& alloc = k ? fac : single;
    std::size_t pos = 0;
    for (std::size_t split = 0; split < 3; ++split)
      for (std::size_t c = 0; c < alloc[split]; ++c) samples[strata[k][pos++]].split = static_cast<Split>(split);
  }
  result.samples = std::move(samples);
  return result;
}

std::vector<LintIssue> lint_dataset(const std::vector<LifecycleSample>& samples) {
  std::vector<LintIssue> out;
  std::set<std::string> ids;
  for (const auto& s : samples) {
    auto issue = [&](std::string m) { out.push_back({s.id, std::move(m)}); };
    if (!ids.insert(s.id).second) issue("duplicate id");
    // Answers are checked against the re-executed table: the stored vis
    // table went through CSV and carries only six decimals.
    std::optional<VisTable> executed;
    try {
      executed = execute_transforms(s.spec, s.raw_table);
      if (serialize_csv(*executed) != serialize_csv(s.vis_table)) issue("vis_table differs from executing the spec");
    } catch (const Error& e) {
      issue("execution error: " + error_text(e));
    }
    if (normalize_spec(strip_transforms(s.spec)) != normalize_spec(s.stripped_spec))
      issue("stripped_spec is not the transform-free spec");
    if (s.faceted != s.spec.faceted()) issue("faceted flag disagrees with the spec");
    if (s.mark != s.spec.mark) issue("mark disagrees with the spec");
    if (s.image_ref != image_ref_for(content_key(s.spec, s.raw_table))) issue("image_ref is not content-addressed");
    if (s.qa.empty()) issue("no QA pairs");
    for (const auto& q : s.qa) {
      try {
        verify_qa(q, executed ? *executed : s.vis_table);
      } catch (const Error& e) {
        issue("QA '" + q.question + "': " + e.what());
      }
    }
  }
  return out;
}

}  // namespace chartcycle
