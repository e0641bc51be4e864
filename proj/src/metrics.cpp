#include "chartcycle/metrics.hpp"

#include "chartcycle/error.hpp"
#include "chartcycle/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

namespace chartcycle {

std::string_view to_string(RougeTokens t) noexcept {
  switch (t) {
    case RougeTokens::chars: return "chars";
    case RougeTokens::whitespace: return "whitespace";
    case RougeTokens::punct: return "punct";
  }
  return "?";
}

std::optional<RougeTokens> rouge_tokens_from_string(std::string_view s) noexcept {
  for (RougeTokens t : {RougeTokens::chars, RougeTokens::whitespace, RougeTokens::punct})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

void MetricConfig::validate() const {
  for (auto [name, v] : {std::pair{"em_abs_tol", em_abs_tol}, {"em_rel_tol", em_rel_tol}, {"em_epsilon", em_epsilon},
                         {"table_rel_tol", table_rel_tol}, {"table_abs_tol_plain", table_abs_tol_plain},
                         {"table_abs_tol_percent", table_abs_tol_percent}, {"psnr_cap_db", psnr_cap_db},
                         {"rnss_epsilon", rnss_epsilon}})
    if (!(v > 0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be positive");
  for (auto [name, v] : {std::pair{"fuzzy_key_threshold", fuzzy_key_threshold}, {"jaccard_threshold", jaccard_threshold}})
    if (!(v > 0 && v <= 1)) throw ConfigError(std::string(name) + " must lie in (0, 1]");
}

nlohmann::ordered_json MetricConfig::to_json() const {
  nlohmann::ordered_json j;
  j["em_abs_tol"] = em_abs_tol;
  j["em_rel_tol"] = em_rel_tol;
  j["em_epsilon"] = em_epsilon;
  j["table_rel_tol"] = table_rel_tol;
  j["table_abs_tol_plain"] = table_abs_tol_plain;
  j["table_abs_tol_percent"] = table_abs_tol_percent;
  j["fuzzy_key_threshold"] = fuzzy_key_threshold;
  j["jaccard_threshold"] = jaccard_threshold;
  j["psnr_cap_db"] = psnr_cap_db;
  j["rnss_epsilon"] = rnss_epsilon;
  j["rouge_tokens"] = to_string(rouge_tokens);
  j["exclude_unanswerable"] = exclude_unanswerable;
  j["resize_filter"] = kResizeFilter;
  return j;
}

MetricConfig MetricConfig::from_json(const nlohmann::json& j) {
  MetricConfig c;
  if (!j.is_object()) throw ConfigError("metrics section must be an object");
  try {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      const auto& v = it.value();
      if (k == "em_abs_tol") c.em_abs_tol = v.get<double>();
      else if (k == "em_rel_tol") c.em_rel_tol = v.get<double>();
      else if (k == "em_epsilon") c.em_epsilon = v.get<double>();
      else if (k == "table_rel_tol") c.table_rel_tol = v.get<double>();
      else if (k == "table_abs_tol_plain") c.table_abs_tol_plain = v.get<double>();
      else if (k == "table_abs_tol_percent") c.table_abs_tol_percent = v.get<double>();
      else if (k == "fuzzy_key_threshold") c.fuzzy_key_threshold = v.get<double>();
      else if (k == "jaccard_threshold") c.jaccard_threshold = v.get<double>();
      else if (k == "psnr_cap_db") c.psnr_cap_db = v.get<double>();
      else if (k == "rnss_epsilon") c.rnss_epsilon = v.get<double>();
      else if (k == "exclude_unanswerable") c.exclude_unanswerable = v.get<bool>();
      else if (k == "rouge_tokens") {
        auto t = rouge_tokens_from_string(v.get<std::string>());
        if (!t) throw ConfigError("unknown rouge_tokens '" + v.get<std::string>() + "'");
        c.rouge_tokens = *t;
      } else if (k == "resize_filter") {
        if (v.get<std::string>() != kResizeFilter) throw ConfigError("only the bilinear resize filter is supported");
      } else {
        throw ConfigError("unknown metrics key '" + k + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("metrics section: ") + e.what());
  }
  c.validate();
  return c;
}

// ---- spec text -----------------------------------------------------------

namespace {

bool is_word_byte(unsigned char c) noexcept {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c >= 0x80;
}

bool is_space(unsigned char c) noexcept { return c == ' ' || c == '\n' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace

std::vector<std::string> tokenize(std::string_view text, RougeTokens mode) {
  std::vector<std::string> out;
  switch (mode) {
    case RougeTokens::whitespace:
      return text::split_whitespace(text);
    case RougeTokens::chars:
      for (std::size_t i = 0; i < text.size();) {
        const auto c = static_cast<unsigned char>(text[i]);
        std::size_t len = c < 0x80 ? 1 : c < 0xE0 ? 2 : c < 0xF0 ? 3 : 4;
        len = std::min(len, text.size() - i);
        if (!is_space(c)) out.emplace_back(text.substr(i, len));
        i += len;
      }
      return out;
    case RougeTokens::punct:
      for (std::size_t i = 0; i < text.size();) {
        const auto c = static_cast<unsigned char>(text[i]);
        if (is_space(c)) {
          ++i;
        } else if (is_word_byte(c)) {
          std::size_t j = i;
          while (j < text.size() && is_word_byte(static_cast<unsigned char>(text[j]))) ++j;
          out.emplace_back(text.substr(i, j - i));
          i = j;
        } else {
          out.emplace_back(1, text[i]);
          ++i;
        }
      }
      return out;
  }
  return out;
}

std::optional<double> rouge_l_recall(std::string_view pred, std::string_view gold, RougeTokens mode) {
  const auto g = tokenize(gold, mode);
  if (g.empty()) return std::nullopt;
  const auto p = tokenize(pred, mode);
  std::unordered_map<std::string, int> ids;
  auto intern = [&](const std::vector<std::string>& toks) {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return out;
  };
  const auto gi = intern(g);
  const auto pi = intern(p);
  std::vector<std::uint32_t> prev(gi.size() + 1, 0), cur(gi.size() + 1, 0);
  for (int a : pi) {
    for (std::size_t j = 1; j <= gi.size(); ++j)
      cur[j] = a == gi[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return static_cast<double>(prev[gi.size()]) / static_cast<double>(gi.size());
}

std::optional<double> spec_rouge(std::string_view pred_spec, std::string_view gold_spec, RougeTokens mode) {
  std::string gold;
  try {
    gold = canonicalize_json_text(gold_spec);
  } catch (const SyntaxError&) {
    gold = std::string(text::trim(gold_spec));
  }
  std::string pred;
  try {
    pred = canonicalize_json_text(pred_spec);
  } catch (const SyntaxError&) {
    pred = std::string(text::trim(pred_spec));
  }
  return rouge_l_recall(pred, gold, mode);
}

// ---- validity ------------------------------------------------------------

ValidityResult validity(std::string_view spec_text, const Table& data, RenderBridge* bridge) {
  ValidityResult r;
  if (bridge) {
    r.mode = "render";
    try {
      const RenderResult out = bridge->render(spec_text, data);
      r.valid = out.ok();
      if (!r.valid) r.reason = std::string(to_string(out.status)) + (out.reason.empty() ? "" : ": " + out.reason);
    } catch (const Timeout& e) {
      r.reason = std::string("timeout: ") + e.what();
    }
    return r;
  }
  r.mode = "static";
  try {
    const ChartSpec spec = parse_spec(spec_text);
    execute_transforms(spec, data);
    r.valid = true;
  } catch (const Error& e) {
    r.reason = std::string(to_string(e.code())) + ": " + e.what();
  }
  return r;
}

// ---- numbers -------------------------------------------------------------

namespace {

bool is_digit(char c) noexcept { return c >= '0' && c <= '9'; }
bool is_alnum(char c) noexcept {
  return is_digit(c) || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

}  // namespace

std::vector<ExtractedNumber> extract_numbers(std::string_view s) {
  std::vector<ExtractedNumber> out;
  const std::size_t n = s.size();
  std::size_t i = 0;
  while (i < n) {
    const std::size_t start = i;
    std::size_t j = i;
    bool currency = false, negative = false;
    if (s[j] == '$') currency = true, ++j;
    if (j < n && (s[j] == '-' || s[j] == '+') && (j != start || start == 0 || !is_alnum(s[start - 1]))) {
      negative = s[j] == '-';
      ++j;
    }
    if (!currency && j < n && s[j] == '$') currency = true, ++j;
    const bool starts_number = (j < n && is_digit(s[j])) || (j + 1 < n && s[j] == '.' && is_digit(s[j + 1]));
    if (!starts_number) {
      i = start + 1;
      continue;
    }
    std::string digits;
    std::size_t k = j;
    while (k < n && is_digit(s[k])) digits.push_back(s[k++]);
    if (!digits.empty() && digits.size() <= 3) {
      // Thousands groups: exactly three digits after each comma.
      while (k + 3 < n && s[k] == ',' && is_digit(s[k + 1]) && is_digit(s[k + 2]) && is_digit(s[k + 3]) &&
             (k + 4 == n || !is_digit(s[k + 4]))) {
        digits.append(s.substr(k + 1, 3));
        k += 4;
      }
    }
    if (digits.empty()) digits = "0";
    if (k + 1 < n && s[k] == '.' && is_digit(s[k + 1])) {
      digits.push_back('.');
      ++k;
      while (k < n && is_digit(s[k])) digits.push_back(s[k++]);
    }
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    bool percent = false;
    if (k < n && s[k] == '%') percent = true, ++k;
    else if (k + 1 < n && s[k] == ' ' && s[k + 1] == '%') percent = true, k += 2;
    if (ec == std::errc() && ptr == digits.data() + digits.size() && std::isfinite(value))
      out.push_back({negative ? -value : value, percent, currency, start, k});
    i = k;
  }
  return out;
}

bool is_numeric_answer(std::string_view text) {
  const std::string_view t = text::trim(text);
  if (t.empty()) return false;
  const auto nums = extract_numbers(t);
  return nums.size() == 1 && nums[0].begin == 0 && nums[0].end == t.size();
}

std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& a) {
  const std::size_t n = a.size();
  if (n == 0) return {};
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) minv[j] = cur, way[j] = j0;
        if (minv[j] < delta) delta = minv[j], j1 = j;
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) u[p[j]] += delta, v[j] -= delta;
        else minv[j] -= delta;
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t j = 1; j <= n; ++j) assignment[p[j] - 1] = j - 1;
  return assignment;
}

double rnss(const std::vector<double>& pred, const std::vector<double>& gold, double eps) {
  const std::size_t n = std::max(pred.size(), gold.size());
  if (n == 0) return 1.0;
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1.0));
  for (std::size_t i = 0; i < pred.size(); ++i)
    for (std::size_t j = 0; j < gold.size(); ++j) {
      const double d = std::fabs(pred[i] - gold[j]) / std::max(std::fabs(gold[j]), eps);
      cost[i][j] = std::isnan(d) ? 1.0 : std::min(1.0, d);
    }
  const auto assignment = hungarian(cost);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += cost[i][assignment[i]];
  return std::clamp(1.0 - total / static_cast<double>(n), 0.0, 1.0);
}

// ---- answers -------------------------------------------------------------

int str_em(std::string_view pred, std::string_view gold) {
  return text::normalize_answer(pred).find(text::normalize_answer(gold)) != std::string::npos ? 1 : 0;
}

int num_em(std::string_view pred, std::string_view gold, const MetricConfig& cfg) {
  const auto gs = extract_numbers(gold);
  if (gs.empty()) return str_em(pred, gold);
  const auto ps = extract_numbers(pred);
  auto variants = [](const ExtractedNumber& x) {
    std::vector<double> v{x.value};
    if (x.percent) v.push_back(x.value / 100.0);
    return v;
  };
  for (const auto& p : ps)
    for (const auto& g : gs)
      for (double pv : variants(p))
        for (double gv : variants(g)) {
          const double diff = std::fabs(pv - gv);
          if (diff <= cfg.em_abs_tol || diff / std::max(std::fabs(gv), cfg.em_epsilon) <= cfg.em_rel_tol) return 1;
        }
  return 0;
}

bool is_unanswerable(std::string_view gold) { return text::normalize_answer(gold) == "unanswerable"; }

int em(std::string_view pred, std::string_view gold, const MetricConfig& cfg) {
  return is_numeric_answer(gold) ? num_em(pred, gold, cfg) : str_em(pred, gold);
}

EMResult avg_em(const std::vector<std::pair<std::string, std::string>>& pairs, const MetricConfig& cfg) {
  EMResult r;
  std::size_t hits = 0;
  for (const auto& [pred, gold] : pairs) {
    if (cfg.exclude_unanswerable && is_unanswerable(gold)) {
      ++r.excluded;
      r.per_pair.push_back(std::nullopt);
      continue;
    }
    const int e = em(pred, gold, cfg);
    hits += static_cast<std::size_t>(e);
    ++r.evaluated;
    r.per_pair.push_back(e);
  }
  r.score = r.evaluated ? static_cast<double>(hits) / static_cast<double>(r.evaluated) : 0.0;
  return r;
}

// ---- tables --------------------------------------------------------------

namespace {

std::optional<double> cell_number(std::string_view cell, bool* percent) {
  std::string s;
  for (char c : text::trim(cell)) {
    if (c == '%') {
      *percent = true;
      continue;
    }
    if (c == '$' || c == ',' || c == ' ') continue;
    s.push_back(c);
  }
  return text::parse_number(s);
}

std::string row_key(std::string_view cell) {
  bool pct = false;
  if (auto v = cell_number(cell, &pct)) return text::format_number(*v, false);
  return text::normalize_answer(cell);
}

using Record = std::vector<std::optional<std::string>>;

struct KeyedRow {
  std::string key;
  Record cells;
};

bool record_less(const KeyedRow& a, const KeyedRow& b) {
  if (a.key != b.key) return a.key < b.key;
  return a.cells < b.cells;
}

}  // namespace

bool cell_match(std::string_view pred, std::string_view gold, bool percent_column, const MetricConfig& cfg) {
  bool pp = false, gp = false;
  const auto pv = cell_number(pred, &pp);
  const auto gv = cell_number(gold, &gp);
  if (pv && gv) {
    const double abs_tol = (pp || gp || percent_column) ? cfg.table_abs_tol_percent : cfg.table_abs_tol_plain;
    return std::fabs(*pv - *gv) <= std::max(abs_tol, cfg.table_rel_tol * std::fabs(*gv));
  }
  const std::string a = text::normalize_answer(pred), b = text::normalize_answer(gold);
  if (a == b) return true;
  return text::token_jaccard(a, b) > cfg.jaccard_threshold;
}

TableScore table_score(std::string_view pred_csv, std::string_view gold_csv, const MetricConfig& cfg) {
  const auto gold_records = split_csv_records(normalize_table_text(gold_csv));
  if (gold_records.empty()) throw EvaluationError("gold table has no header");
  const auto pred_records = split_csv_records(normalize_table_text(pred_csv));

  std::vector<std::string> gold_header, pred_header;
  for (const auto& h : gold_records[0]) gold_header.push_back(text::normalize_answer(h));
  if (!pred_records.empty())
    for (const auto& h : pred_records[0]) pred_header.push_back(text::normalize_answer(h));
  const std::size_t ncols = gold_header.size();

  // Column map into gold order: by name when the headers are a permutation,
  // else by position.
  std::vector<std::size_t> source(ncols);
  std::iota(source.begin(), source.end(), 0);
  {
    auto a = gold_header, b = pred_header;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a == b && std::adjacent_find(a.begin(), a.end()) == a.end())
      for (std::size_t j = 0; j < ncols; ++j)
        source[j] = static_cast<std::size_t>(std::find(pred_header.begin(), pred_header.end(), gold_header[j]) -
                                             pred_header.begin());
  }

  auto keyed = [&](const std::vector<std::vector<std::string>>& records, bool is_pred) {
    std::vector<KeyedRow> rows;
    for (std::size_t r = 1; r < records.size(); ++r) {
      KeyedRow row;
      row.cells.resize(ncols);
      for (std::size_t j = 0; j < ncols; ++j) {
        const std::size_t src = is_pred ? source[j] : j;
        if (src < records[r].size()) row.cells[j] = records[r][src];
      }
      row.key = row.cells.empty() || !row.cells[0] ? std::string() : row_key(*row.cells[0]);
      rows.push_back(std::move(row));
    }
    std::sort(rows.begin(), rows.end(), record_less);
    return rows;
  };
  const auto gold = keyed(gold_records, false);
  const auto pred = keyed(pred_records, true);

  TableScore out;
  std::vector<std::optional<std::size_t>> match(gold.size());
  std::vector<char> pred_used(pred.size(), 0);
  for (std::size_t g = 0; g < gold.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p)
      if (!pred_used[p] && pred[p].key == gold[g].key) {
        match[g] = p;
        pred_used[p] = 1;
        break;
      }
  struct Pair {
    double ratio;
    std::size_t g, p;
  };
  std::vector<Pair> fuzzy;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (match[g]) continue;
    for (std::size_t p = 0; p < pred.size(); ++p) {
      if (pred_used[p]) continue;
      const double r = text::levenshtein_ratio(gold[g].key, pred[p].key);
      if (r >= cfg.fuzzy_key_threshold) fuzzy.push_back({r, g, p});
    }
  }
  std::sort(fuzzy.begin(), fuzzy.end(), [](const Pair& a, const Pair& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    return a.g != b.g ? a.g < b.g : a.p < b.p;
  });
  for (const auto& f : fuzzy)
    if (!match[f.g] && !pred_used[f.p]) match[f.g] = f.p, pred_used[f.p] = 1;

  for (const auto& m : match) out.matched_keys += m.has_value();
  if (gold.empty() && pred.empty()) {
    out.prec_k = out.rec_k = out.f1_k = 1.0;
  } else if (!gold.empty() && !pred.empty()) {
    out.prec_k = static_cast<double>(out.matched_keys) / static_cast<double>(pred.size());
    out.rec_k = static_cast<double>(out.matched_keys) / static_cast<double>(gold.size());
    out.f1_k = out.prec_k + out.rec_k > 0 ? 2 * out.prec_k * out.rec_k / (out.prec_k + out.rec_k) : 0.0;
  }

  std::size_t accepted = 0;
  for (std::size_t g = 0; g < gold.size(); ++g) {
    if (!match[g]) continue;
    const KeyedRow& pr = pred[*match[g]];
    for (std::size_t j = 1; j < ncols; ++j) {
      ++out.cell_pairs;
      const auto& gc = gold[g].cells[j];
      const auto& pc = pr.cells[j];
      if (gc && pc && cell_match(*pc, *gc, gold_header[j] == "percentage", cfg)) ++accepted;
    }
  }
  if (out.cell_pairs) out.acc_cell = static_cast<double>(accepted) / static_cast<double>(out.cell_pairs);
  else if (out.matched_keys) out.acc_cell = 1.0;
  else out.acc_cell = gold.empty() && pred.empty() ? 1.0 : 0.0;
  out.s = (out.f1_k + out.acc_cell) / 2.0;
  return out;
}

}  // namespace chartcycle
