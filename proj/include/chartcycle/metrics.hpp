#pragma once

// Scoring: spec text similarity, image similarity, validity, number-set
// similarity, tolerance-aware answer matching and the relaxed table metric.

#include "chartcycle/image.hpp"
#include "chartcycle/render.hpp"
#include "chartcycle/table.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chartcycle {

enum class RougeTokens { chars, whitespace, punct };

std::string_view to_string(RougeTokens t) noexcept;
std::optional<RougeTokens> rouge_tokens_from_string(std::string_view s) noexcept;

struct MetricConfig {
  double em_abs_tol = 1e-3;
  double em_rel_tol = 0.05;
  double em_epsilon = 1e-9;
  double table_rel_tol = 0.10;
  double table_abs_tol_plain = 0.02;
  double table_abs_tol_percent = 2.0;
  double fuzzy_key_threshold = 0.85;
  double jaccard_threshold = 0.90;
  double psnr_cap_db = 100.0;
  double rnss_epsilon = 1e-9;
  RougeTokens rouge_tokens = RougeTokens::punct;
  bool exclude_unanswerable = true;

  /// Throws ConfigError unless tolerances are positive and thresholds lie
  /// in (0, 1].
  void validate() const;
  nlohmann::ordered_json to_json() const;
  static MetricConfig from_json(const nlohmann::json& j);
};

// ---- spec text -----------------------------------------------------------

std::vector<std::string> tokenize(std::string_view text, RougeTokens mode);

/// LCS(pred, gold) / |gold| over the chosen tokens; nullopt when gold has
/// no tokens.
std::optional<double> rouge_l_recall(std::string_view pred, std::string_view gold,
                                     RougeTokens mode = RougeTokens::punct);

/// rouge_l_recall over canonical JSON text of both documents. A pred that
/// is not JSON is scored as raw text.
std::optional<double> spec_rouge(std::string_view pred_spec, std::string_view gold_spec,
                                 RougeTokens mode = RougeTokens::punct);

// ---- images --------------------------------------------------------------

/// Pred is resampled to gold size; a missing side scores 0, identical
/// images score cap_db.
double psnr(const Image* pred, const Image* gold, double cap_db = 100.0);

/// Five-scale MS-SSIM on luma; single-scale SSIM when the shorter side is
/// below 176 pixels. Missing side scores 0, identical images 1.
double ms_ssim(const Image* pred, const Image* gold);
double ssim(const Image& a, const Image& b);

inline constexpr const char* kResizeFilter = "bilinear";

class ImageEmbedder {
 public:
  virtual ~ImageEmbedder() = default;
  /// Throws EmbedderUnavailable.
  virtual std::vector<double> embed(const std::string& png) = 0;
  virtual std::string describe() const = 0;
};

/// (1 + cos) / 2 of the two embeddings; nullopt without an embedder.
std::optional<double> clip_similarity(const std::string& pred_png, const std::string& gold_png, ImageEmbedder* embedder);
double cosine_to_unit(const std::vector<double>& a, const std::vector<double>& b);

// ---- validity ------------------------------------------------------------

struct ValidityResult {
  bool valid = false;
  std::string mode;  // "render" or "static"
  std::string reason;
};

/// Renders through `bridge` when given; otherwise the spec must parse and
/// execute on `data`.
ValidityResult validity(std::string_view spec_text, const Table& data, RenderBridge* bridge);

// ---- numbers and answers -------------------------------------------------

struct ExtractedNumber {
  double value = 0.0;
  bool percent = false;
  bool currency = false;
  std::size_t begin = 0;
  std::size_t end = 0;

  bool operator==(const ExtractedNumber&) const = default;
};

std::vector<ExtractedNumber> extract_numbers(std::string_view text);
/// The trimmed text is exactly one number token.
bool is_numeric_answer(std::string_view text);

/// Minimum-cost assignment; cost min(1, |p-g| / max(|g|, eps)), unmatched
/// elements cost 1. Both empty scores 1.
double rnss(const std::vector<double>& pred, const std::vector<double>& gold, double eps = 1e-9);

/// Optimal assignment for a square cost matrix; returns column per row.
std::vector<std::size_t> hungarian(const std::vector<std::vector<double>>& cost);

int num_em(std::string_view pred, std::string_view gold, const MetricConfig& cfg = {});
int str_em(std::string_view pred, std::string_view gold);

struct EMResult {
  double score = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;
  std::vector<std::optional<int>> per_pair;  // nullopt when excluded
};

bool is_unanswerable(std::string_view gold);
/// Numeric branch when the gold is a number, string branch otherwise.
int em(std::string_view pred, std::string_view gold, const MetricConfig& cfg = {});
EMResult avg_em(const std::vector<std::pair<std::string, std::string>>& pairs, const MetricConfig& cfg = {});

// ---- tables --------------------------------------------------------------

struct TableScore {
  double prec_k = 0.0;
  double rec_k = 0.0;
  double f1_k = 0.0;
  double acc_cell = 0.0;
  double s = 0.0;
  std::size_t matched_keys = 0;
  std::size_t cell_pairs = 0;
};

/// Throws EvaluationError when the gold has no header line.
TableScore table_score(std::string_view pred_csv, std::string_view gold_csv, const MetricConfig& cfg = {});

/// Relaxed numeric tolerance, then the text fallback.
bool cell_match(std::string_view pred, std::string_view gold, bool percent_column, const MetricConfig& cfg = {});

// ---- reports -------------------------------------------------------------

struct SampleScores {
  std::string id;
  // Metric name -> number or null, in insertion order.
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  std::vector<std::string> notes;
};

struct MetricReport {
  std::string task;
  nlohmann::ordered_json settings = nlohmann::ordered_json::object();
  std::vector<SampleScores> samples;

  /// Mean of `key` over samples where it is a number; nullopt if none.
  std::optional<double> mean(const std::string& key) const;
  /// Fixed-order block: ROUGE-L recall, PSNR, CLIP, MS-SSIM, valid (percent),
  /// RNSS, EM, then table breakdown. Absent metrics are null.
  nlohmann::ordered_json aggregate() const;
  nlohmann::ordered_json to_json() const;
};

}  // namespace chartcycle
