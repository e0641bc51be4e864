#pragma once

// Template-based question answering pairs over a visualization table.
// Answers are always computed from the table, never generated.

#include "chartcycle/spec.hpp"
#include "chartcycle/table.hpp"

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace chartcycle {

enum class QAKind { extremum, comparison, aggregation, facet_compare, facet_count };
enum class AnswerType { number, category, boolean };

std::string_view to_string(QAKind k) noexcept;
std::string_view to_string(AnswerType t) noexcept;
std::optional<QAKind> qa_kind_from_string(std::string_view s) noexcept;
std::optional<AnswerType> answer_type_from_string(std::string_view s) noexcept;

struct QAPair {
  std::string question;
  std::string answer;
  QAKind kind = QAKind::extremum;
  AnswerType answer_type = AnswerType::category;
  // Template id and its bindings (vis-table channels, category values,
  // thresholds); enough to recompute the answer.
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  // Unrounded numeric answer, when there is one.
  std::optional<double> value;
  // Set by the paraphrase hook; `question` then holds the rewrite.
  std::optional<std::string> original_question;

  bool operator==(const QAPair&) const = default;
};

nlohmann::ordered_json qa_to_json(const QAPair& q);
QAPair qa_from_json(const nlohmann::ordered_json& j);

struct QAOptions {
  std::size_t n = 3;
  // Empty means every kind.
  std::set<QAKind> kinds;
};

/// Enumerates every applicable template instance, shuffles with `seed` and
/// keeps the first n. Facet kinds apply only to faceted specs.
/// Throws NoApplicableTemplate when nothing applies.
std::vector<QAPair> generate_qa(const ChartSpec& spec, const Table& vis, std::uint64_t seed,
                                const QAOptions& options = {});

/// Recomputes the answer from q.params. Throws TemplateMismatch when the
/// parameters do not bind to this table.
std::string answer_oracle(const QAPair& q, const Table& vis);

/// Throws TemplateMismatch unless answer_oracle reproduces q.answer.
void verify_qa(const QAPair& q, const Table& vis);

using QuestionRewriter = std::function<std::string(const std::string&)>;

/// Replaces the question text with the rewriter's output and keeps the
/// original. Any failure (or a null rewriter) leaves q unchanged; failures
/// append to `warnings` when given.
QAPair paraphrase_hook(const QAPair& q, const QuestionRewriter& rewriter, std::vector<std::string>* warnings = nullptr);

}  // namespace chartcycle
