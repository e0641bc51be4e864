#include "chartcycle/metrics.hpp"

namespace chartcycle {

std::optional<double> MetricReport::mean(const std::string& key) const {
  long double sum = 0;
  std::size_t n = 0;
  for (const auto& s : samples) {
    auto it = s.scores.find(key);
    if (it == s.scores.end() || !it->is_number()) continue;
    sum += it->get<double>();
    ++n;
  }
  if (n == 0) return std::nullopt;
  return static_cast<double>(sum / static_cast<long double>(n));
}

nlohmann::ordered_json MetricReport::aggregate() const {
  // Report name -> per-sample key and scale.
  struct Column {
    const char* name;
    const char* key;
    double scale;
  };
  static constexpr Column kColumns[] = {
      {"ROUGE-L recall", "rouge_l_recall", 1.0},
      {"PSNR", "psnr", 1.0},
      {"CLIP", "clip", 1.0},
      {"MS-SSIM", "ms_ssim", 1.0},
      {"valid", "valid", 100.0},
      {"RNSS", "rnss", 1.0},
      {"EM", "em", 1.0},
      {"table s", "table_s", 1.0},
      {"F1_k", "f1_k", 1.0},
      {"Acc_cell", "acc_cell", 1.0},
  };
  nlohmann::ordered_json out;
  for (const auto& c : kColumns) {
    const auto m = mean(c.key);
    out[c.name] = m ? nlohmann::ordered_json(*m * c.scale) : nlohmann::ordered_json();
  }
  out["samples"] = samples.size();
  return out;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["task"] = task;
  j["settings"] = settings;
  j["aggregate"] = aggregate();
  auto& rows = j["samples"] = nlohmann::ordered_json::array();
  for (const auto& s : samples) {
    nlohmann::ordered_json r;
    r["id"] = s.id;
    r["scores"] = s.scores;
    if (!s.notes.empty()) r["notes"] = s.notes;
    rows.push_back(std::move(r));
  }
  return j;
}

}  // namespace chartcycle
