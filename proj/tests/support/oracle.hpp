#pragma once

// Independent reference implementations used only by tests. Nothing here
// calls into the engine code paths they check.

#include "chartcycle/spec.hpp"
#include "chartcycle/table.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

namespace chartcycle::oracle {

using Record = std::map<std::string, Cell>;

struct OracleTable {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

inline int order_of(const Cell& c) {
  if (std::holds_alternative<Null>(c)) return 0;
  if (std::holds_alternative<double>(c)) return 1;
  if (std::holds_alternative<std::string>(c)) return 2;
  return 3;
}

inline bool less_cell(const Cell& a, const Cell& b) {
  if (order_of(a) != order_of(b)) return order_of(a) < order_of(b);
  if (auto* x = std::get_if<double>(&a)) return *x < std::get<double>(b);
  if (auto* x = std::get_if<std::string>(&a)) return *x < std::get<std::string>(b);
  if (auto* x = std::get_if<bool>(&a)) return !*x && std::get<bool>(b);
  return false;
}

inline bool equal_cell(const Cell& a, const Cell& b) { return !less_cell(a, b) && !less_cell(b, a); }

inline bool keep(const Cell& c, const FilterTransform& f) {
  auto lit = [](const Literal& l) { return std::visit([](auto v) { return Cell(v); }, l); };
  if (f.op == FilterOp::in) {
    if (std::holds_alternative<Null>(c)) return false;
    for (const auto& v : f.values)
      if (equal_cell(c, lit(v))) return true;
    return false;
  }
  if (std::holds_alternative<Null>(c)) return f.op == FilterOp::ne;
  const Cell v = lit(f.values[0]);
  switch (f.op) {
    case FilterOp::eq: return equal_cell(c, v);
    case FilterOp::ne: return !equal_cell(c, v);
    case FilterOp::lt: return less_cell(c, v);
    case FilterOp::le: return !less_cell(v, c);
    case FilterOp::gt: return less_cell(v, c);
    case FilterOp::ge: return !less_cell(c, v);
    default: return false;
  }
}

inline Cell fold(AggregateOp op, const std::vector<Record>& group, const std::string& field) {
  if (op == AggregateOp::count) return static_cast<double>(group.size());
  std::vector<double> vals;
  for (const auto& r : group)
    if (auto it = r.find(field); it != r.end())
      if (auto* d = std::get_if<double>(&it->second)) vals.push_back(*d);
  if (op == AggregateOp::sum) {
    double s = 0;
    for (double v : vals) s += v;
    return s;
  }
  if (vals.empty()) return Null{};
  std::sort(vals.begin(), vals.end());
  switch (op) {
    case AggregateOp::mean: {
      long double s = 0;
      for (double v : vals) s += v;
      return static_cast<double>(s / vals.size());
    }
    case AggregateOp::min: return vals.front();
    case AggregateOp::max: return vals.back();
    case AggregateOp::median: {
      const std::size_t n = vals.size();
      if (n % 2) return vals[n / 2];
      return (vals[n / 2 - 1] + vals[n / 2]) / 2.0;
    }
    default: return Null{};
  }
}

/// Group by sorting: sort on the key tuple, then fold consecutive runs.
inline std::vector<Record> group_by_sorting(std::vector<Record> rows, const std::vector<std::string>& keys,
                                            const std::vector<std::tuple<AggregateOp, std::string, std::string>>& measures) {
  auto key_less = [&](const Record& a, const Record& b) {
    for (const auto& k : keys) {
      if (less_cell(a.at(k), b.at(k))) return true;
      if (less_cell(b.at(k), a.at(k))) return false;
    }
    return false;
  };
  std::stable_sort(rows.begin(), rows.end(), key_less);
  std::vector<Record> out;
  std::size_t i = 0;
  while (i < rows.size()) {
    std::size_t j = i + 1;
    while (j < rows.size() && !key_less(rows[i], rows[j]) && !key_less(rows[j], rows[i])) ++j;
    std::vector<Record> group(rows.begin() + i, rows.begin() + j);
    Record r;
    for (const auto& k : keys) r[k] = rows[i].at(k);
    for (const auto& [op, field, as] : measures) r[as] = fold(op, group, field);
    out.push_back(std::move(r));
    i = j;
  }
  return out;
}

inline OracleTable execute(const ChartSpec& spec, const Table& raw) {
  std::vector<Record> rows;
  for (const auto& r : raw.rows()) {
    Record rec;
    for (std::size_t c = 0; c < raw.num_columns(); ++c) rec[raw.columns()[c].name] = r[c];
    rows.push_back(std::move(rec));
  }
  for (const auto& t : spec.transforms) {
    if (auto* f = std::get_if<FilterTransform>(&t)) {
      std::vector<Record> kept;
      for (auto& r : rows)
        if (keep(r.at(f->field), *f)) kept.push_back(r);
      rows = std::move(kept);
    } else if (auto* a = std::get_if<AggregateTransform>(&t)) {
      std::vector<std::tuple<AggregateOp, std::string, std::string>> ms;
      for (const auto& m : a->measures) ms.emplace_back(m.op, m.field, m.alias);
      if (a->groupby.empty() && rows.empty()) continue;
      rows = group_by_sorting(rows, a->groupby, ms);
    }
    // Sort transforms do not change the row multiset.
  }
  std::vector<Channel> channels;
  for (Channel c : kAllChannels)
    if (spec.has(c)) channels.push_back(c);
  bool aggregated = false;
  for (Channel c : channels) aggregated |= spec.encoding(c)->aggregate.has_value();
  std::vector<Record> projected;
  if (aggregated) {
    std::vector<std::string> keys;
    std::vector<std::tuple<AggregateOp, std::string, std::string>> ms;
    for (Channel c : channels) {
      const auto* e = spec.encoding(c);
      if (e->aggregate) ms.emplace_back(*e->aggregate, e->field, "@" + std::string(to_string(c)));
      else if (std::find(keys.begin(), keys.end(), e->field) == keys.end()) keys.push_back(e->field);
    }
    for (auto& r : group_by_sorting(rows, keys, ms)) {
      Record p;
      for (Channel c : channels) {
        const auto* e = spec.encoding(c);
        p[std::string(to_string(c))] = e->aggregate ? r.at("@" + std::string(to_string(c))) : r.at(e->field);
      }
      projected.push_back(std::move(p));
    }
  } else {
    for (auto& r : rows) {
      Record p;
      for (Channel c : channels) p[std::string(to_string(c))] = r.at(spec.encoding(c)->field);
      projected.push_back(std::move(p));
    }
  }
  OracleTable out;
  const bool pct = spec.mark == Mark::arc && spec.has(Channel::theta);
  for (auto name : kVisColumnOrder) {
    if (name == "percentage" ? pct : !projected.empty() ? projected[0].count(std::string(name)) > 0
                                                         : false)
      out.columns.emplace_back(name);
  }
  for (const auto& p : projected) {
    std::vector<Cell> row;
    for (const auto& c : out.columns) {
      if (c != "percentage") {
        row.push_back(p.at(c));
        continue;
      }
      // Nested loop over the same facet group.
      double total = 0;
      for (const auto& q : projected) {
        bool same = true;
        for (auto f : {"row", "column"})
          if (p.count(f) && !equal_cell(p.at(f), q.at(f))) same = false;
        if (same)
          if (auto* d = std::get_if<double>(&q.at("theta"))) total += *d;
      }
      const auto* v = std::get_if<double>(&p.at("theta"));
      row.push_back(v ? Cell(total == 0 ? 0.0 : 100.0 * *v / total) : Cell(Null{}));
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

inline bool close(const Cell& a, const Cell& b, double rel) {
  auto* x = std::get_if<double>(&a);
  auto* y = std::get_if<double>(&b);
  if (x && y) {
    if (*x == *y) return true;
    return std::fabs(*x - *y) <= rel * std::max(std::fabs(*x), std::fabs(*y));
  }
  return equal_cell(a, b);
}

/// Sorts rows canonically and compares: exact for every column except the
/// listed tolerant ones, which must agree within `rel`.
inline bool same_multiset(std::vector<std::vector<Cell>> a, std::vector<std::vector<Cell>> b,
                          const std::vector<bool>& tolerant, double rel, std::string* why = nullptr) {
  if (a.size() != b.size()) {
    if (why) *why = "row count " + std::to_string(a.size()) + " vs " + std::to_string(b.size());
    return false;
  }
  // Sort on exact columns only so tolerant rounding cannot reorder rows.
  auto row_less = [&](const std::vector<Cell>& x, const std::vector<Cell>& y) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (tolerant[i]) continue;
      if (less_cell(x[i], y[i])) return true;
      if (less_cell(y[i], x[i])) return false;
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!tolerant[i]) continue;
      if (less_cell(x[i], y[i])) return true;
      if (less_cell(y[i], x[i])) return false;
    }
    return false;
  };
  std::sort(a.begin(), a.end(), row_less);
  std::sort(b.begin(), b.end(), row_less);
  for (std::size_t r = 0; r < a.size(); ++r)
    for (std::size_t c = 0; c < a[r].size(); ++c) {
      const bool ok = tolerant[c] ? close(a[r][c], b[r][c], rel) : equal_cell(a[r][c], b[r][c]);
      if (!ok) {
        if (why) *why = "row " + std::to_string(r) + " column " + std::to_string(c);
        return false;
      }
    }
  return true;
}

/// Exhaustive minimum-cost assignment for RNSS: every injection of the
/// smaller set into the larger, unmatched elements costing 1.
inline double rnss_bruteforce(const std::vector<double>& p, const std::vector<double>& g, double eps = 1e-12) {
  const std::size_t n = std::max(p.size(), g.size());
  if (n == 0) return 1.0;
  auto cost = [&](std::size_t i, std::size_t j) {
    if (i >= p.size() || j >= g.size()) return 1.0;
    return std::min(1.0, std::fabs(p[i] - g[j]) / std::max(std::fabs(g[j]), eps));
  };
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += cost(i, perm[i]);
    best = std::min(best, total);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return 1.0 - best / static_cast<double>(n);
}

}  // namespace chartcycle::oracle
