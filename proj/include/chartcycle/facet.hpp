#pragma once

// Facet augmentation: multi-view variants of single-view specs obtained by
// adding a row or column channel over a low-cardinality categorical field.

#include "chartcycle/render.hpp"
#include "chartcycle/spec.hpp"
#include "chartcycle/table.hpp"

#include <string>
#include <vector>

namespace chartcycle {

struct FacetConfig {
  std::size_t max_cardinality = 6;
  // Horizontal crowding rule: a bar chart whose nominal x has more distinct
  // values than this is faceted by row instead of column.
  std::size_t row_axis_x_cardinality = 8;
};

struct FacetCandidate {
  std::string field;
  std::size_t cardinality = 0;
  Channel axis = Channel::column;

  bool operator==(const FacetCandidate&) const = default;
};

/// String columns not read by any encoding, present after the transform
/// block, with 2..max_cardinality distinct non-null values. Ordered by
/// cardinality, then name. Empty for already-faceted specs.
std::vector<FacetCandidate> find_candidates(const ChartSpec& spec, const Table& raw, const FacetConfig& cfg = {});

/// Adds `c.axis` as a nominal encoding of `c.field`; nothing else changes.
/// Throws ChannelCollision.
ChartSpec inject_facet(const ChartSpec& spec, const FacetCandidate& c);

/// The natural-language request for the faceted variant.
std::string facet_query(const std::string& query, const FacetCandidate& c);

struct AugmentCheck {
  bool pass = false;
  std::vector<std::string> reasons;
};

/// Static part of validation: the spec executes, and every facet value of
/// the raw table keeps at least one row ("empty facet" otherwise).
AugmentCheck check_facet_partitions(const ChartSpec& spec, const Table& raw);

/// check_facet_partitions plus a successful render ("render error").
/// Throws RendererUnavailable when `bridge` is null.
AugmentCheck validate_augmented(const ChartSpec& spec, const Table& raw, RenderBridge* bridge);

}  // namespace chartcycle
