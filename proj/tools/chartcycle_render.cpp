// Reference rasterizer: a spec document with inline data.values on stdin,
// a PNG on stdout. Exit 2 when the document does not parse as a supported
// spec, 3 when it cannot be executed against its data. Charts carry marks
// and axis lines only, no text, so output depends on nothing but the input.

#include "chartcycle/error.hpp"
#include "chartcycle/image.hpp"
#include "chartcycle/spec.hpp"
#include "chartcycle/table.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>

using namespace chartcycle;

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kPalette[] = {{0x4c, 0x78, 0xa8}, {0xf5, 0x85, 0x18}, {0xe4, 0x57, 0x56}, {0x72, 0xb7, 0xb2},
                            {0x54, 0xa2, 0x4b}, {0xee, 0xca, 0x3b}, {0xb2, 0x79, 0xa2}, {0xff, 0x9d, 0xa6},
                            {0x9d, 0x75, 0x5d}, {0xba, 0xb0, 0xac}};
constexpr Rgb kAxis = {0x88, 0x88, 0x88};

Rgb palette(std::size_t i) { return kPalette[i % std::size(kPalette)]; }

class Canvas {
 public:
  explicit Canvas(Image& img) : img_(img) {}

  void pixel(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= img_.width || y >= img_.height) return;
    std::copy(c.begin(), c.end(), img_.at(x, y));
  }
  void rect(double x0, double y0, double x1, double y1, Rgb c) {
    const int ax = static_cast<int>(std::lround(std::min(x0, x1))), bx = static_cast<int>(std::lround(std::max(x0, x1)));
    const int ay = static_cast<int>(std::lround(std::min(y0, y1))), by = static_cast<int>(std::lround(std::max(y0, y1)));
    for (int y = ay; y < std::max(by, ay + 1); ++y)
      for (int x = ax; x < std::max(bx, ax + 1); ++x) pixel(x, y, c);
  }
  void disc(double cx, double cy, double r, Rgb c) {
    for (int y = static_cast<int>(std::floor(cy - r)); y <= static_cast<int>(std::ceil(cy + r)); ++y)
      for (int x = static_cast<int>(std::floor(cx - r)); x <= static_cast<int>(std::ceil(cx + r)); ++x)
        if ((x + 0.5 - cx) * (x + 0.5 - cx) + (y + 0.5 - cy) * (y + 0.5 - cy) <= r * r) pixel(x, y, c);
  }
  void line(double x0, double y0, double x1, double y1, double width, Rgb c) {
    const double len = std::hypot(x1 - x0, y1 - y0);
    const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      disc(x0 + t * (x1 - x0), y0 + t * (y1 - y0), width / 2, c);
    }
  }

 private:
  Image& img_;
};

std::optional<double> number(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return *d;
  return std::nullopt;
}

std::string label(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return "n" + std::to_string(*d);
  if (const auto* s = std::get_if<std::string>(&c)) return "s" + *s;
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "b1" : "b0";
  return "null";
}

// Distinct labels in first-appearance order.
struct Levels {
  std::vector<std::string> order;
  std::map<std::string, std::size_t> index;
  std::size_t add(const Cell& c) {
    const std::string k = label(c);
    auto [it, fresh] = index.emplace(k, order.size());
    if (fresh) order.push_back(k);
    return it->second;
  }
  std::size_t size() const { return order.size(); }
};

struct Box {
  double x0, y0, x1, y1;
};

struct Chart {
  const ChartSpec& spec;
  const Table& vis;
  double scale;

  std::optional<std::size_t> col(const char* name) const { return vis.find(name); }
};

void draw_arc(Canvas& cv, const Chart& ch, const std::vector<const Row*>& rows, const Box& b, Levels& colors) {
  const auto theta = ch.col("theta");
  const auto color = ch.col("color");
  std::vector<double> values;
  std::vector<std::size_t> slots;
  for (const Row* r : rows) {
    values.push_back(theta ? std::max(0.0, number((*r)[*theta]).value_or(0.0)) : 1.0);
    slots.push_back(color ? colors.add((*r)[*color]) : slots.size());
  }
  double total = 0;
  for (double v : values) total += v;
  if (total <= 0) return;
  std::vector<double> ends;
  double acc = 0;
  for (double v : values) ends.push_back((acc += v) / total);
  const double cx = (b.x0 + b.x1) / 2, cy = (b.y0 + b.y1) / 2;
  const double radius = std::min(b.x1 - b.x0, b.y1 - b.y0) / 2;
  for (int y = static_cast<int>(b.y0); y < static_cast<int>(b.y1); ++y)
    for (int x = static_cast<int>(b.x0); x < static_cast<int>(b.x1); ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      if (dx * dx + dy * dy > radius * radius) continue;
      // Clockwise from twelve o'clock.
      double a = std::atan2(dx, -dy) / (2 * M_PI);
      if (a < 0) a += 1;
      const std::size_t k = static_cast<std::size_t>(std::lower_bound(ends.begin(), ends.end(), a) - ends.begin());
      cv.pixel(x, y, palette(slots[std::min(k, slots.size() - 1)]));
    }
}

void draw_cartesian(Canvas& cv, const Chart& ch, const std::vector<const Row*>& rows, const Box& b,
                    const Levels& categories, bool continuous, double cat_lo, double cat_hi, double val_lo,
                    double val_hi, bool horizontal, Levels& colors, double size_lo, double size_hi) {
  const std::size_t cat = *ch.col(horizontal ? "y" : "x");
  const std::size_t val = *ch.col(horizontal ? "x" : "y");
  const auto color = ch.col("color");
  const auto size = ch.col("size");
  const double s = ch.scale;

  // Category position in [0, 1] along the category axis.
  auto cat_pos = [&](const Cell& c) {
    if (continuous) {
      const double v = number(c).value_or(cat_lo);
      return cat_hi > cat_lo ? (v - cat_lo) / (cat_hi - cat_lo) : 0.5;
    }
    const auto it = categories.index.find(label(c));
    return (static_cast<double>(it->second) + 0.5) / static_cast<double>(categories.size());
  };
  auto val_pos = [&](double v) { return (v - val_lo) / (val_hi - val_lo); };
  auto to_xy = [&](double cp, double vp) -> std::pair<double, double> {
    if (horizontal) return {b.x0 + vp * (b.x1 - b.x0), b.y0 + cp * (b.y1 - b.y0)};
    return {b.x0 + cp * (b.x1 - b.x0), b.y1 - vp * (b.y1 - b.y0)};
  };

  cv.line(b.x0, b.y0, b.x0, b.y1, std::max(1.0, s / 2), kAxis);
  cv.line(b.x0, b.y1, b.x1, b.y1, std::max(1.0, s / 2), kAxis);

  const Mark mark = ch.spec.mark;
  if (mark == Mark::bar) {
    const double band = continuous ? 0.6 / std::max<std::size_t>(rows.size(), 1) : 0.8 / static_cast<double>(categories.size());
    const bool grouped = color && *color != cat;
    const double groups = grouped ? static_cast<double>(std::max<std::size_t>(colors.size(), 1)) : 1.0;
    for (const Row* r : rows) {
      const auto v = number((*r)[val]);
      if (!v) continue;
      const std::size_t slot = color ? colors.add((*r)[*color]) : 0;
      const double offset = grouped ? (static_cast<double>(slot) + 0.5) / groups - 0.5 : 0.0;
      const double centre = cat_pos((*r)[cat]) + offset * band;
      const double half = band / groups / 2;
      const auto [ax, ay] = to_xy(centre - half, val_pos(std::clamp(0.0, val_lo, val_hi)));
      const auto [bx, by] = to_xy(centre + half, val_pos(*v));
      cv.rect(ax, ay, bx, by, palette(slot));
    }
    return;
  }

  // Points grouped into series by colour, ordered along the category axis.
  std::map<std::size_t, std::vector<std::pair<double, double>>> series;
  for (const Row* r : rows) {
    const auto v = number((*r)[val]);
    if (!v) continue;
    const std::size_t slot = color ? colors.add((*r)[*color]) : 0;
    series[slot].emplace_back(cat_pos((*r)[cat]), val_pos(*v));
    if (mark == Mark::point) {
      double radius = 3 * s;
      if (size && size_hi > size_lo)
        radius = (2 + 6 * std::sqrt((number((*r)[*size]).value_or(size_lo) - size_lo) / (size_hi - size_lo))) * s;
      const auto [x, y] = to_xy(series[slot].back().first, series[slot].back().second);
      cv.disc(x, y, radius, palette(slot));
    }
  }
  if (mark == Mark::point) return;
  for (auto& [slot, pts] : series) {
    std::stable_sort(pts.begin(), pts.end(), [](const auto& a, const auto& c) { return a.first < c.first; });
    if (mark == Mark::area) {
      const double base = val_pos(std::clamp(0.0, val_lo, val_hi));
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const int steps = std::max(1, static_cast<int>((pts[i + 1].first - pts[i].first) * (b.x1 - b.x0 + b.y1 - b.y0)));
        for (int k = 0; k <= steps; ++k) {
          const double t = static_cast<double>(k) / steps;
          const double cp = pts[i].first + t * (pts[i + 1].first - pts[i].first);
          const double vp = pts[i].second + t * (pts[i + 1].second - pts[i].second);
          const auto [ax, ay] = to_xy(cp, base);
          const auto [bx, by] = to_xy(cp, vp);
          cv.line(ax, ay, bx, by, 1.0, palette(slot));
        }
      }
    }
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const auto [ax, ay] = to_xy(pts[i].first, pts[i].second);
      const auto [bx, by] = to_xy(pts[i + 1].first, pts[i + 1].second);
      cv.line(ax, ay, bx, by, std::max(1.0, 1.5 * s), palette(slot));
    }
    if (pts.size() == 1) {
      const auto [x, y] = to_xy(pts[0].first, pts[0].second);
      cv.disc(x, y, 2 * s, palette(slot));
    }
  }
}

Image rasterize(const ChartSpec& spec, const Table& vis, double scale) {
  const Chart ch{spec, vis, scale};
  const auto facet_col = ch.col("column") ? ch.col("column") : ch.col("row");
  const bool stacked = !ch.col("column") && ch.col("row");

  // Panels in ascending facet order.
  std::vector<Cell> facet_values;
  if (facet_col) {
    for (const auto& r : vis.rows()) facet_values.push_back(r[*facet_col]);
    std::sort(facet_values.begin(), facet_values.end(), [](const Cell& a, const Cell& b) { return compare_cells(a, b) < 0; });
    facet_values.erase(std::unique(facet_values.begin(), facet_values.end()), facet_values.end());
  }
  const std::size_t panels = facet_col ? std::max<std::size_t>(facet_values.size(), 1) : 1;
  const int pw = static_cast<int>(std::lround(200 * scale)), ph = static_cast<int>(std::lround(150 * scale));
  const int gap = static_cast<int>(std::lround(8 * scale)), margin = static_cast<int>(std::lround(12 * scale));
  const int n = static_cast<int>(panels);
  Image img(stacked ? pw : n * pw + (n - 1) * gap, stacked ? n * ph + (n - 1) * gap : ph);
  Canvas cv(img);

  std::vector<std::vector<const Row*>> rows(panels);
  for (const auto& r : vis.rows()) {
    std::size_t p = 0;
    if (facet_col)
      p = static_cast<std::size_t>(std::find(facet_values.begin(), facet_values.end(), r[*facet_col]) - facet_values.begin());
    rows[p].push_back(&r);
  }

  Levels colors;
  if (const auto c = ch.col("color"))
    for (const auto& r : vis.rows()) colors.add(r[*c]);

  auto panel_box = [&](std::size_t p) {
    const double ox = stacked ? 0 : static_cast<double>(p) * (pw + gap);
    const double oy = stacked ? static_cast<double>(p) * (ph + gap) : 0;
    return Box{ox + margin, oy + margin, ox + pw - margin, oy + ph - margin};
  };

  if (spec.mark == Mark::arc) {
    for (std::size_t p = 0; p < panels; ++p) draw_arc(cv, ch, rows[p], panel_box(p), colors);
    return img;
  }
  if (!ch.col("x") || !ch.col("y")) return img;

  const auto xcol = *ch.col("x"), ycol = *ch.col("y");
  const bool horizontal = vis.columns()[xcol].type == ColumnType::number && vis.columns()[ycol].type != ColumnType::number;
  const std::size_t cat = horizontal ? ycol : xcol, val = horizontal ? xcol : ycol;
  const bool continuous = vis.columns()[cat].type == ColumnType::number && spec.mark != Mark::bar;

  Levels categories;
  double cat_lo = INFINITY, cat_hi = -INFINITY, val_lo = 0, val_hi = 0, size_lo = INFINITY, size_hi = -INFINITY;
  const auto size = ch.col("size");
  for (const auto& r : vis.rows()) {
    categories.add(r[cat]);
    if (const auto v = number(r[cat])) cat_lo = std::min(cat_lo, *v), cat_hi = std::max(cat_hi, *v);
    if (const auto v = number(r[val])) val_lo = std::min(val_lo, *v), val_hi = std::max(val_hi, *v);
    if (size)
      if (const auto v = number(r[*size])) size_lo = std::min(size_lo, *v), size_hi = std::max(size_hi, *v);
  }
  if (val_hi <= val_lo) val_hi = val_lo + 1;
  for (std::size_t p = 0; p < panels; ++p)
    draw_cartesian(cv, ch, rows[p], panel_box(p), categories, continuous, cat_lo, cat_hi, val_lo, val_hi, horizontal,
                   colors, size_lo, size_hi);
  return img;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rasterize a chart spec with inline data.values (stdin) to PNG (stdout)."};
  double scale = 2.0;
  app.add_option("--scale", scale, "Raster scale factor")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const std::string input(std::istreambuf_iterator<char>(std::cin), {});
  ChartSpec spec;
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(input);
    if (!doc.is_object()) throw SyntaxError("document is not an object");
    spec = parse_spec(input);
    validate_spec(spec);
  } catch (const std::exception& e) {
    std::cerr << "compile error: " << e.what() << "\n";
    return 2;
  }
  try {
    if (!doc.contains("data") || !doc["data"].contains("values")) throw MissingField("document has no data.values");
    const Table data = table_from_values(doc["data"]["values"]);
    const Table vis = execute_transforms(spec, data);
    const std::string png = encode_png(rasterize(spec, vis, scale));
    std::cout.write(png.data(), static_cast<std::streamsize>(png.size()));
    std::cout.flush();
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
