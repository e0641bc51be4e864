#include "chartcycle/error.hpp"
#include "chartcycle/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace chartcycle {

namespace {

struct Plane {
  int w = 0;
  int h = 0;
  std::vector<double> v;
  double at(int x, int y) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane luma(const Image& img) {
  Plane p{img.width, img.height, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
  for (std::size_t i = 0; i < p.v.size(); ++i) {
    const std::uint8_t* px = &img.pixels[i * 3];
    p.v[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
  }
  return p;
}

constexpr int kWindow = 11;
constexpr double kC1 = (0.01 * 255) * (0.01 * 255);
constexpr double kC2 = (0.03 * 255) * (0.03 * 255);
constexpr std::array<double, 5> kScaleWeights = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
constexpr int kMinMultiScaleSide = 176;

std::array<double, kWindow> gaussian() {
  std::array<double, kWindow> g{};
  double sum = 0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - kWindow / 2;
    g[i] = std::exp(-(d * d) / (2 * 1.5 * 1.5));
    sum += g[i];
  }
  for (double& x : g) x /= sum;
  return g;
}

// Valid-mode separable Gaussian filter.
Plane filter(const Plane& p) {
  static const auto g = gaussian();
  const int ow = p.w - kWindow + 1, oh = p.h - kWindow + 1;
  Plane horiz{ow, p.h, std::vector<double>(static_cast<std::size_t>(ow) * p.h)};
  for (int y = 0; y < p.h; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * p.at(x + k, y);
      horiz.v[static_cast<std::size_t>(y) * ow + x] = s;
    }
  Plane out{ow, oh, std::vector<double>(static_cast<std::size_t>(ow) * oh)};
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int k = 0; k < kWindow; ++k) s += g[k] * horiz.at(x, y + k);
      out.v[static_cast<std::size_t>(y) * ow + x] = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out{a.w, a.h, std::vector<double>(a.v.size())};
  for (std::size_t i = 0; i < a.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

struct SsimParts {
  double ssim = 0;
  double cs = 0;
};

SsimParts local_ssim(const Plane& x, const Plane& y) {
  std::vector<double> mx, my, sxx, syy, sxy;
  if (x.w >= kWindow && x.h >= kWindow) {
    const Plane fx = filter(x), fy = filter(y);
    const Plane fxx = filter(product(x, x)), fyy = filter(product(y, y)), fxy = filter(product(x, y));
    mx = fx.v;
    my = fy.v;
    sxx = fxx.v;
    syy = fyy.v;
    sxy = fxy.v;
  } else {
    // Smaller than one window: a single window over the whole plane.
    double a = 0, b = 0, aa = 0, bb = 0, ab = 0;
    const double n = static_cast<double>(x.v.size());
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      a += x.v[i];
      b += y.v[i];
      aa += x.v[i] * x.v[i];
      bb += y.v[i] * y.v[i];
      ab += x.v[i] * y.v[i];
    }
    mx = {a / n};
    my = {b / n};
    sxx = {aa / n};
    syy = {bb / n};
    sxy = {ab / n};
  }
  double ssim_sum = 0, cs_sum = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double cs = (2 * cov + kC2) / (vx + vy + kC2);
    const double l = (2 * mx[i] * my[i] + kC1) / (mx[i] * mx[i] + my[i] * my[i] + kC1);
    cs_sum += cs;
    ssim_sum += l * cs;
  }
  const double n = static_cast<double>(mx.size());
  return {ssim_sum / n, cs_sum / n};
}

Plane downsample(const Plane& p) {
  const int w = p.w / 2, h = p.h / 2;
  Plane out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out.v[static_cast<std::size_t>(y) * w + x] =
          (p.at(2 * x, 2 * y) + p.at(2 * x + 1, 2 * y) + p.at(2 * x, 2 * y + 1) + p.at(2 * x + 1, 2 * y + 1)) / 4.0;
  return out;
}

double finite_unit(double v) { return std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0; }

}  // namespace

double psnr(const Image* pred, const Image* gold, double cap_db) {
  if (!pred || !gold || pred->empty() || gold->empty()) return 0.0;
  const Image a = resize_bilinear(*pred, gold->width, gold->height);
  if (a.pixels.size() != gold->pixels.size()) throw DimensionMismatch("resized image size differs");
  long double sq = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const int d = static_cast<int>(a.pixels[i]) - static_cast<int>(gold->pixels[i]);
    sq += static_cast<long double>(d) * d;
  }
  if (sq == 0) return cap_db;
  const double mse = static_cast<double>(sq / static_cast<long double>(a.pixels.size()));
  return std::min(cap_db, 10.0 * std::log10(255.0 * 255.0 / mse));
}

double ssim(const Image& a, const Image& b) {
  if (a.width != b.width || a.height != b.height) throw DimensionMismatch("ssim needs equal sizes");
  if (a.pixels == b.pixels) return 1.0;
  return finite_unit(local_ssim(luma(a), luma(b)).ssim);
}

double ms_ssim(const Image* pred, const Image* gold) {
  if (!pred || !gold || pred->empty() || gold->empty()) return 0.0;
  const Image a = resize_bilinear(*pred, gold->width, gold->height);
  if (a.pixels == gold->pixels) return 1.0;
  if (std::min(a.width, a.height) < kMinMultiScaleSide) return ssim(a, *gold);
  Plane x = luma(a), y = luma(*gold);
  double result = 1.0;
  for (std::size_t s = 0; s < kScaleWeights.size(); ++s) {
    const SsimParts parts = local_ssim(x, y);
    const bool last = s + 1 == kScaleWeights.size();
    const double term = std::max(0.0, last ? parts.ssim : parts.cs);
    result *= std::pow(term, kScaleWeights[s]);
    if (!last) {
      x = downsample(x);
      y = downsample(y);
    }
  }
  return finite_unit(result);
}

double cosine_to_unit(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw EvaluationError("embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.5;
  const double cos = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return finite_unit((1.0 + cos) / 2.0);
}

std::optional<double> clip_similarity(const std::string& pred_png, const std::string& gold_png, ImageEmbedder* embedder) {
  if (!embedder) return std::nullopt;
  if (pred_png.empty() || gold_png.empty()) return 0.0;
  return cosine_to_unit(embedder->embed(pred_png), embedder->embed(gold_png));
}

}  // namespace chartcycle
