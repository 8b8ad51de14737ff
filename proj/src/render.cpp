#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "rubblevoid/error.hpp"
#include "rubblevoid/slicing.hpp"

namespace rubblevoid {

namespace {

constexpr std::array<Rgb, 8> kPalette{{
    {31, 119, 180},
    {255, 127, 14},
    {44, 160, 44},
    {214, 39, 40},
    {148, 103, 189},
    {140, 86, 75},
    {227, 119, 194},
    {23, 190, 207},
}};
constexpr Rgb kWhite{255, 255, 255};
constexpr Rgb kGrid{225, 225, 225};
constexpr Rgb kAxis{0, 0, 0};
constexpr Rgb kHighlight{220, 0, 220};

// Pixel mapping shared by the raster and vector renderers.
struct Layout {
  int width = 0;
  int height = 0;
  int margin = 0;
  double s0 = 0.0;
  double z0 = 0.0;
  double px_per_m = 1.0;  // horizontal
  double pz_per_m = 1.0;  // vertical, includes exaggeration
  double s_tick = 1.0;
  double z_tick = 1.0;
  double s_end = 0.0;
  double z_end = 0.0;

  double px(double s) const { return margin + (s - s0) * px_per_m; }
  double py(double z) const { return height - margin - (z - z0) * pz_per_m; }
};

double nice_step(double px_per_m, double min_px) {
  for (double step : {0.25, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0, 500.0}) {
    if (step * px_per_m >= min_px) return step;
  }
  return 1000.0;
}

Layout layout_for(const SliceProfile& p, const RenderOptions& o) {
  if (p.stations.empty()) fail(Errc::InvalidArgument, "cannot render an empty profile");
  if (!(o.vertical_exaggeration > 0.0) || o.width <= 2 * o.margin + 8) {
    fail(Errc::InvalidArgument, "bad render options");
  }
  Layout L;
  L.width = o.width;
  L.margin = o.margin;
  L.s0 = p.stations.front() - 0.5 * p.station_spacing;
  L.s_end = p.stations.back() + 0.5 * p.station_spacing;
  double zlo = std::numeric_limits<double>::infinity(), zhi = -zlo;
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    for (std::size_t s = 0; s < p.stations.size(); ++s) {
      if (!p.occupied[l][s]) continue;
      zlo = std::min(zlo, p.elevation[l][s]);
      zhi = std::max(zhi, p.elevation[l][s]);
    }
  }
  for (const auto& h : o.highlights) {
    zlo = std::min(zlo, h.z_lo);
    zhi = std::max(zhi, h.z_hi);
  }
  if (!std::isfinite(zlo)) zlo = zhi = 0.0;
  L.z0 = std::floor(zlo) - 1.0;
  L.z_end = std::ceil(zhi) + 1.0;
  const double plot_w = o.width - 2 * o.margin;
  L.px_per_m = plot_w / std::max(L.s_end - L.s0, 1e-6);
  L.pz_per_m = L.px_per_m * o.vertical_exaggeration;
  double plot_h = (L.z_end - L.z0) * L.pz_per_m;
  const double max_plot_h = o.max_height - 2 * o.margin;
  if (plot_h > max_plot_h) {
    L.pz_per_m = max_plot_h / (L.z_end - L.z0);
    plot_h = max_plot_h;
  }
  plot_h = std::max(plot_h, 16.0);
  L.height = static_cast<int>(std::ceil(plot_h)) + 2 * o.margin;
  L.s_tick = nice_step(L.px_per_m, 16.0);
  L.z_tick = nice_step(L.pz_per_m, 16.0);
  return L;
}

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, Rgb c) {
  int ax = static_cast<int>(std::lround(x0)), ay = static_cast<int>(std::lround(y0));
  const int bx = static_cast<int>(std::lround(x1)), by = static_cast<int>(std::lround(y1));
  const int dx = std::abs(bx - ax), dy = -std::abs(by - ay);
  const int sx = ax < bx ? 1 : -1, sy = ay < by ? 1 : -1;
  int err = dx + dy;
  while (true) {
    img.set(ax, ay, c);
    if (ax == bx && ay == by) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      ax += sx;
    }
    if (e2 <= dx) {
      err += dx;
      ay += sy;
    }
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string hex(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

}  // namespace

Rgb epoch_color(std::size_t layer) { return kPalette[layer % kPalette.size()]; }

Rgb RgbImage::at(int x, int y) const {
  const auto k = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
  return {pixels[k], pixels[k + 1], pixels[k + 2]};
}

void RgbImage::set(int x, int y, Rgb c) {
  if (x < 0 || y < 0 || x >= width || y >= height) return;
  const auto k = 3 * (static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(x));
  pixels[k] = c.r;
  pixels[k + 1] = c.g;
  pixels[k + 2] = c.b;
}

std::string RgbImage::to_ppm() const {
  std::string out = "P6\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

RgbImage render_profile(const SliceProfile& p, const RenderOptions& opts) {
  const Layout L = layout_for(p, opts);
  RgbImage img;
  img.width = L.width;
  img.height = L.height;
  img.pixels.assign(static_cast<std::size_t>(L.width) * static_cast<std::size_t>(L.height) * 3, 255);

  const double top = L.py(L.z_end), bottom = L.py(L.z0);
  const double left = L.px(L.s0), right = L.px(L.s_end);
  // Metre grid.
  for (double s = std::ceil(L.s0 / L.s_tick) * L.s_tick; s <= L.s_end; s += L.s_tick) {
    draw_line(img, L.px(s), top, L.px(s), bottom, kGrid);
    draw_line(img, L.px(s), bottom, L.px(s), bottom + 4, kAxis);
  }
  for (double z = std::ceil(L.z0 / L.z_tick) * L.z_tick; z <= L.z_end; z += L.z_tick) {
    draw_line(img, left, L.py(z), right, L.py(z), kGrid);
    draw_line(img, left - 4, L.py(z), left, L.py(z), kAxis);
  }
  draw_line(img, left, bottom, right, bottom, kAxis);
  draw_line(img, left, top, left, bottom, kAxis);

  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const Rgb c = epoch_color(l);
    for (std::size_t s = 0; s < p.stations.size(); ++s) {
      if (!p.occupied[l][s]) continue;
      const double x = L.px(p.stations[s]), y = L.py(p.elevation[l][s]);
      if (s + 1 < p.stations.size() && p.occupied[l][s + 1]) {
        draw_line(img, x, y, L.px(p.stations[s + 1]), L.py(p.elevation[l][s + 1]), c);
      } else {
        img.set(static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y)), c);
      }
    }
  }
  for (const auto& h : opts.highlights) {
    const double x0 = L.px(h.station_lo), x1 = L.px(h.station_hi);
    const double y0 = L.py(h.z_lo), y1 = L.py(h.z_hi);
    draw_line(img, x0, y0, x1, y0, kHighlight);
    draw_line(img, x1, y0, x1, y1, kHighlight);
    draw_line(img, x1, y1, x0, y1, kHighlight);
    draw_line(img, x0, y1, x0, y0, kHighlight);
  }
  return img;
}

std::string render_profile_svg(const SliceProfile& p, const RenderOptions& opts) {
  const Layout L = layout_for(p, opts);
  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(L.width) + "\" height=\"" +
         std::to_string(L.height) + "\" viewBox=\"0 0 " + std::to_string(L.width) + " " + std::to_string(L.height) +
         "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"" + hex(kWhite) + "\"/>\n";
  const double top = L.py(L.z_end), bottom = L.py(L.z0);
  const double left = L.px(L.s0), right = L.px(L.s_end);
  out += "<g stroke=\"" + hex(kGrid) + "\" stroke-width=\"1\">\n";
  for (double s = std::ceil(L.s0 / L.s_tick) * L.s_tick; s <= L.s_end; s += L.s_tick) {
    out += "<line x1=\"" + fmt(L.px(s)) + "\" y1=\"" + fmt(top) + "\" x2=\"" + fmt(L.px(s)) + "\" y2=\"" +
           fmt(bottom) + "\"/>\n";
  }
  for (double z = std::ceil(L.z0 / L.z_tick) * L.z_tick; z <= L.z_end; z += L.z_tick) {
    out += "<line x1=\"" + fmt(left) + "\" y1=\"" + fmt(L.py(z)) + "\" x2=\"" + fmt(right) + "\" y2=\"" +
           fmt(L.py(z)) + "\"/>\n";
  }
  out += "</g>\n";
  out += "<polyline fill=\"none\" stroke=\"" + hex(kAxis) + "\" points=\"" + fmt(left) + "," + fmt(top) + " " +
         fmt(left) + "," + fmt(bottom) + " " + fmt(right) + "," + fmt(bottom) + "\"/>\n";
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const std::string color = hex(epoch_color(l));
    std::string run;
    auto flush = [&] {
      if (!run.empty()) {
        out += "<polyline class=\"layer-" + std::to_string(l) + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"1.5\" points=\"" + run + "\"/>\n";
      }
      run.clear();
    };
    for (std::size_t s = 0; s < p.stations.size(); ++s) {
      if (!p.occupied[l][s]) {
        flush();
        continue;
      }
      if (!run.empty()) run += ' ';
      run += fmt(L.px(p.stations[s])) + "," + fmt(L.py(p.elevation[l][s]));
    }
    flush();
  }
  for (const auto& h : opts.highlights) {
    out += "<rect class=\"void\" fill=\"none\" stroke=\"" + hex(kHighlight) + "\" x=\"" + fmt(L.px(h.station_lo)) +
           "\" y=\"" + fmt(L.py(h.z_hi)) + "\" width=\"" + fmt((h.station_hi - h.station_lo) * L.px_per_m) +
           "\" height=\"" + fmt((h.z_hi - h.z_lo) * L.pz_per_m) + "\"/>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace rubblevoid
