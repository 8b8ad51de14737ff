#include "rubblevoid/voids.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iterator>
#include <limits>
#include <numeric>

#include "rubblevoid/error.hpp"
#include "rubblevoid/kernels.hpp"

namespace rubblevoid {

std::string_view to_string(Cause c) {
  switch (c) {
    case Cause::Natural: return "NATURAL";
    case Cause::Excavation: return "EXCAVATION";
    case Cause::Indeterminate: return "INDETERMINATE";
  }
  return "INDETERMINATE";
}

std::string_view to_string(CauseSource s) { return s == CauseSource::Human ? "HUMAN" : "HEURISTIC"; }

Cause cause_from_string(std::string_view s) {
  if (s == "NATURAL") return Cause::Natural;
  if (s == "EXCAVATION") return Cause::Excavation;
  if (s == "INDETERMINATE") return Cause::Indeterminate;
  fail(Errc::InvalidArgument, "unknown cause '" + std::string(s) + "'");
}

CauseSource cause_source_from_string(std::string_view s) {
  if (s == "HUMAN") return CauseSource::Human;
  if (s == "HEURISTIC") return CauseSource::Heuristic;
  fail(Errc::InvalidArgument, "unknown cause source '" + std::string(s) + "'");
}

std::string_view table_label(Cause c) {
  switch (c) {
    case Cause::Natural: return "Naturally Formed";
    case Cause::Excavation: return "Excavation";
    case Cause::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

Aabb VoidCandidate::bounds() const {
  Aabb box{{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()},
           {-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(),
            -std::numeric_limits<double>::infinity()}};
  for (std::size_t c = 0; c < footprint.size(); ++c) {
    const auto i = static_cast<std::int64_t>(footprint[c] % static_cast<std::size_t>(grid.nx));
    const auto j = static_cast<std::int64_t>(footprint[c] / static_cast<std::size_t>(grid.nx));
    const double x0 = grid.origin_x + static_cast<double>(i) * grid.cell_size;
    const double y0 = grid.origin_y + static_cast<double>(j) * grid.cell_size;
    box.min.x = std::min(box.min.x, x0);
    box.min.y = std::min(box.min.y, y0);
    box.max.x = std::max(box.max.x, x0 + grid.cell_size);
    box.max.y = std::max(box.max.y, y0 + grid.cell_size);
    box.min.z = std::min(box.min.z, bottom[c]);
    box.max.z = std::max(box.max.z, top[c]);
  }
  return box;
}

namespace {

// 4-connected components of `mask`, each listed in ascending cell order and
// ordered by their first cell in raster scan.
std::vector<std::vector<std::size_t>> label_components(const GridSpec& g, const std::vector<std::uint8_t>& mask) {
  std::vector<std::vector<std::size_t>> comps;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || seen[start]) continue;
    std::vector<std::size_t> comp;
    queue.assign(1, start);
    seen[start] = 1;
    while (!queue.empty()) {
      const std::size_t k = queue.back();
      queue.pop_back();
      comp.push_back(k);
      const auto i = static_cast<std::int64_t>(k % static_cast<std::size_t>(g.nx));
      const auto j = static_cast<std::int64_t>(k / static_cast<std::size_t>(g.nx));
      const std::int64_t nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& n : nb) {
        if (!g.contains(n[0], n[1])) continue;
        const std::size_t kk = g.linear(n[0], n[1]);
        if (mask[kk] && !seen[kk]) {
          seen[kk] = 1;
          queue.push_back(kk);
        }
      }
    }
    std::sort(comp.begin(), comp.end());
    comps.push_back(std::move(comp));
  }
  return comps;
}

std::vector<VoidCandidate> detect_pair(const EpochStack& stack, std::size_t k, const DetectParams& params) {
  const HeightField& earlier = stack.layers[k];
  const HeightField& later = stack.layers[k + 1];
  const GridSpec& g = stack.grid();
  const std::vector<double> gap = kernels::gap_map(earlier, later);
  std::vector<std::uint8_t> mask(gap.size(), 0);
  for (std::size_t c = 0; c < gap.size(); ++c) mask[c] = gap[c] >= params.min_gap ? 1 : 0;

  const double ground_top = stack.ground_elevation + params.min_gap;
  std::vector<VoidCandidate> out;
  for (auto& comp : label_components(g, mask)) {
    if (comp.size() < params.min_footprint_cells) continue;
    VoidCandidate v;
    v.grid = g;
    v.earlier_layer = k;
    v.epoch_pair = {earlier.epoch, later.epoch};
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (std::size_t c : comp) {
      const auto i = static_cast<std::int64_t>(c % static_cast<std::size_t>(g.nx));
      const auto j = static_cast<std::int64_t>(c / static_cast<std::size_t>(g.nx));
      v.gap_heights.push_back(gap[c]);
      v.top.push_back(earlier.elevation[c]);
      v.bottom.push_back(later.elevation[c]);
      sx += g.center_x(i);
      sy += g.center_y(j);
      sz += 0.5 * (earlier.elevation[c] + later.elevation[c]);
      const std::int64_t nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (const auto& n : nb) {
        if (!g.contains(n[0], n[1])) {
          v.touches_pile_boundary = true;
          continue;
        }
        const std::size_t kk = g.linear(n[0], n[1]);
        if (mask[kk]) continue;
        if (!later.occupied[kk] || later.elevation[kk] <= ground_top) v.touches_pile_boundary = true;
      }
    }
    const double n = static_cast<double>(comp.size());
    v.centroid = {sx / n, sy / n, sz / n};
    v.footprint = std::move(comp);
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

std::vector<VoidCandidate> detect_gaps(const EpochStack& stack, const DetectParams& params) {
  if (stack.layers.size() < 2) fail(Errc::SingleLayerStack, "gap detection needs at least two layers");
  if (!(params.min_gap > 0.0)) fail(Errc::InvalidArgument, "min_gap must be positive");
  const auto pairs = static_cast<std::int64_t>(stack.layers.size() - 1);
  std::vector<std::vector<VoidCandidate>> per_pair(static_cast<std::size_t>(pairs));
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t k = 0; k < pairs; ++k) {
    per_pair[static_cast<std::size_t>(k)] = detect_pair(stack, static_cast<std::size_t>(k), params);
  }
  std::vector<VoidCandidate> all;
  int next_id = 1;
  for (auto& list : per_pair) {
    for (auto& v : list) {
      v.id = next_id++;
      all.push_back(std::move(v));
    }
  }
  return all;
}

std::vector<double> volume_contributions(const VoidCandidate& v, const GridSpec& grid) {
  std::vector<double> out(v.gap_heights.size());
  const double area = grid.cell_area();
  std::transform(v.gap_heights.begin(), v.gap_heights.end(), out.begin(), [area](double h) { return h * area; });
  return out;
}

VoidMetrics characterize(const VoidCandidate& v, const GridSpec& grid) {
  if (v.footprint.empty()) fail(Errc::EmptyFootprint, "void " + std::to_string(v.id) + " has no cells");
  grid.validate();
  VoidMetrics m;
  for (double c : volume_contributions(v, grid)) m.approx_volume += c;
  m.max_height = *std::max_element(v.gap_heights.begin(), v.gap_heights.end());

  auto member = [&](std::int64_t i, std::int64_t j) {
    return grid.contains(i, j) && std::binary_search(v.footprint.begin(), v.footprint.end(), grid.linear(i, j));
  };
  std::int64_t i_lo = std::numeric_limits<std::int64_t>::max(), i_hi = std::numeric_limits<std::int64_t>::min();
  std::int64_t j_lo = i_lo, j_hi = i_hi;
  double interior_min = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < v.footprint.size(); ++c) {
    const auto i = static_cast<std::int64_t>(v.footprint[c] % static_cast<std::size_t>(grid.nx));
    const auto j = static_cast<std::int64_t>(v.footprint[c] / static_cast<std::size_t>(grid.nx));
    i_lo = std::min(i_lo, i);
    i_hi = std::max(i_hi, i);
    j_lo = std::min(j_lo, j);
    j_hi = std::max(j_hi, j);
    if (member(i - 1, j) && member(i + 1, j) && member(i, j - 1) && member(i, j + 1)) {
      interior_min = std::min(interior_min, v.gap_heights[c]);
    }
  }
  m.min_height = std::isfinite(interior_min) ? interior_min
                                             : *std::min_element(v.gap_heights.begin(), v.gap_heights.end());
  m.xz_width = static_cast<double>(i_hi - i_lo + 1) * grid.cell_size;
  m.yz_width = static_cast<double>(j_hi - j_lo + 1) * grid.cell_size;
  m.surface_access = v.touches_pile_boundary;
  return m;
}

double net_volume(const VoidMetrics& m, double footprint_area, double removed_slab_thickness) {
  return m.approx_volume - footprint_area * removed_slab_thickness;
}

Cause classify_cause(double approx_volume, double footprint_area, std::optional<double> thickness, double margin) {
  if (!(margin >= 0.0)) fail(Errc::InvalidArgument, "margin must be non-negative");
  if (!thickness) return Cause::Indeterminate;
  if (*thickness < 0.0) fail(Errc::NegativeThickness, "removed slab thickness is negative");
  const double expected = *thickness * footprint_area;
  return approx_volume > expected * (1.0 + margin) ? Cause::Natural : Cause::Excavation;
}

Cause classify_cause(const VoidMetrics& m, const VoidCandidate& v, std::optional<double> thickness, double margin) {
  return classify_cause(m.approx_volume, v.footprint_area(), thickness, margin);
}

double footprint_distance(const VoidCandidate& a, const VoidCandidate& b) {
  if (a.grid == b.grid) {
    std::vector<std::size_t> shared;
    std::set_intersection(a.footprint.begin(), a.footprint.end(), b.footprint.begin(), b.footprint.end(),
                          std::back_inserter(shared));
    if (!shared.empty()) return 0.0;
  }
  // For disjoint footprints the closest pair is always between boundary cells.
  auto boundary = [](const VoidCandidate& v) {
    std::vector<std::pair<std::int64_t, std::int64_t>> cells;
    const auto nx = static_cast<std::size_t>(v.grid.nx);
    auto in = [&](std::int64_t i, std::int64_t j) {
      return v.grid.contains(i, j) && std::binary_search(v.footprint.begin(), v.footprint.end(), v.grid.linear(i, j));
    };
    for (std::size_t c : v.footprint) {
      const auto i = static_cast<std::int64_t>(c % nx), j = static_cast<std::int64_t>(c / nx);
      if (!in(i - 1, j) || !in(i + 1, j) || !in(i, j - 1) || !in(i, j + 1)) cells.emplace_back(i, j);
    }
    return cells;
  };
  const auto ca = boundary(a), cb = boundary(b);
  const double cs = a.grid.cell_size;
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  for (const auto& [ia, ja] : ca) {
    for (const auto& [ib, jb] : cb) {
      const std::int64_t gx = std::max<std::int64_t>(0, std::abs(ia - ib) - 1);
      const std::int64_t gy = std::max<std::int64_t>(0, std::abs(ja - jb) - 1);
      best = std::min(best, gx * gx + gy * gy);
      if (best == 0) return 0.0;
    }
  }
  return cs * std::sqrt(static_cast<double>(best));
}

Connectivity connectivity(const std::vector<VoidCandidate>& voids, double adjacency_distance) {
  if (!(adjacency_distance >= 0.0)) fail(Errc::InvalidArgument, "adjacency distance must be non-negative");
  const std::size_t n = voids.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  std::vector<Aabb> boxes;
  boxes.reserve(n);
  for (const auto& v : voids) boxes.push_back(v.bounds());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const Aabb& A = boxes[a];
      const Aabb& B = boxes[b];
      if (A.max.z < B.min.z || B.max.z < A.min.z) continue;
      const double gx = std::max({0.0, B.min.x - A.max.x, A.min.x - B.max.x});
      const double gy = std::max({0.0, B.min.y - A.max.y, A.min.y - B.max.y});
      if (std::hypot(gx, gy) > adjacency_distance + 1e-9) continue;
      if (footprint_distance(voids[a], voids[b]) > adjacency_distance + 1e-9) continue;
      parent[find(a)] = find(b);
    }
  }
  Connectivity out;
  out.component.assign(n, -1);
  std::vector<int> label(n, -1);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t root = find(v);
    if (label[root] < 0) label[root] = out.component_count++;
    out.component[v] = label[root];
  }
  return out;
}

SummaryStats summarize(const std::vector<VoidMetrics>& metrics, double max_pile_depth, int connectivity_components) {
  SummaryStats s;
  s.count = metrics.size();
  s.max_pile_depth = max_pile_depth;
  s.connectivity_components = connectivity_components;
  if (metrics.empty()) return s;
  double hmax = 0.0, hmin = 0.0, width = 0.0;
  for (const auto& m : metrics) {
    hmax += m.max_height;
    hmin += m.min_height;
    width += m.xz_width + m.yz_width;
    s.any_surface_access = s.any_surface_access || m.surface_access;
  }
  const double n = static_cast<double>(metrics.size());
  s.mean_max_height = hmax / n;
  s.mean_min_height = hmin / n;
  s.mean_cross_width = width / (2.0 * n);
  return s;
}

std::string void_table_csv(const std::vector<VoidTableRow>& rows) {
  std::string out(kVoidTableHeader);
  out += '\n';
  char buf[256];
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    std::snprintf(buf, sizeof buf, ",%.2f,%.2f,%.2f,%.2f,%.2f,", m.approx_volume, m.max_height, m.min_height,
                  m.xz_width, m.yz_width);
    out += r.void_id;
    out += buf;
    out += table_label(m.cause);
    out += '\n';
  }
  return out;
}

}  // namespace rubblevoid
