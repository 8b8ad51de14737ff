#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "rubblevoid/error.hpp"
#include "rubblevoid/synthetic.hpp"
#include "rubblevoid/voids.hpp"

using namespace rubblevoid;

namespace {

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::Io;
}

GridSpec grid(std::int64_t nx, std::int64_t ny, double c) {
  GridSpec g;
  g.cell_size = c;
  g.nx = nx;
  g.ny = ny;
  return g;
}

HeightField layer(const GridSpec& g, int day, double z) {
  HeightField hf = HeightField::empty(g, parse_epoch("2021-06-25T00:00:00Z") + std::chrono::hours(24 * day));
  std::fill(hf.occupied.begin(), hf.occupied.end(), 1);
  std::fill(hf.elevation.begin(), hf.elevation.end(), z);
  return hf;
}

// Lowers `hf` by `depth` over cells [i0, i1) x [j0, j1).
void dig(HeightField& hf, std::int64_t i0, std::int64_t i1, std::int64_t j0, std::int64_t j1, double depth) {
  for (std::int64_t j = j0; j < j1; ++j) {
    for (std::int64_t i = i0; i < i1; ++i) hf.elevation[hf.grid.linear(i, j)] -= depth;
  }
}

// Candidate over a rectangle of cells with explicit per-cell heights.
VoidCandidate rect(const GridSpec& g, std::int64_t i0, std::int64_t i1, std::int64_t j0, std::int64_t j1,
                   const std::function<double(std::int64_t, std::int64_t)>& h, double floor = 0.0) {
  VoidCandidate v;
  v.grid = g;
  for (std::int64_t j = j0; j < j1; ++j) {
    for (std::int64_t i = i0; i < i1; ++i) {
      v.footprint.push_back(g.linear(i, j));
      v.gap_heights.push_back(h(i, j));
      v.bottom.push_back(floor);
      v.top.push_back(floor + h(i, j));
    }
  }
  return v;
}

}  // namespace

TEST(DetectGaps, OneBoxBetweenTwoLayers) {
  const GridSpec g = grid(40, 40, 0.25);
  const HeightField a = layer(g, 0, 5.0);
  HeightField b = layer(g, 1, 5.0);
  dig(b, 10, 20, 12, 18, 1.2);
  const auto voids = detect_gaps(build_stack({a, b}, 0.0), {});
  ASSERT_EQ(voids.size(), 1u);
  const VoidCandidate& v = voids[0];
  EXPECT_EQ(v.id, 1);
  EXPECT_EQ(v.footprint.size(), 60u);
  EXPECT_TRUE(std::is_sorted(v.footprint.begin(), v.footprint.end()));
  EXPECT_NEAR(v.centroid.x, 3.75, 1e-12);
  EXPECT_NEAR(v.centroid.y, 3.75, 1e-12);
  EXPECT_NEAR(v.centroid.z, 4.4, 1e-12);
  EXPECT_FALSE(v.touches_pile_boundary);
  const Aabb box = v.bounds();
  EXPECT_EQ(box.min.x, 2.5);
  EXPECT_EQ(box.max.x, 5.0);
  EXPECT_NEAR(box.min.z, 3.8, 1e-12);
  EXPECT_EQ(box.max.z, 5.0);

  const VoidMetrics m = characterize(v, g);
  EXPECT_NEAR(m.approx_volume, 1.2 * 60 * 0.0625, 1e-12);
  EXPECT_NEAR(m.max_height, 1.2, 1e-12);
  EXPECT_NEAR(m.min_height, 1.2, 1e-12);
  EXPECT_EQ(m.xz_width, 2.5);
  EXPECT_EQ(m.yz_width, 1.5);
  EXPECT_FALSE(m.surface_access);
}

TEST(DetectGaps, FiltersSmallAndShallowPatches) {
  const GridSpec g = grid(30, 30, 0.5);
  const HeightField a = layer(g, 0, 3.0);
  HeightField b = layer(g, 1, 3.0);
  dig(b, 2, 5, 2, 5, 1.0);     // 9 cells, below the 16-cell minimum
  dig(b, 10, 20, 10, 20, 0.1);  // shallower than min_gap
  dig(b, 22, 27, 22, 27, 0.5);  // kept
  const auto voids = detect_gaps(build_stack({a, b}, 0.0), {});
  ASSERT_EQ(voids.size(), 1u);
  EXPECT_EQ(voids[0].footprint.size(), 25u);
  DetectParams loose;
  loose.min_footprint_cells = 1;
  loose.min_gap = 0.05;
  EXPECT_EQ(detect_gaps(build_stack({a, b}, 0.0), loose).size(), 3u);
}

TEST(DetectGaps, NumbersAcrossPairs) {
  const GridSpec g = grid(20, 20, 0.5);
  const HeightField a = layer(g, 0, 4.0);
  HeightField b = layer(g, 1, 4.0);
  dig(b, 1, 6, 1, 6, 1.0);
  dig(b, 10, 15, 1, 6, 1.0);
  HeightField c = b;
  c.epoch += std::chrono::hours(24);
  dig(c, 5, 10, 12, 17, 0.5);
  const auto voids = detect_gaps(build_stack({a, b, c}, 0.0), {});
  ASSERT_EQ(voids.size(), 3u);
  EXPECT_EQ(voids[0].earlier_layer, 0u);
  EXPECT_EQ(voids[1].earlier_layer, 0u);
  EXPECT_EQ(voids[2].earlier_layer, 1u);
  EXPECT_LT(voids[0].footprint.front(), voids[1].footprint.front());
  for (int k = 0; k < 3; ++k) EXPECT_EQ(voids[k].id, k + 1);
  EXPECT_EQ(voids[2].epoch_pair, std::make_pair(b.epoch, c.epoch));
}

TEST(DetectGaps, SurfaceAccessAtPileEdge) {
  const GridSpec g = grid(20, 20, 0.5);
  HeightField a = layer(g, 0, 3.0);
  HeightField b = layer(g, 1, 3.0);
  dig(b, 0, 5, 5, 10, 1.0);  // touches the grid edge
  dig(b, 10, 15, 10, 15, 1.0);
  b.occupied[g.linear(15, 12)] = 0;  // unobserved neighbour
  const auto voids = detect_gaps(build_stack({a, b}, 0.0), {});
  ASSERT_EQ(voids.size(), 2u);
  EXPECT_TRUE(voids[0].touches_pile_boundary);
  EXPECT_TRUE(voids[1].touches_pile_boundary);
  EXPECT_EQ(code_of([&] { detect_gaps(build_stack({a}, 0.0), {}); }), Errc::SingleLayerStack);
}

TEST(DetectGaps, GapCellsAllAboveThreshold) {
  const GridSpec g = grid(40, 40, 0.25);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto rng = CounterRng::derive(s, 77);
    HeightField a = layer(g, 0, 0.0), b = layer(g, 1, 0.0);
    for (std::size_t k = 0; k < g.cell_count(); ++k) {
      a.elevation[k] = 3 + std::sin(0.3 * static_cast<double>(k % 40)) + 0.4 * rng.normal(k);
      b.elevation[k] = 3 + std::sin(0.3 * static_cast<double>(k % 40)) + 0.4 * rng.normal(k + 5000);
    }
    DetectParams p;
    p.min_footprint_cells = 2;
    std::size_t cells = 0;
    for (const auto& v : detect_gaps(build_stack({a, b}, 0.0), p)) {
      for (std::size_t c = 0; c < v.footprint.size(); ++c) {
        const std::size_t k = v.footprint[c];
        EXPECT_EQ(v.gap_heights[c], a.elevation[k] - b.elevation[k]);
        EXPECT_GE(v.gap_heights[c], p.min_gap);
      }
      cells += v.footprint.size();
    }
    std::size_t expect = 0;
    for (std::size_t k = 0; k < g.cell_count(); ++k) expect += a.elevation[k] - b.elevation[k] >= p.min_gap;
    EXPECT_LE(cells, expect);
  }
}

TEST(Characterize, ErodedMinimumAndWidths) {
  const GridSpec g = grid(20, 20, 0.5);
  // Bowl: 0.2 on the rim, 1 + i/10 inside.
  const VoidCandidate v = rect(g, 2, 8, 3, 7, [](std::int64_t i, std::int64_t j) {
    return (i == 2 || i == 7 || j == 3 || j == 6) ? 0.2 : 1.0 + 0.1 * static_cast<double>(i);
  });
  const VoidMetrics m = characterize(v, g);
  EXPECT_NEAR(m.min_height, 1.3, 1e-12);
  EXPECT_NEAR(m.max_height, 1.6, 1e-12);
  EXPECT_EQ(m.xz_width, 3.0);
  EXPECT_EQ(m.yz_width, 2.0);
  // A single row has no interior; the minimum falls back to all cells.
  const VoidCandidate line = rect(g, 0, 5, 0, 1, [](std::int64_t i, std::int64_t) { return 0.5 + i; });
  EXPECT_EQ(characterize(line, g).min_height, 0.5);
  EXPECT_EQ(code_of([&] { characterize(VoidCandidate{}, g); }), Errc::EmptyFootprint);
}

TEST(Characterize, VolumeIsSumOfContributions) {
  const GridSpec g = grid(30, 30, 0.3);
  const auto rng = CounterRng::derive(4, 4);
  const VoidCandidate v =
      rect(g, 3, 19, 7, 22, [&](std::int64_t i, std::int64_t j) { return 0.15 + rng.uniform(i * 100 + j); });
  const auto parts = volume_contributions(v, g);
  double sum = 0.0;
  for (std::size_t c = 0; c < v.footprint.size(); ++c) sum += v.gap_heights[c] * 0.09;
  EXPECT_NEAR(characterize(v, g).approx_volume, std::accumulate(parts.begin(), parts.end(), 0.0), 1e-12);
  EXPECT_NEAR(characterize(v, g).approx_volume, sum, 1e-9);
  const VoidMetrics m = characterize(v, g);
  EXPECT_LE(m.min_height, m.max_height);
  EXPECT_NEAR(net_volume(m, v.footprint_area(), 0.1), m.approx_volume - 0.1 * v.footprint_area(), 1e-12);
}

TEST(Classify, Examples) {
  // 10 m^2 footprint, 0.3 m slab -> 3 m^3 expected; margin 0.25 -> threshold 3.75.
  EXPECT_EQ(classify_cause(3.76, 10, 0.3, 0.25), Cause::Natural);
  EXPECT_EQ(classify_cause(3.75, 10, 0.3, 0.25), Cause::Excavation);
  EXPECT_EQ(classify_cause(2.0, 10, 0.3, 0.25), Cause::Excavation);
  EXPECT_EQ(classify_cause(20.0, 10, std::nullopt, 0.25), Cause::Indeterminate);
  EXPECT_EQ(classify_cause(0.1, 10, 0.0, 0.25), Cause::Natural);
  EXPECT_EQ(code_of([] { classify_cause(1, 1, -0.1, 0.25); }), Errc::NegativeThickness);
  EXPECT_EQ(code_of([] { classify_cause(1, 1, 0.1, -0.25); }), Errc::InvalidArgument);
}

TEST(Classify, MonotoneInThickness) {
  // Raising the thickness can only move NATURAL to EXCAVATION.
  for (double vol : {0.5, 2.0, 7.0}) {
    bool seen_excavation = false;
    for (double t = 0.0; t <= 2.0; t += 0.05) {
      const Cause c = classify_cause(vol, 4.0, t, 0.25);
      if (seen_excavation) EXPECT_EQ(c, Cause::Excavation);
      seen_excavation = seen_excavation || c == Cause::Excavation;
    }
  }
}

TEST(Connectivity, AdjacentAndSeparate) {
  const GridSpec g = grid(40, 40, 0.25);
  const auto h = [](std::int64_t, std::int64_t) { return 1.0; };
  std::vector<VoidCandidate> vs = {
      rect(g, 0, 4, 0, 4, h),     // a
      rect(g, 5, 9, 0, 4, h),     // 0.25 m from a
      rect(g, 20, 24, 0, 4, h),   // far
      rect(g, 10, 14, 0, 4, h, 5.0),  // 0.25 m from the second in XY but higher up
  };
  const Connectivity c = connectivity(vs, 0.5);
  EXPECT_EQ(c.component, (std::vector<int>{0, 0, 1, 2}));
  EXPECT_EQ(c.component_count, 3);
  EXPECT_DOUBLE_EQ(footprint_distance(vs[0], vs[1]), 0.25);
  EXPECT_DOUBLE_EQ(footprint_distance(vs[0], vs[2]), 4.0);
  EXPECT_EQ(connectivity(vs, 0.1).component_count, 4);
  EXPECT_EQ(connectivity({}, 0.5).component_count, 0);
}

TEST(Connectivity, FootprintDistanceMatchesCellScan) {
  const GridSpec g = grid(30, 30, 0.5);
  const auto rng = CounterRng::derive(8, 8);
  for (int t = 0; t < 40; ++t) {
    const auto box = [&](int k) {
      const auto i0 = static_cast<std::int64_t>(25 * rng.uniform(8 * t + k));
      const auto j0 = static_cast<std::int64_t>(25 * rng.uniform(8 * t + k + 1));
      return rect(g, i0, i0 + 1 + static_cast<std::int64_t>(4 * rng.uniform(8 * t + k + 2)), j0,
                  j0 + 1 + static_cast<std::int64_t>(4 * rng.uniform(8 * t + k + 3)),
                  [](std::int64_t, std::int64_t) { return 1.0; });
    };
    const VoidCandidate a = box(0), b = box(4);
    double best = 1e300;
    for (std::size_t ka : a.footprint) {
      for (std::size_t kb : b.footprint) {
        const double ia = static_cast<double>(ka % 30), ja = static_cast<double>(ka / 30);
        const double ib = static_cast<double>(kb % 30), jb = static_cast<double>(kb / 30);
        const double gx = std::max(0.0, std::abs(ia - ib) - 1), gy = std::max(0.0, std::abs(ja - jb) - 1);
        best = std::min(best, ka == kb ? 0.0 : 0.5 * std::hypot(gx, gy));
      }
    }
    EXPECT_DOUBLE_EQ(footprint_distance(a, b), best);
    EXPECT_DOUBLE_EQ(footprint_distance(b, a), best);
  }
}

TEST(Summary, MeansOverVoids) {
  VoidMetrics a, b;
  a.max_height = 2.0;
  a.min_height = 0.5;
  a.xz_width = 3.0;
  a.yz_width = 1.0;
  b.max_height = 1.0;
  b.min_height = 0.1;
  b.xz_width = 2.0;
  b.yz_width = 2.0;
  b.surface_access = true;
  const SummaryStats s = summarize({a, b}, 4.5, 2);
  EXPECT_EQ(s.count, 2u);
  EXPECT_DOUBLE_EQ(*s.mean_max_height, 1.5);
  EXPECT_DOUBLE_EQ(*s.mean_min_height, 0.3);
  EXPECT_DOUBLE_EQ(*s.mean_cross_width, 2.0);
  EXPECT_TRUE(s.any_surface_access);
  const SummaryStats none = summarize({}, 4.5);
  EXPECT_EQ(none.count, 0u);
  EXPECT_FALSE(none.mean_max_height.has_value());
  EXPECT_EQ(none.max_pile_depth, 4.5);
}

TEST(VoidTable, FormatsTwoDecimals) {
  VoidMetrics m;
  m.approx_volume = 10.944;
  m.max_height = 1.135;
  m.min_height = 0.26;
  m.xz_width = 3.41;
  m.yz_width = 5.725;
  m.cause = Cause::Natural;
  const std::string csv = void_table_csv({{"Pink", m}});
  EXPECT_EQ(csv.substr(0, kVoidTableHeader.size()), kVoidTableHeader);
  EXPECT_NE(csv.find("\nPink,10.94,1.14,0.26,3.41,5.7"), std::string::npos);
  EXPECT_EQ(csv.back(), '\n');
  EXPECT_EQ(void_table_csv({}), std::string(kVoidTableHeader) + "\n");
  for (Cause c : {Cause::Natural, Cause::Excavation, Cause::Indeterminate}) {
    EXPECT_EQ(cause_from_string(to_string(c)), c);
  }
  EXPECT_EQ(code_of([] { cause_from_string("MAYBE"); }), Errc::InvalidArgument);
}
