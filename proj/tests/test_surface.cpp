#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "rubblevoid/error.hpp"
#include "rubblevoid/surface.hpp"
#include "rubblevoid/synthetic.hpp"
#include "test_support.hpp"

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

GridSpec grid(double ox, double oy, double c, std::int64_t nx, std::int64_t ny) {
  GridSpec g;
  g.origin_x = ox;
  g.origin_y = oy;
  g.cell_size = c;
  g.nx = nx;
  g.ny = ny;
  return g;
}

PointCloud scatter(std::uint64_t seed, std::size_t n, double w, double h) {
  const auto rng = CounterRng::derive(seed, 5);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    c.points.push_back({w * rng.uniform(3 * i), h * rng.uniform(3 * i + 1), 10 * rng.normal(3 * i + 2)});
  }
  c.epoch = parse_epoch("2021-06-25T00:00:00Z");
  return c;
}

HeightField flat(const GridSpec& g, double z, const std::string& when) {
  HeightField hf = HeightField::empty(g, parse_epoch(when));
  for (std::size_t k = 0; k < g.cell_count(); ++k) {
    hf.elevation[k] = z;
    hf.occupied[k] = 1;
  }
  return hf;
}

}  // namespace

TEST(GridSpec, LocateAndCovering) {
  const GridSpec g = grid(10, 20, 0.5, 4, 3);
  EXPECT_EQ(g.locate(10, 20), std::optional<std::size_t>(0));
  EXPECT_EQ(g.locate(11.99, 21.49), std::optional<std::size_t>(g.linear(3, 2)));
  EXPECT_FALSE(g.locate(12, 20));  // max edge is open
  EXPECT_FALSE(g.locate(9.999, 20));
  EXPECT_FALSE(g.locate(std::nan(""), 20));

  const GridSpec c = GridSpec::covering({{0, 0, 0}, {10, 2.6, 0}}, 0.25);
  EXPECT_EQ(c.nx, 40);
  EXPECT_EQ(c.ny, 11);
  EXPECT_EQ(GridSpec::covering({{1, 1, 0}, {1, 1, 0}}, 0.25).nx, 1);
  EXPECT_EQ(code_of([] { grid(0, 0, 0, 1, 1).validate(); }), Errc::NonPositiveCell);
  EXPECT_EQ(code_of([] { grid(0, 0, 1, 0, 1).validate(); }), Errc::InvalidArgument);
}

TEST(Rasterize, TwoPointsInOneCell) {
  PointCloud c;
  c.points = {{0.1, 0.1, 1.0}, {0.2, 0.2, 3.0}};
  const GridSpec g = grid(0, 0, 1, 2, 2);
  const HeightField hi = rasterize_dsm(c, g, SurfaceRule::MaxZ);
  const HeightField lo = rasterize_dsm(c, g, SurfaceRule::MinZ);
  EXPECT_EQ(hi.elevation[0], 3.0);
  EXPECT_EQ(lo.elevation[0], 1.0);
  EXPECT_EQ(hi.occupied_count(), 1u);
  EXPECT_EQ(code_of([&] { rasterize_dsm(PointCloud{}, g, SurfaceRule::MaxZ); }), Errc::EmptyCloud);
}

TEST(Rasterize, MatchesPerCellScan) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PointCloud c = scatter(s, 3000, 12, 9);
    const GridSpec g = grid(-1, 0.5, 0.7, 17, 12);
    for (SurfaceRule rule : {SurfaceRule::MaxZ, SurfaceRule::MinZ}) {
      const HeightField hf = rasterize_dsm(c, g, rule);
      std::vector<double> expect(g.cell_count(), std::numeric_limits<double>::quiet_NaN());
      for (const auto& p : c.points) {
        const auto k = g.locate(p.x, p.y);
        if (!k) continue;
        double& e = expect[*k];
        if (std::isnan(e) || (rule == SurfaceRule::MaxZ ? p.z > e : p.z < e)) e = p.z;
      }
      for (std::size_t k = 0; k < expect.size(); ++k) {
        ASSERT_EQ(hf.occupied[k] != 0, !std::isnan(expect[k])) << k;
        if (hf.occupied[k]) EXPECT_EQ(hf.elevation[k], expect[k]);
        EXPECT_EQ(hf.interpolated[k], 0);
      }
      EXPECT_EQ(hf.epoch, c.epoch);
    }
  }
}

TEST(FillHoles, SingleHoleAveragesNeighbours) {
  HeightField hf = flat(grid(0, 0, 1, 3, 3), 2.0, "2021-06-25T00:00:00Z");
  hf.occupied[4] = 0;
  hf.elevation[4] = 0.0;
  const HeightField f = fill_holes(hf, 1);
  EXPECT_TRUE(f.occupied[4]);
  EXPECT_TRUE(f.interpolated[4]);
  EXPECT_DOUBLE_EQ(f.elevation[4], 2.0);
  EXPECT_EQ(fill_holes(hf, 0).occupied[4], 0);
}

TEST(FillHoles, InverseSquareWeights) {
  // Row of five cells: observed 0 at i=0 and 3 at i=3; holes at 1, 2, 4.
  HeightField hf = HeightField::empty(grid(0, 0, 1, 5, 1), {});
  hf.occupied[0] = hf.occupied[3] = 1;
  hf.elevation[3] = 3.0;
  const HeightField f = fill_holes(hf, 2);
  // i=1: w0 = 1, w3 = 1/4 -> (0 + 3/4) / 1.25
  EXPECT_DOUBLE_EQ(f.elevation[1], 0.75 / 1.25);
  EXPECT_DOUBLE_EQ(f.elevation[2], (0.25 * 0 + 3.0) / 1.25);
  EXPECT_DOUBLE_EQ(f.elevation[4], 3.0);
}

TEST(FillHoles, FarHolesStayEmpty) {
  HeightField hf = HeightField::empty(grid(0, 0, 1, 10, 1), {});
  hf.occupied[0] = 1;
  const HeightField f = fill_holes(hf, 3);
  for (int i = 1; i <= 3; ++i) EXPECT_TRUE(f.occupied[i]);
  for (int i = 4; i < 10; ++i) EXPECT_FALSE(f.occupied[i]);
  EXPECT_EQ(code_of([] { fill_holes(HeightField::empty(grid(0, 0, 1, 2, 2), {}), 1); }), Errc::AllUnoccupied);
  EXPECT_EQ(code_of([&] { fill_holes(hf, -1); }), Errc::InvalidArgument);
}

TEST(FillHoles, IdempotentAndKeepsObserved) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const PointCloud c = scatter(10 + s, 400, 10, 10);
    const HeightField hf = rasterize_dsm(c, grid(0, 0, 0.5, 20, 20), SurfaceRule::MaxZ);
    const HeightField once = fill_holes(hf, 2);
    const HeightField twice = fill_holes(once, 2);
    EXPECT_EQ(twice.elevation, once.elevation);
    EXPECT_EQ(twice.occupied, once.occupied);
    for (std::size_t k = 0; k < hf.elevation.size(); ++k) {
      if (hf.occupied[k]) EXPECT_EQ(once.elevation[k], hf.elevation[k]);
    }
  }
}

TEST(Stack, ValidatesLayers) {
  const GridSpec g = grid(0, 0, 1, 3, 3);
  const auto a = flat(g, 1, "2021-06-25T00:00:00Z");
  const auto b = flat(g, 1, "2021-06-26T00:00:00Z");
  EXPECT_EQ(build_stack({b, a}, 0.0).layers[0].epoch, a.epoch);  // sorted by epoch
  EXPECT_EQ(code_of([&] { build_stack({a, a}, 0.0); }), Errc::DuplicateEpoch);
  const auto other = flat(grid(0, 0, 1, 4, 3), 1, "2021-06-27T00:00:00Z");
  EXPECT_EQ(code_of([&] { build_stack({a, other}, 0.0); }), Errc::GridMismatch);
  EXPECT_EQ(code_of([] { build_stack({}, 0.0); }), Errc::InvalidArgument);
}

TEST(PileDepth, ClampsBelowGround) {
  const GridSpec g = grid(0, 0, 1, 2, 1);
  HeightField top = HeightField::empty(g, parse_epoch("2021-06-25T00:00:00Z"));
  top.occupied = {1, 1};
  top.elevation = {3.5, -1.0};
  const DepthMap d = pile_depth(build_stack({top}, 0.5));
  EXPECT_EQ(d.depth[0], 3.0);
  EXPECT_EQ(d.depth[1], 0.0);
  EXPECT_EQ(d.max_depth, 3.0);
}

TEST(GroundDatum, FifthPercentileOutsideFootprint) {
  const GridSpec g = grid(0, 0, 1, 10, 10);
  HeightField hf = HeightField::empty(g, {});
  for (std::int64_t j = 0; j < 10; ++j) {
    for (std::int64_t i = 0; i < 10; ++i) {
      const auto k = g.linear(i, j);
      hf.occupied[k] = 1;
      hf.elevation[k] = static_cast<double>(k);  // 0..99
    }
  }
  // All 100 cells: nearest rank ceil(5) -> 5th smallest = 4.
  EXPECT_EQ(ground_datum(hf, std::nullopt), 4.0);
  // Footprint covers everything except row j=9 (values 90..99): rank ceil(0.5)=1 -> 90.
  EXPECT_EQ(ground_datum(hf, Aabb{{0, 0, 0}, {10, 9, 0}}), 90.0);
  // Footprint covering all cells falls back to the whole layer.
  EXPECT_EQ(ground_datum(hf, Aabb{{-1, -1, 0}, {11, 11, 0}}), 4.0);
}

TEST(Pgm, HeaderAndScaling) {
  const GridSpec g = grid(0, 0, 1, 3, 2);
  HeightField hf = HeightField::empty(g, {});
  hf.occupied = {1, 1, 0, 1, 1, 1};
  hf.elevation = {0, 1, 0, 2, 3, 4};
  const std::string pgm = heightfield_to_pgm(hf);
  const std::string header = "P5\n3 2\n255\n";
  ASSERT_EQ(pgm.size(), header.size() + 6);
  EXPECT_EQ(pgm.substr(0, header.size()), header);
  const auto px = [&](int n) { return static_cast<unsigned char>(pgm[header.size() + n]); };
  // Top image row is j=1.
  EXPECT_EQ(px(0), 1 + std::lround(0.5 * 254));
  EXPECT_EQ(px(2), 255);
  EXPECT_EQ(px(3), 1);
  EXPECT_EQ(px(5), 0);
}

TEST(HeightFieldJson, LosslessRoundTrip) {
  const PointCloud c = scatter(30, 500, 10, 10);
  const HeightField hf = fill_holes(rasterize_dsm(c, grid(0.125, -3, 0.5, 20, 20), SurfaceRule::MaxZ), 1);
  const HeightField back = heightfield_from_json(heightfield_to_json(hf));
  EXPECT_EQ(back.grid, hf.grid);
  EXPECT_EQ(back.occupied, hf.occupied);
  EXPECT_EQ(back.interpolated, hf.interpolated);
  EXPECT_EQ(back.epoch, hf.epoch);
  for (std::size_t k = 0; k < hf.elevation.size(); ++k) {
    if (hf.occupied[k]) EXPECT_EQ(back.elevation[k], hf.elevation[k]);
  }
  EXPECT_EQ(code_of([] { heightfield_from_json("{}"); }), Errc::InvalidArgument);
}
