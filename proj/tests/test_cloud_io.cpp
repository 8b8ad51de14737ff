#include <algorithm>
#include <set>
#include <tuple>

#include <gtest/gtest.h>

#include "rubblevoid/cloud_io.hpp"
#include "rubblevoid/error.hpp"
#include "rubblevoid/synthetic.hpp"
#include "test_support.hpp"

using namespace rubblevoid;

namespace rubblevoid {
// readable ctest names
inline void PrintTo(CloudFormat f, std::ostream* os) { *os << to_string(f); }
}  // namespace rubblevoid

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

PointCloud random_cloud(std::uint64_t seed, std::size_t n, bool colors) {
  const auto rng = CounterRng::derive(seed, 1);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    // Large offsets exercise double precision.
    c.points.push_back({500000.0 + 100 * rng.uniform(6 * i), 2800000.0 + 100 * rng.uniform(6 * i + 1),
                        -3.0 + 20 * rng.uniform(6 * i + 2)});
    if (colors) {
      c.colors.push_back({static_cast<std::uint8_t>(rng.bits(6 * i + 3)), static_cast<std::uint8_t>(rng.bits(6 * i + 4)),
                          static_cast<std::uint8_t>(rng.bits(6 * i + 5))});
    }
  }
  c.epoch = parse_epoch("2021-06-27T14:30:00Z");
  c.source_label = "flight-7";
  return c;
}

std::multiset<std::tuple<double, double, double, int, int, int>> as_multiset(const PointCloud& c) {
  std::multiset<std::tuple<double, double, double, int, int, int>> s;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Rgb col = c.has_colors() ? c.colors[i] : Rgb{};
    s.emplace(c.points[i].x, c.points[i].y, c.points[i].z, col.r, col.g, col.b);
  }
  return s;
}

}  // namespace

TEST(ParseCloud, XyzThreePoints) {
  const PointCloud c = parse_cloud("0 0 0\n1 0 0\n0 1 0", CloudFormat::XyzText);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c.points[1], (Point3{1, 0, 0}));
  EXPECT_FALSE(c.has_colors());
}

TEST(ParseCloud, XyzColorsAndComments) {
  const PointCloud c = parse_cloud("# epoch 2021-06-25T10:00:00Z\n# source uas-1\n1 2 3 255 0 7\n\n4 5 6 1 2 3\n",
                                   CloudFormat::XyzText);
  ASSERT_EQ(c.size(), 2u);
  ASSERT_TRUE(c.has_colors());
  EXPECT_EQ(c.colors[0], (Rgb{255, 0, 7}));
  EXPECT_EQ(c.epoch, parse_epoch("2021-06-25T10:00:00Z"));
  EXPECT_EQ(c.source_label, "uas-1");
}

TEST(ParseCloud, PlyCountShortfallIsMalformed) {
  const std::string ply =
      "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n"
      "0 0 0\n1 1 1\n2 2 2\n";
  EXPECT_EQ(code_of([&] { parse_cloud(ply); }), Errc::MalformedHeader);
}

TEST(ParseCloud, NanReportsRecord) {
  try {
    parse_cloud("1 2 nan\n", CloudFormat::XyzText);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NonFiniteValue);
    EXPECT_EQ(e.record(), 1u);
  }
  try {
    parse_cloud("0 0 0\n1 inf 2\n", CloudFormat::XyzText);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.record(), 2u);
  }
}

TEST(ParseCloud, EmptyInputs) {
  EXPECT_EQ(code_of([] { parse_cloud("# nothing\n", CloudFormat::XyzText); }), Errc::EmptyCloud);
  const std::string ply =
      "ply\nformat ascii 1.0\nelement vertex 0\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  EXPECT_EQ(code_of([&] { parse_cloud(ply); }), Errc::EmptyCloud);
}

TEST(ParseCloud, MissingCoordinatePropertyIsMalformed) {
  const std::string ply = "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n0 0\n";
  EXPECT_EQ(code_of([&] { parse_cloud(ply); }), Errc::MalformedHeader);
}

TEST(ParseCloud, UnknownPropertiesSkippedWithWarning) {
  const std::string ply =
      "ply\nformat ascii 1.0\ncomment epoch 2021-06-26T00:00:00Z\nelement vertex 2\nproperty float x\n"
      "property float confidence\nproperty float y\nproperty float z\nproperty uchar red\nproperty uchar green\n"
      "property uchar blue\nelement face 0\nproperty list uchar int vertex_indices\nend_header\n"
      "1 0.5 2 3 10 20 30\n4 0.9 5 6 40 50 60\n";
  std::vector<std::string> warnings;
  const PointCloud c = parse_cloud(ply, &warnings);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c.points[1], (Point3{4, 5, 6}));
  EXPECT_EQ(c.colors[1], (Rgb{40, 50, 60}));
  EXPECT_FALSE(warnings.empty());
  EXPECT_EQ(c.epoch, parse_epoch("2021-06-26T00:00:00Z"));
}

TEST(ParseCloud, DetectsFormat) {
  EXPECT_EQ(detect_format("ply\nformat ascii 1.0\n"), CloudFormat::PlyAscii);
  EXPECT_EQ(detect_format("ply\r\nformat binary_little_endian 1.0\r\n"), CloudFormat::PlyBinaryLe);
  EXPECT_EQ(detect_format("1 2 3\n"), CloudFormat::XyzText);
}

class RoundTrip : public ::testing::TestWithParam<CloudFormat> {};

TEST_P(RoundTrip, SerializeParseKeepsMultiset) {
  for (bool colors : {false, true}) {
    const PointCloud c = random_cloud(colors ? 2 : 1, 500, colors);
    const PointCloud back = parse_cloud(serialize_cloud(c, GetParam()), GetParam());
    EXPECT_EQ(as_multiset(back), as_multiset(c));
    EXPECT_EQ(back.epoch, c.epoch);
    EXPECT_EQ(back.source_label, c.source_label);
    // Second trip is byte-stable.
    EXPECT_EQ(serialize_cloud(back, GetParam()), serialize_cloud(c, GetParam()));
  }
}

INSTANTIATE_TEST_SUITE_P(AllFormats, RoundTrip,
                         ::testing::Values(CloudFormat::PlyAscii, CloudFormat::PlyBinaryLe, CloudFormat::XyzText),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(CloudFiles, SaveLoad) {
  const auto dir = testsupport::scratch_dir("cloud_files");
  const PointCloud c = random_cloud(3, 50, true);
  const std::string path = (dir / "c.ply").string();
  save_cloud(path, c, CloudFormat::PlyBinaryLe);
  EXPECT_EQ(as_multiset(load_cloud(path)), as_multiset(c));
  EXPECT_EQ(code_of([&] { load_cloud((dir / "missing.ply").string()); }), Errc::Io);
}

TEST(BoundingBox, Examples) {
  PointCloud c;
  c.points = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  const Aabb b = bounding_box(c);
  EXPECT_EQ(b.min, (Point3{0, 0, 0}));
  EXPECT_EQ(b.max, (Point3{1, 1, 0}));
  c.points = {{2, -3, 4}};
  EXPECT_EQ(bounding_box(c).min, bounding_box(c).max);
  EXPECT_EQ(code_of([] { bounding_box(PointCloud{}); }), Errc::EmptyCloud);
}

TEST(BoundingBox, ContainsEveryPoint) {
  const PointCloud c = random_cloud(4, 300, false);
  const Aabb b = bounding_box(c);
  for (const auto& p : c.points) EXPECT_TRUE(b.contains(p));
}

TEST(Crop, FullBoxIsIdentity) {
  const PointCloud c = random_cloud(5, 200, true);
  const CropResult r = crop(c, bounding_box(c));
  EXPECT_FALSE(r.empty);
  EXPECT_EQ(as_multiset(r.cloud), as_multiset(c));
  EXPECT_EQ(r.cloud.epoch, c.epoch);
}

TEST(Crop, EmptyResultIsFlagged) {
  const PointCloud c = random_cloud(6, 20, false);
  const CropResult r = crop(c, {{0, 0, 0}, {1, 1, 1}});
  EXPECT_TRUE(r.empty);
  EXPECT_TRUE(r.cloud.empty());
}

TEST(Crop, MatchesMembershipScan) {
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.push_back({double(i), double(i % 3), 0.5 * i});
  const Aabb box{{2, 0, 0}, {5, 2, 10}};
  const CropResult r = crop(c, box);
  std::size_t expect = 0;
  for (const auto& p : c.points) {
    expect += p.x >= 2 && p.x <= 5 && p.y >= 0 && p.y <= 2 && p.z >= 0 && p.z <= 10;
  }
  EXPECT_EQ(expect, 4u);
  EXPECT_EQ(r.cloud.size(), expect);
  for (const auto& p : r.cloud.points) EXPECT_TRUE(box.contains(p));
}
