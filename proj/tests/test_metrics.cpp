#include <gtest/gtest.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "hairforge/errors.hpp"
#include "hairforge/metrics.hpp"
#include "hairforge/morphology.hpp"
#include "hairforge/png_io.hpp"
#include "hairforge/poisson.hpp"
#include "test_support.hpp"

namespace hairforge {
namespace {

using testing::TempDir;

BinaryMask square(int w, int h, int x0, int y0, int side) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + side; ++y) {
    for (int x = x0; x < x0 + side; ++x) m.set(x, y, true);
  }
  return m;
}

// Brute-force count of 4-adjacent (inside, outside) pairs.
int boundary_pairs(const BinaryMask& m) {
  int n = 0;
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (x + 1 < m.width() && m(x, y) != m(x + 1, y)) ++n;
      if (y + 1 < m.height() && m(x, y) != m(x, y + 1)) ++n;
    }
  }
  return n;
}

RasterImage offset_image(const RasterImage& img, double delta) {
  RasterImage out = img;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      for (int c = 0; c < img.channels(); ++c) out.set(x, y, c, img.at(x, y, c) + delta);
    }
  }
  return out;
}

TEST(SeamEnergyTest, ConstantImageIsZero) {
  const RasterImage img(20, 20, 3, 0.4);
  EXPECT_EQ(seam_energy(img, square(20, 20, 5, 5, 6)), 0.0);
}

TEST(SeamEnergyTest, UnitStepCountsEveryChannel) {
  const BinaryMask mask = square(20, 20, 5, 5, 6);
  RasterImage img(20, 20, 3, 0.0);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 20; ++x) {
      if (mask(x, y)) {
        for (int c = 0; c < 3; ++c) img.set(x, y, c, 1.0);
      }
    }
  }
  EXPECT_DOUBLE_EQ(seam_energy(img, mask), 3.0);
  for (double v : seam_energy_per_channel(img, mask)) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(SeamEnergyTest, MatchesBruteForceMean) {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const RasterImage img = testing::random_image(rng, 17, 13, 3);
    const BinaryMask mask = testing::random_mask(rng, 17, 13, 0.3);
    double sum = 0.0;
    for (int y = 0; y < 13; ++y) {
      for (int x = 0; x < 17; ++x) {
        for (auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
          if (x + dx >= 17 || y + dy >= 13 || mask(x, y) == mask(x + dx, y + dy)) continue;
          for (int c = 0; c < 3; ++c) {
            const double d = img.at(x, y, c) - img.at(x + dx, y + dy, c);
            sum += d * d;
          }
        }
      }
    }
    EXPECT_NEAR(seam_energy(img, mask), sum / boundary_pairs(mask), 1e-12);
  }
}

TEST(SeamEnergyTest, TranslationInvariant) {
  Rng rng(2);
  const RasterImage img = testing::random_image(rng, 24, 24, 3);
  const BinaryMask mask = square(24, 24, 6, 7, 5) | square(24, 24, 9, 9, 4);
  const int dx = 5, dy = 3;
  RasterImage shifted(40, 40, 3, 0.0);
  BinaryMask shifted_mask(40, 40);
  for (int y = 0; y < 24; ++y) {
    for (int x = 0; x < 24; ++x) {
      shifted_mask.set(x + dx, y + dy, mask(x, y));
      for (int c = 0; c < 3; ++c) shifted.set(x + dx, y + dy, c, img.at(x, y, c));
    }
  }
  EXPECT_DOUBLE_EQ(seam_energy(img, mask), seam_energy(shifted, shifted_mask));
}

TEST(SeamEnergyTest, NoBoundaryPairs) {
  const RasterImage img(8, 8, 3, 0.5);
  EXPECT_THROW(seam_energy(img, BinaryMask(8, 8)), EmptyBoundary);
  EXPECT_THROW(seam_energy(img, BinaryMask(8, 8, true)), EmptyBoundary);
  EXPECT_THROW(seam_energy(img, BinaryMask(9, 8)), DimensionMismatch);
}

TEST(BleedDeltaTest, IdenticalImagesAreZero) {
  Rng rng(3);
  const RasterImage img = testing::random_image(rng, 20, 20, 3);
  EXPECT_EQ(bleed_delta(img, img, square(20, 20, 8, 8, 3)), 0.0);
}

TEST(BleedDeltaTest, SingleChangedAnnulusPixel) {
  const BinaryMask mask = square(30, 30, 12, 12, 4);
  const BinaryMask annulus = dilate(mask, kBleedAnnulusWidth) - mask;
  const RasterImage dest(30, 30, 3, 0.5);
  RasterImage out = dest;
  out.set(11, 13, 1, 0.8);
  ASSERT_TRUE(annulus(11, 13));
  const double n = static_cast<double>(annulus.popcount());
  EXPECT_NEAR(bleed_delta(out, dest, mask), 0.3 / (n * 3), 1e-15);
  const auto per = bleed_delta_per_channel(out, dest, mask);
  EXPECT_EQ(per[0], 0.0);
  EXPECT_NEAR(per[1], 0.3 / n, 1e-15);
  // Changes inside the mask or beyond the annulus do not count.
  RasterImage far = dest;
  far.set(13, 13, 0, 0.0);
  far.set(2, 2, 0, 0.0);
  EXPECT_EQ(bleed_delta(far, dest, mask), 0.0);
}

TEST(BleedDeltaTest, EmptyAnnulus) {
  const RasterImage img(8, 8, 3, 0.5);
  EXPECT_THROW(bleed_delta(img, img, BinaryMask(8, 8, true)), EmptyAnnulus);
  EXPECT_THROW(bleed_delta(img, img, BinaryMask(8, 8)), EmptyAnnulus);
}

TEST(BleedDeltaTest, PoissonModesLeaveExteriorUntouched) {
  Rng rng(4);
  for (BlendMode mode : {BlendMode::membrane, BlendMode::guided, BlendMode::two_step}) {
    for (int trial = 0; trial < 5; ++trial) {
      BlendRequest req{testing::random_image(rng, 24, 24, 3), testing::random_image(rng, 24, 24, 3),
                       testing::random_interior_mask(rng, 24, 24, 0.2), mode, {}};
      if (req.mask.empty()) req.mask.set(12, 12, true);
      const RasterImage out = blend(req).image;
      EXPECT_EQ(bleed_delta(out, req.destination, req.mask), 0.0) << to_string(mode);
      EXPECT_EQ(bleed_delta(quantize(out), quantize(req.destination), req.mask), 0.0);
    }
  }
}

TEST(SeamEnergyTest, PoissonBeatsNaiveOnShiftedSkin) {
  Rng rng(5);
  int guided_wins = 0, membrane_wins = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const RasterImage dest = testing::smooth_image(rng, 32, 32, 3);
    const BinaryMask hair = testing::hair_mask(rng, {32, 32});
    // Blend masks carry a one-pixel skin margin around the hair, as placement produces.
    const BinaryMask mask = dilate(hair, 1);
    const RasterImage skin = offset_image(testing::smooth_image(rng, 32, 32, 3), rng.uniform(-0.2, 0.2));
    BlendRequest req{testing::paint_hair(skin, hair, rng.uniform(0.05, 0.3)), dest, mask, BlendMode::guided, {}};
    const double naive = seam_energy(blend_naive(req), mask);
    guided_wins += seam_energy(blend(req).image, mask) <= naive ? 1 : 0;
    req.mode = BlendMode::membrane;
    membrane_wins += seam_energy(blend(req).image, mask) <= naive ? 1 : 0;
  }
  EXPECT_EQ(membrane_wins, 50);
  EXPECT_GE(guided_wins, 48);
}

TEST(SeamReportTest, CombinesBothMetrics) {
  Rng rng(6);
  const RasterImage dest = testing::random_image(rng, 20, 20, 3);
  const RasterImage out = testing::random_image(rng, 20, 20, 3);
  const BinaryMask mask = square(20, 20, 7, 7, 5);
  const SeamReport r = seam_report(out, dest, mask);
  EXPECT_EQ(r.seam_energy, seam_energy(out, mask));
  EXPECT_EQ(r.bleed_delta, bleed_delta(out, dest, mask));
  EXPECT_EQ(r.seam_per_channel.size(), 3u);
  EXPECT_EQ(r.bleed_per_channel.size(), 3u);
}

TEST(CropTest, FullMaskIsWholeImage) {
  EXPECT_EQ(crop_box(BinaryMask(30, 20, true), 0), (CropBox{0, 0, 30, 20}));
  EXPECT_EQ(crop_box(BinaryMask(30, 20, true), 5), (CropBox{0, 0, 30, 20}));
}

TEST(CropTest, SinglePixelWithPad) {
  BinaryMask m(30, 30);
  m.set(10, 10, true);
  EXPECT_EQ(crop_box(m, 2), (CropBox{8, 8, 5, 5}));
  BinaryMask corner(30, 30);
  corner.set(1, 28, true);
  EXPECT_EQ(crop_box(corner, 3), (CropBox{0, 25, 5, 5}));
  EXPECT_THROW(crop_box(BinaryMask(30, 30), 2), EmptyRegion);
}

TEST(CropTest, SidecarRelocatesCropExactly) {
  TempDir dir;
  Rng rng(7);
  const RasterImage out = testing::random_quantized_image(rng, 40, 30, 3);
  const BinaryMask mask = square(40, 30, 11, 6, 7);
  const CropBox box = export_crops(out, mask, 3, dir / "crop.png", "d000_0.png");
  EXPECT_EQ(box, (CropBox{8, 3, 13, 13}));

  std::ifstream in(dir / "crop.json");
  const nlohmann::json side = nlohmann::json::parse(in);
  EXPECT_EQ(side.at("source_image"), "d000_0.png");
  const int x0 = side.at("x"), y0 = side.at("y");
  const RasterImage loaded = load_image(dir / "crop.png");
  ASSERT_EQ(loaded.width(), side.at("width").get<int>());
  ASSERT_EQ(loaded.height(), side.at("height").get<int>());
  for (int y = 0; y < loaded.height(); ++y) {
    for (int x = 0; x < loaded.width(); ++x) {
      for (int c = 0; c < 3; ++c) ASSERT_EQ(loaded.at(x, y, c), out.at(x0 + x, y0 + y, c));
    }
  }
}

}  // namespace
}  // namespace hairforge
