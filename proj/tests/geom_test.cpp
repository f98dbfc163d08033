#include <gtest/gtest.h>

#include <stdexcept>

#include "boxloss/geom.hpp"
#include "boxloss/sampling.hpp"
#include "oracles.hpp"

using namespace boxloss;

TEST(BBoxTest, ValidationNamesTheViolatedInvariant) {
  EXPECT_FALSE(validation_error({0.2, 0.2, 0.4, 0.4}).has_value());
  EXPECT_EQ(*validation_error({0.5, 0.5, 0.4, 0.6}), "x_lo > x_hi");
  EXPECT_EQ(*validation_error({0.1, 0.6, 0.4, 0.5}), "y_lo > y_hi");
  EXPECT_EQ(*validation_error({-0.1, 0.1, 0.4, 0.5}), "x coordinate outside [0,1]");
  EXPECT_EQ(*validation_error({0.1, 0.1, 0.4, 1.5}), "y coordinate outside [0,1]");
  EXPECT_EQ(*validation_error({0.3, 0.1, 0.3, 0.5}), "width below MIN_SIDE (1e-6)");
  EXPECT_EQ(*validation_error({0.1, 0.3, 0.2, 0.3 + 5e-7}), "height below MIN_SIDE (1e-6)");
  EXPECT_THROW(make_box(0.5, 0.5, 0.4, 0.6), std::invalid_argument);
  EXPECT_NO_THROW(make_box(0.0, 0.0, 1.0, 1.0));
}

TEST(BBoxTest, RepairRestoresInvariants) {
  EXPECT_EQ(repair_box(0.2, 0.3, 0.4, 0.5), (BBox{0.2, 0.3, 0.4, 0.5}));
  EXPECT_EQ(repair_box(-0.2, 0.3, 1.4, 0.5), (BBox{0.0, 0.3, 1.0, 0.5}));
  EXPECT_EQ(repair_box(0.6, 0.3, 0.4, 0.5), (BBox{0.4, 0.3, 0.6, 0.5}));
  const BBox collapsed = repair_box(0.5, 1.2, 0.5, 1.3);
  EXPECT_TRUE(is_valid(collapsed));
  EXPECT_DOUBLE_EQ(collapsed.y_hi, 1.0);
  const BBox at_zero = repair_box(-0.1, -0.3, -0.2, 0.7);
  EXPECT_TRUE(is_valid(at_zero));
  EXPECT_EQ(at_zero.x_lo, 0.0);

  Rng rng(11);
  for (int i = 0; i < 100000; ++i) {
    const double a = rng.uniform(-0.5, 1.5);
    const double b = rng.uniform(-0.5, 1.5);
    const double c = rng.uniform(-0.5, 1.5);
    const double d = (i % 3 == 0) ? a + rng.uniform(-1e-6, 1e-6) : rng.uniform(-0.5, 1.5);
    ASSERT_TRUE(is_valid(repair_box(a, c, d, b)));
  }
}

TEST(IntersectionTest, Examples) {
  EXPECT_EQ(intersection_area({0, 0, 1, 1}, {0, 0, 1, 1}), 1.0);
  EXPECT_EQ(intersection_area({0, 0, 0.3, 0.3}, {0.5, 0.5, 0.8, 0.8}), 0.0);

  const BBox a{0, 0, 0.5, 0.5};
  const BBox b{0.25, 0.25, 0.75, 0.75};
  const oracle::Raster raster;
  // Frozen from the rasterization oracle (exact on this dyadic grid).
  ASSERT_NEAR(raster.intersection(a, b), 0.0625, 2e-3);
  EXPECT_NEAR(intersection_area(a, b), 0.0625, 1e-15);
}

TEST(IouTest, Examples) {
  const BBox b{0.13, 0.27, 0.61, 0.88};
  EXPECT_EQ(iou(b, b), 1.0);
  const BBox a{0, 0, 0.5, 0.5};
  const BBox c{0.25, 0.25, 0.75, 0.75};
  const oracle::Raster raster;
  ASSERT_NEAR(raster.iou(a, c), 1.0 / 7.0, 2e-3);
  EXPECT_NEAR(iou(a, c), 1.0 / 7.0, 1e-15);
  EXPECT_EQ(iou({0, 0, 0.3, 0.3}, {0.5, 0.5, 0.8, 0.8}), 0.0);
}

TEST(EnclosingBoxTest, Examples) {
  EXPECT_EQ(enclosing_box({0.2, 0.2, 0.4, 0.4}, {0.2, 0.2, 0.4, 0.4}),
            (BBox{0.2, 0.2, 0.4, 0.4}));
  EXPECT_EQ(enclosing_box({0.2, 0.2, 0.4, 0.4}, {0.6, 0.6, 0.8, 0.8}),
            (BBox{0.2, 0.2, 0.8, 0.8}));
  EXPECT_EQ(enclosing_box({0, 0.5, 0.3, 0.9}, {0.1, 0.1, 0.2, 0.6}), (BBox{0, 0.1, 0.3, 0.9}));
}

TEST(GeomProperties, SymmetryIdentityContainment) {
  Rng rng(2024);
  for (int i = 0; i < 20000; ++i) {
    const BBox a = random_box(rng);
    const BBox b = random_box(rng);
    ASSERT_EQ(iou(a, b), iou(b, a));
    ASSERT_NEAR(iou(a, a), 1.0, 1e-12);
    if (!(a == b)) {
      ASSERT_LT(iou(a, b), 1.0 - 1e-12);
    }
    const BBox c = enclosing_box(a, b);
    ASSERT_TRUE(contains(c, a));
    ASSERT_TRUE(contains(c, b));
    ASSERT_GE(intersection_area(a, b), 0.0);
    ASSERT_LE(intersection_area(a, b), std::min(a.area(), b.area()));
    ASSERT_NEAR(static_cast<double>(oracle::iou_ld(a, b)), iou(a, b), 1e-12);
  }
}

TEST(GeomProperties, IouMatchesRasterOracle) {
  // 1000 pairs here; the acceptance suite runs the full 10^4.
  Rng rng(606);
  const oracle::Raster raster;
  for (int i = 0; i < 1000; ++i) {
    const BBox a = random_box(rng, 0.2, 0.8);
    const BBox b = random_box(rng, 0.2, 0.8);
    ASSERT_NEAR(iou(a, b), raster.iou(a, b), 2e-3);
  }
}
