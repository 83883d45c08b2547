#include <cmath>

#include <gtest/gtest.h>

#include "signdet/anchors.hpp"

using namespace signdet;

TEST(Anchors, SingleCenteredAnchor) {
  AnchorSpec spec;
  spec.layers = {{1, 1, {0.5}, {1.0}}};
  const AnchorSet a = generate_anchors(spec);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0], (BoxCenter{0.5, 0.5, 0.5, 0.5}));
}

TEST(Anchors, TwoByTwoGridPlacement) {
  AnchorSpec spec;
  spec.layers = {{2, 2, {0.4}, {1.0}}};
  const AnchorSet a = generate_anchors(spec);
  ASSERT_EQ(a.size(), 4u);
  const double expected[4][2] = {{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_DOUBLE_EQ(a[i].cx, expected[i][0]);
    EXPECT_DOUBLE_EQ(a[i].cy, expected[i][1]);
    EXPECT_DOUBLE_EQ(a[i].w, 0.4);
    EXPECT_DOUBLE_EQ(a[i].h, 0.4);
  }
}

TEST(Anchors, DeskDefaultCount) {
  const AnchorSpec spec = AnchorSpec::desk_default();
  const AnchorSet a = generate_anchors(spec);
  EXPECT_EQ(a.size(), 144u * 4 + 36u * 4);
  EXPECT_EQ(a.size(), 720u);
  ASSERT_EQ(a.layer_offsets().size(), 3u);
  EXPECT_EQ(a.layer_offsets()[1], 576u);
  EXPECT_EQ(a.layer_offsets()[2], 720u);
}

TEST(Anchors, InterpolatedScaleUsesNextLayer) {
  const AnchorSet a = generate_anchors(AnchorSpec::desk_default());
  EXPECT_NEAR(a[3].w, std::sqrt(0.2 * 0.5), 1e-15);
  EXPECT_NEAR(a[576 + 3].w, std::sqrt(0.5 * 1.0), 1e-15);
}

TEST(Anchors, Deterministic) {
  const AnchorSet a = generate_anchors(AnchorSpec::desk_default());
  const AnchorSet b = generate_anchors(AnchorSpec::desk_default());
  EXPECT_EQ(a.boxes(), b.boxes());
}

TEST(Anchors, ReciprocalRatiosSwapSides) {
  AnchorSpec spec;
  spec.layers = {{3, 3, {0.3, 0.6}, {2.0, 0.5, 3.0, 1.0 / 3.0}}};
  const AnchorSet a = generate_anchors(spec);
  for (std::size_t i = 0; i < a.size(); i += 2) {
    EXPECT_NEAR(a[i].w, a[i + 1].h, 1e-15);
    EXPECT_NEAR(a[i].h, a[i + 1].w, 1e-15);
  }
}

TEST(Anchors, ClippingKeepsBoxesInside) {
  AnchorSpec spec = AnchorSpec::desk_default();
  spec.clip_to_image = true;
  for (const auto& b : generate_anchors(spec)) {
    const BoxCorner c = center_to_corner(b);
    EXPECT_GE(c.xmin, -1e-12);
    EXPECT_GE(c.ymin, -1e-12);
    EXPECT_LE(c.xmax, 1.0 + 1e-12);
    EXPECT_LE(c.ymax, 1.0 + 1e-12);
  }
}

TEST(Anchors, InvalidSpecs) {
  auto expect_invalid = [](AnchorSpec s) {
    try {
      generate_anchors(s);
      FAIL() << "expected InvalidSpec";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidSpec);
    }
  };
  expect_invalid(AnchorSpec{});
  expect_invalid(AnchorSpec{{{0, 2, {0.2}, {1.0}}}});
  expect_invalid(AnchorSpec{{{2, 2, {}, {1.0}}}});
  expect_invalid(AnchorSpec{{{2, 2, {1.5}, {1.0}}}});
  expect_invalid(AnchorSpec{{{2, 2, {0.2}, {-1.0}}}});
}
