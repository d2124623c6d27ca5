#include <gtest/gtest.h>

#include "stereoloc/error.hpp"
#include "stereoloc/window.hpp"

namespace sl = stereoloc;
using sl::Vec2;
using sl::Vec3;

namespace {

sl::SlidingWindow make_window(std::size_t capacity = 50) {
  const sl::Intrinsics k{450, 450, 320, 240, 640, 480};
  return sl::SlidingWindow({{k, sl::Pose::identity()}, {k, sl::Pose{sl::Rotation(), Vec3(-0.1, 0, 0)}}}, capacity);
}

sl::WindowFrame frame(sl::FrameId id) {
  return {id, 0.1 * static_cast<double>(id), sl::Pose{sl::Rotation(), Vec3(0, 0, -0.1 * static_cast<double>(id))}};
}

}  // namespace

TEST(Window, DropsOldestPastCapacity) {
  auto w = make_window();
  // Landmark 0 is seen by every frame; keeps the window connected.
  w.push(frame(1), {{0, Vec3(0, 0, 10)}}, {{1, 0, 0, Vec2(320, 240)}, {1, 0, 1, Vec2(315, 240)}});
  for (sl::FrameId id = 2; id <= 51; ++id) {
    const auto r = w.push(frame(id), {}, {{id, 0, 0, Vec2(320, 240)}});
    EXPECT_LE(w.frames().size(), 50u);
    if (id == 51) {
      ASSERT_TRUE(r.dropped);
      EXPECT_EQ(r.dropped->id, 1u);
    } else {
      EXPECT_FALSE(r.dropped);
    }
  }
  ASSERT_EQ(w.frames().size(), 50u);
  EXPECT_EQ(w.frames().front().id, 2u);
  EXPECT_EQ(w.frames().back().id, 51u);
  EXPECT_EQ(w.observation_count(0), 50u);
}

TEST(Window, LandmarkOnlySeenByDroppedPoseIsRemoved) {
  auto w = make_window(2);
  w.push(frame(1), {{7, Vec3(1, 0, 10)}, {8, Vec3(0, 1, 10)}},
         {{1, 7, 0, Vec2(1, 1)}, {1, 7, 1, Vec2(2, 1)}, {1, 8, 0, Vec2(3, 3)}, {1, 8, 1, Vec2(4, 3)}});
  w.push(frame(2), {}, {{2, 8, 0, Vec2(3, 3)}});
  EXPECT_TRUE(w.has_landmark(7));
  const auto r = w.push(frame(3), {}, {{3, 8, 0, Vec2(3, 3)}});
  ASSERT_TRUE(r.dropped);
  EXPECT_FALSE(w.has_landmark(7));
  EXPECT_TRUE(w.has_landmark(8));
  EXPECT_EQ(r.pruned, std::vector<sl::LandmarkId>{7});
  for (const auto& o : w.observations()) EXPECT_NE(o.frame, 1u);
}

TEST(Window, SingleObservationLandmarkIsPrunedImmediately) {
  auto w = make_window();
  const auto r = w.push(frame(1), {{3, Vec3(0, 0, 5)}, {4, Vec3(0, 0, 6)}},
                        {{1, 3, 0, Vec2(1, 1)}, {1, 4, 0, Vec2(1, 1)}, {1, 4, 1, Vec2(0, 1)}});
  EXPECT_EQ(r.pruned, std::vector<sl::LandmarkId>{3});
  EXPECT_EQ(w.landmarks().size(), 1u);
  EXPECT_EQ(w.observations().size(), 2u);
}

TEST(Window, RejectsBadPushes) {
  auto w = make_window();
  w.push(frame(5), {{1, Vec3(0, 0, 5)}}, {{5, 1, 0, Vec2(1, 1)}, {5, 1, 1, Vec2(0, 1)}});
  EXPECT_THROW(w.push(frame(5), {}, {}), sl::Error);                             // id not increasing
  EXPECT_THROW(w.push(frame(6), {{1, Vec3::Zero()}}, {}), sl::Error);           // duplicate landmark
  EXPECT_THROW(w.push(frame(6), {}, {{6, 99, 0, Vec2::Zero()}}), sl::Error);    // unknown landmark
  EXPECT_THROW(w.push(frame(6), {}, {{6, 1, 2, Vec2::Zero()}}), sl::Error);     // bad camera
  EXPECT_THROW(w.push(frame(6), {}, {{7, 1, 0, Vec2::Zero()}}), sl::Error);     // wrong frame
  EXPECT_THROW(make_window(0), sl::Error);
}

TEST(Window, ProblemRoundTrip) {
  auto w = make_window();
  w.push(frame(1), {{10, Vec3(0, 0, 5)}, {20, Vec3(1, 0, 6)}},
         {{1, 10, 0, Vec2(320, 240)}, {1, 10, 1, Vec2(311, 240)}, {1, 20, 0, Vec2(395, 240)},
          {1, 20, 1, Vec2(388, 240)}});
  w.push(frame(2), {}, {{2, 20, 0, Vec2(393, 240)}});
  const sl::BAProblem p = w.to_problem();
  ASSERT_EQ(p.poses.size(), 2u);
  ASSERT_EQ(p.landmarks.size(), 2u);
  EXPECT_EQ(p.landmarks[1], Vec3(1, 0, 6));  // id order
  EXPECT_EQ(p.observations.size(), 5u);
  EXPECT_EQ(p.cameras.size(), 2u);
  EXPECT_NO_THROW(p.validate());

  std::vector<sl::Pose> poses = p.poses;
  std::vector<sl::Landmark> lms = {Vec3(0, 0, 4), Vec3(2, 0, 6)};
  poses[1].translation = Vec3(0.5, 0, 0);
  w.apply(poses, lms);
  EXPECT_EQ(w.landmarks().at(20), Vec3(2, 0, 6));
  EXPECT_EQ(w.frames().back().pose.translation, Vec3(0.5, 0, 0));
  EXPECT_THROW(w.apply(poses, {}), sl::Error);
}
