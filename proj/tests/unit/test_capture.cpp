#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <json.hpp>

#include "temp_dir.hpp"
#include "signdet/capture.hpp"

using namespace signdet;

namespace {

SyntheticOptions small_frames() {
  SyntheticOptions o;
  o.width = 32;
  o.height = 24;
  return o;
}

std::size_t count_files(const fs::path& root, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file() && e.path().extension() == ext) ++n;
  }
  return n;
}

}  // namespace

TEST(Capture, TwoLabelsThreeImages) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.labels = {"A", "B"};
  cfg.images_per_label = 3;
  cfg.output_root = dir.path();
  SyntheticSource src(1, 2, small_frames());
  SimulatedClock clock;
  std::vector<CaptureEvent> events;
  const auto m = run_capture_session(src, cfg, clock, [&](const CaptureEvent& e) { events.push_back(e); });
  EXPECT_EQ(m.images.size(), 6u);
  EXPECT_EQ(count_files(dir.path(), ".ppm"), 6u);
  EXPECT_TRUE(m.complete);
  EXPECT_DOUBLE_EQ(m.elapsed(), 2 * (5.0 + 2 * 2.0));
  for (const auto& e : m.images) {
    const auto name = parse_capture_filename(fs::path(e.path).filename().string());
    ASSERT_TRUE(name.has_value()) << e.path;
    EXPECT_EQ(name->label, e.label);
    EXPECT_EQ(name->uuid_version, 4);
    EXPECT_EQ(fs::path(e.path).parent_path().string(), e.label);
    EXPECT_EQ(decode_ppm(read_file_bytes(dir.path() / e.path)).width, 32);
  }
  EXPECT_EQ(events.front().kind, CaptureEvent::Kind::LabelStarted);
  EXPECT_EQ(events.back().kind, CaptureEvent::Kind::Finished);
  const auto manifest = nlohmann::json::parse(read_file_text(dir / "manifest.json"));
  EXPECT_EQ(manifest["images"].size(), 6u);
  EXPECT_EQ(manifest["complete"], true);
}

TEST(Capture, TimestampsFollowTheProtocol) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.labels = {"A", "B"};
  cfg.images_per_label = 3;
  cfg.output_root = dir.path();
  SyntheticSource src(2, 2, small_frames());
  SimulatedClock clock;
  const auto m = run_capture_session(src, cfg, clock);
  const std::vector<double> expected{5, 7, 9, 14, 16, 18};
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_DOUBLE_EQ(m.images[i].timestamp, expected[i]);
}

TEST(Capture, FullAlphabetSessionArithmetic) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.output_root = dir.path();
  SyntheticSource src(3, 26, small_frames());
  SimulatedClock clock;
  const auto m = run_capture_session(src, cfg, clock);
  EXPECT_EQ(m.images.size(), 650u);
  EXPECT_DOUBLE_EQ(m.elapsed(), 1378.0);
  std::set<std::string> folders;
  for (const auto& e : fs::directory_iterator(dir.path())) {
    if (e.is_directory()) folders.insert(e.path().filename().string());
  }
  EXPECT_EQ(folders.size(), 26u);
  EXPECT_EQ(count_files(dir.path(), ".ppm"), 650u);
}

TEST(Capture, EmptyLabelListDoesNothing) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.labels = {};
  cfg.output_root = dir / "never";
  SyntheticSource src(4, 1, small_frames());
  SimulatedClock clock;
  const auto m = run_capture_session(src, cfg, clock);
  EXPECT_TRUE(m.images.empty());
  EXPECT_EQ(m.elapsed(), 0.0);
  EXPECT_FALSE(fs::exists(dir / "never"));
}

TEST(Capture, ExhaustedSourceAbortsWithPartialManifest) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.labels = {"A", "B"};
  cfg.images_per_label = 3;
  cfg.output_root = dir.path();
  SyntheticSource src(5, 2, small_frames(), 4);
  SimulatedClock clock;
  try {
    run_capture_session(src, cfg, clock);
    FAIL() << "expected SessionAborted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SessionAborted);
  }
  const auto manifest = nlohmann::json::parse(read_file_text(dir / "manifest.json"));
  EXPECT_EQ(manifest["complete"], false);
  EXPECT_EQ(manifest["images"].size(), 4u);
  EXPECT_EQ(count_files(dir.path(), ".ppm"), 4u);
}

TEST(Capture, UnwritableRootIsIoError) {
  TempDir dir;
  std::ofstream(dir / "file") << "x";
  CaptureConfig cfg;
  cfg.labels = {"A"};
  cfg.output_root = dir / "file";
  SyntheticSource src(6, 1, small_frames());
  SimulatedClock clock;
  try {
    run_capture_session(src, cfg, clock);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::IoError);
  }
}

TEST(Capture, RejectsLabelsThatAreNotFolderNames) {
  CaptureConfig cfg;
  for (const char* bad : {"", "a/b", "..", "x.y"}) {
    cfg.labels = {bad};
    EXPECT_THROW(cfg.validate(), Error) << bad;
  }
}

TEST(CaptureFileNames, Versions) {
  const auto v4 = parse_capture_filename("A.3f2b8c1e-5d4a-4f6b-9c2d-1e0f3a4b5c6d.jpg");
  ASSERT_TRUE(v4);
  EXPECT_EQ(v4->uuid_version, 4);
  EXPECT_EQ(v4->ext, "jpg");
  const auto v1 = parse_capture_filename("hello.a1b2c3d4-1e2f-11eb-8a9b-0242ac130003.jpg");
  ASSERT_TRUE(v1);
  EXPECT_EQ(v1->label, "hello");
  EXPECT_EQ(v1->uuid_version, 1);
  EXPECT_FALSE(parse_capture_filename("A.not-a-uuid.jpg"));
  EXPECT_FALSE(parse_capture_filename("A.jpg"));
  Rng rng(9);
  const std::string u = uuid4_from(rng);
  EXPECT_EQ(parse_capture_filename("B." + u + ".ppm")->uuid_version, 4);
  Rng again(9);
  EXPECT_EQ(uuid4_from(again), u);
  EXPECT_NE(new_uuid4(), new_uuid4());
}

TEST(DirectorySourceTest, ReplaysInOrderWithTruth) {
  TempDir dir;
  CaptureConfig cfg;
  cfg.labels = {"A"};
  cfg.images_per_label = 3;
  cfg.output_root = dir.path();
  SyntheticSource src(7, 1, small_frames());
  SimulatedClock clock;
  run_capture_session(src, cfg, clock);
  DirectorySource replay(dir.path());
  EXPECT_EQ(replay.size(), 3u);
  std::vector<std::string> names;
  for (int i = 0; i < 3; ++i) names.push_back(replay.next_frame().source);
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  EXPECT_THROW(replay.next_frame(), Error);
  EXPECT_THROW(DirectorySource(dir / "missing"), Error);
}
