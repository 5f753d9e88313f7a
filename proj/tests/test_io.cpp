#include <doctest.h>

#include <Eigen/Dense>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#include <json.hpp>

#include "manip/io.hpp"
#include "manip/model.hpp"
#include "manip/preprocess.hpp"
#include "manip/types.hpp"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
  static int counter = 0;
  fs::path dir =
      fs::temp_directory_path() / ("manip_io_test_" + std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

manip::Trajectory random_trajectory(int n, unsigned seed) {
  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> u(-0.7, 0.7);
  manip::Trajectory t;
  for (int k = 0; k < n; ++k) {
    manip::Frame f;
    for (auto& tip : f.fingertips) tip = Eigen::Vector3d(u(eng), u(eng), u(eng));
    f.object_position = Eigen::Vector3d(u(eng), u(eng), u(eng));
    f.object_orientation = Eigen::Vector3d(u(eng), u(eng), u(eng));
    t.frames.push_back(f);
  }
  return t;
}

}  // namespace

TEST_CASE("format_double is lossless for doubles") {
  for (double x : {0.1, 1.0, -3.1830000000000003, 1e-300, 123456789.123456789}) {
    const std::string s = manip::io::format_double(x);
    CHECK(std::stod(s) == x);
  }
  CHECK(manip::io::format_double(1.0) == "1");
  CHECK(manip::io::format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("trajectory CSV header is the fixed 22-column layout") {
  CHECK(manip::io::trajectory_csv_header() ==
        "t,thumb_x,thumb_y,thumb_z,index_x,index_y,index_z,middle_x,middle_y,"
        "middle_z,ring_x,ring_y,ring_z,little_x,little_y,little_z,obj_x,obj_y,"
        "obj_z,obj_roll,obj_pitch,obj_yaw");
  CHECK(manip::io::recording_csv_header() ==
        manip::io::trajectory_csv_header() +
            ",palm_x,palm_y,palm_z,palm_roll,palm_pitch,palm_yaw");
}

TEST_CASE("trajectory CSV round-trips exactly") {
  const fs::path dir = temp_dir();
  const manip::Trajectory t = random_trajectory(9, 1);
  manip::io::write_trajectory_csv(dir / "t.csv", t);
  const manip::Trajectory back = manip::io::read_trajectory_csv(dir / "t.csv");
  REQUIRE(back.n_steps() == t.n_steps());
  CHECK(back.dt == t.dt);
  for (int k = 0; k < t.n_steps(); ++k)
    CHECK((back.frames[k].features() - t.frames[k].features())
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("frame CSV holds a single data row") {
  const fs::path dir = temp_dir();
  manip::Frame f;
  f.fingertips[4] = Eigen::Vector3d(0.01, -0.02, 0.03);
  f.object_orientation = Eigen::Vector3d(0.1, 0.2, 0.3);
  manip::io::write_frame_csv(dir / "f.csv", f);
  const manip::Frame back = manip::io::read_frame_csv(dir / "f.csv");
  CHECK((back.features() - f.features()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("recording CSV preserves data and missing-sample mask") {
  const fs::path dir = temp_dir();
  manip::Recording r;
  r.data.resize(5, manip::kRecordingChannels);
  std::mt19937_64 eng(3);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  for (int i = 0; i < r.data.rows(); ++i)
    for (int c = 0; c < r.data.cols(); ++c) r.data(i, c) = u(eng);
  r.missing.setConstant(5, manip::kRecordingChannels, false);
  r.missing(2, 4) = true;
  r.missing(3, 20) = true;

  manip::io::write_recording_csv(dir / "r.csv", r);
  const manip::Recording back = manip::io::read_recording_csv(dir / "r.csv");
  REQUIRE(back.n_samples() == 5);
  CHECK(back.has_gaps());
  CHECK(back.missing(2, 4));
  CHECK(back.missing(3, 20));
  for (int i = 0; i < 5; ++i)
    for (int c = 0; c < manip::kRecordingChannels; ++c) {
      if (back.missing(i, c)) continue;
      CHECK(back.data(i, c) == r.data(i, c));
    }
}

TEST_CASE("dictionary files round-trip in both storage modes") {
  const fs::path dir = temp_dir();
  std::mt19937_64 eng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  manip::Dictionary d;
  d.n_steps = manip::kStepsPerSegment;
  d.n_primitives = 3;
  d.w.resize(21 * d.n_steps, 3);
  for (int j = 0; j < d.w.cols(); ++j)
    for (int i = 0; i < d.w.rows(); ++i) d.w(i, j) = u(eng);
  d.provenance.object = "cube";
  d.provenance.seed = 99;
  d.provenance.iterations = 123;
  d.provenance.final_residual = 0.25;

  for (auto storage :
       {manip::io::MatrixStorage::binary, manip::io::MatrixStorage::csv}) {
    const fs::path file =
        dir / (storage == manip::io::MatrixStorage::binary ? "b.json" : "c.json");
    manip::io::save_dictionary(file, d, storage);
    const manip::Dictionary back = manip::io::load_dictionary(file);
    CHECK(back.n_steps == d.n_steps);
    CHECK(back.n_primitives == d.n_primitives);
    CHECK(back.provenance.object == "cube");
    CHECK(back.provenance.seed == 99);
    CHECK((back.w - d.w).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(fs::exists(dir / "b.w.bin"));
  CHECK(!fs::exists(dir / "c.w.bin"));
}

TEST_CASE("dictionary loading rejects step counts other than 100") {
  const fs::path dir = temp_dir();
  manip::Dictionary d;
  d.n_steps = 2;
  d.n_primitives = 1;
  d.w = Eigen::MatrixXd::Constant(42, 1, 0.5);
  manip::io::save_dictionary(dir / "short.json", d);
  CHECK_THROWS_AS(manip::io::load_dictionary(dir / "short.json"),
                  manip::IoError);
}

TEST_CASE("demo matrix files round-trip with provenance") {
  const fs::path dir = temp_dir();
  manip::DemoMatrix m;
  m.n_steps = 2;
  m.v = Eigen::MatrixXd::Constant(42, 4, 0.25);
  m.v(3, 1) = 0.75;
  m.segment_sources = {{"rec_a", 0}, {"rec_a", 100}, {"rec_b", 0}, {"rec_b", 100}};
  manip::io::save_demo_matrix(dir / "demos.json", m);
  const manip::DemoMatrix back = manip::io::load_demo_matrix(dir / "demos.json");
  CHECK(back.n_steps == 2);
  REQUIRE(back.segment_sources.size() == 4);
  CHECK(back.segment_sources[2].recording == "rec_b");
  CHECK(back.segment_sources[1].start_sample == 100);
  CHECK((back.v - m.v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mislabeled container files are rejected") {
  const fs::path dir = temp_dir();
  manip::DemoMatrix m;
  m.n_steps = 1;
  m.v = Eigen::MatrixXd::Constant(21, 2, 0.5);
  manip::io::save_demo_matrix(dir / "demos.json", m);
  CHECK_THROWS_AS(manip::io::load_dictionary(dir / "demos.json"), manip::IoError);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(manip::io::fnv1a64("", 0) == 0xcbf29ce484222325ULL);
  CHECK(manip::io::fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
  CHECK(manip::io::fnv1a64("foobar", 6) == 0x85944171f73967e8ULL);
}

TEST_CASE("hash_file hashes the raw bytes") {
  const fs::path dir = temp_dir();
  manip::io::write_text_file(dir / "x.txt", "foobar");
  CHECK(manip::io::hash_file(dir / "x.txt") == 0x85944171f73967e8ULL);
}

TEST_CASE("manifests are sorted by path and hex-encoded") {
  const fs::path dir = temp_dir();
  std::vector<manip::io::ManifestEntry> entries = {
      {"z/file.csv", 0x85944171f73967e8ULL},
      {"a/file.csv", 0xcbf29ce484222325ULL},
  };
  manip::io::write_manifest(dir / "manifest.json", entries);

  const auto j =
      nlohmann::json::parse(manip::io::read_text_file(dir / "manifest.json"));
  CHECK(j.at("format_version") == 1);
  REQUIRE(j.at("files").size() == 2);
  CHECK(j["files"][0]["path"] == "a/file.csv");
  CHECK(j["files"][0]["fnv1a64"] == "cbf29ce484222325");
  CHECK(j["files"][1]["path"] == "z/file.csv");
}

TEST_CASE("reading a missing file reports the path") {
  CHECK_THROWS_AS(manip::io::read_text_file("/nonexistent/nope.txt"),
                  manip::IoError);
  CHECK_THROWS_AS(manip::io::read_trajectory_csv("/nonexistent/nope.csv"),
                  manip::IoError);
}
