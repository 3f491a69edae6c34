#include "doctest.h"
#include "support/cli_run.hpp"
#include "support/tempdir.hpp"

#include "hpskit/dataset_io.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/random.hpp"

#include <cmath>
#include <set>

using namespace hpskit;
using hpskit::testing::CliResult;
using hpskit::testing::TempDir;
using hpskit::testing::run;
using hpskit::testing::snapshot;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\n') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Header name -> value of the single data row.
std::map<std::string, std::string> read_table(const fs::path& file) {
  std::istringstream in(hpskit::testing::read_text(file));
  std::string head, row;
  std::getline(in, head);
  std::getline(in, row);
  const auto h = split(head, ','), r = split(row, ',');
  REQUIRE(h.size() == r.size());
  std::map<std::string, std::string> out;
  for (std::size_t i = 0; i < h.size(); ++i) out[h[i]] = r[i];
  return out;
}

Sequence points_sequence(const std::string& id, const std::vector<Vec3>& pts) {
  Sequence s;
  s.manifest = SequenceManifest::standard(id, 1, {});
  PointCloud pc;
  pc.points = pts;
  s.frames.push_back(pc);
  return s;
}

std::vector<Vec3> float_points(Rng& rng, std::size_t n) {
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < n; ++i) {
    Vec3 p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0, 2));
    for (int c = 0; c < 3; ++c) p[c] = std::ldexp(std::round(std::ldexp(p[c], 12)), -12);
    out.push_back(p);
  }
  return out;
}

void write_trace(const fs::path& file, std::size_t len, std::size_t jump_at) {
  HeightTrace h;
  for (std::size_t i = 0; i < len; ++i) {
    h.values.push_back(i >= jump_at && i < jump_at + 4 ? 1.6 : 1.0);
    h.timestamps.push_back(static_cast<double>(i) / 10.0);
  }
  save_height_trace(h, file);
}

struct ThreadGuard {
  ~ThreadGuard() { set_thread_count(0); }
};

}  // namespace

TEST_CASE("help and unknown subcommands") {
  CHECK(run({"--help"}).code == kExitOk);
  CHECK(run({"simulate", "--help"}).out.find("--crop-range") != std::string::npos);
  CHECK(run({}).code == kExitUsage);
  CHECK(run({"teleport"}).code == kExitUsage);
  CHECK(run({"simulate", "--bogus-flag"}).code == kExitUsage);
}

TEST_CASE("exit codes are distinct") {
  const std::set<int> codes{kExitOk, kExitUsage, kExitConfig, kExitValidation, kExitComputation, kExitIo};
  CHECK(codes.size() == 6);
}

TEST_CASE("simulate cube animation with the default sensor") {
  TempDir tmp("cli_cube");
  hpskit::testing::write_cube_animation(tmp / "anim", 3);
  const CliResult r = run({"simulate", "--mesh", (tmp / "anim").string(), "--out", (tmp / "seq").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  const Sequence s = read_sequence(tmp / "seq");
  REQUIRE(s.frames.size() == 3);
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(s.frames[t].size() > 0);
    CHECK(r.out.find("frame " + std::to_string(t) + ": " + std::to_string(s.frames[t].size()) + " points") !=
          std::string::npos);
  }
  REQUIRE(s.sensor);
  CHECK(s.sensor->h_resolution == 2048);

  const CliResult b = run({"simulate", "--mesh", (tmp / "anim").string(), "--body-only", "--out", (tmp / "b").string()});
  REQUIRE(b.code == kExitOk);
  const Sequence bs = read_sequence(tmp / "b");
  for (std::size_t t = 0; t < 3; ++t) {
    CHECK(bs.frames[t].size() > 0);
    CHECK(bs.frames[t].size() < s.frames[t].size());
  }
}

TEST_CASE("simulate with crop range is deterministic under a seed") {
  TempDir tmp("cli_crop");
  hpskit::testing::write_cube_animation(tmp / "anim", 2);
  auto go = [&](const std::string& out, const std::string& seed) {
    return run({"--seed", seed, "simulate", "--mesh", (tmp / "anim").string(), "--body-only", "--crop-range", "0.1",
                "0.3", "--out", (tmp / out).string(), "--id", "crop"});
  };
  REQUIRE(go("a", "7").code == kExitOk);
  REQUIRE(go("b", "7").code == kExitOk);
  REQUIRE(go("c", "8").code == kExitOk);
  CHECK(snapshot(tmp / "a") == snapshot(tmp / "b"));
  CHECK(snapshot(tmp / "a") != snapshot(tmp / "c"));
}

TEST_CASE("simulate with a missing sensor spec is a config error naming the path") {
  TempDir tmp("cli_nospec");
  hpskit::testing::write_cube_animation(tmp / "anim", 1);
  const std::string spec = (tmp / "nowhere" / "sensor.cfg").string();
  const CliResult r =
      run({"simulate", "--mesh", (tmp / "anim").string(), "--sensor", spec, "--out", (tmp / "s").string()});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find(spec) != std::string::npos);
  CHECK_FALSE(fs::exists(tmp / "s"));
}

TEST_CASE("simulate argument errors") {
  TempDir tmp("cli_simargs");
  CHECK(run({"simulate", "--out", (tmp / "s").string()}).code == kExitUsage);
  const CliResult r = run({"simulate", "--mesh", (tmp / "none.obj").string(), "--out", (tmp / "s").string()});
  CHECK(r.code == kExitValidation);
  CHECK(r.err.find("none.obj") != std::string::npos);
}

TEST_CASE("preprocess of a simulated two-body scene") {
  TempDir tmp("cli_two");
  const auto in = hpskit::testing::two_body_inputs(tmp.path(), 6);
  REQUIRE(run({"simulate", "--model", in[0], "--annotations", in[1], "--annotations", in[2], "--body-only", "--out",
               (tmp / "seq").string()})
              .code == kExitOk);
  const CliResult r = run({"preprocess", "--input", (tmp / "seq").string(), "--out", (tmp / "pre").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);

  std::vector<fs::path> tracks;
  for (const auto& e : fs::directory_iterator(tmp / "pre"))
    if (e.is_directory() && e.path().filename().string().rfind("track_", 0) == 0) tracks.push_back(e.path());
  CHECK(tracks.size() == 2);

  std::set<int> persons;
  for (const auto& dir : tracks) {
    const Sequence s = read_sequence(dir);
    CHECK(s.frames.size() == 6);
    REQUIRE(s.annotations.size() == 1);
    persons.insert(s.annotations[0].person_id);
    std::size_t normalized = 0;
    for (const auto& e : fs::directory_iterator(dir / "normalized")) {
      const PointCloud pc = read_point_frame(e.path(), e.path().string());
      CHECK(pc.size() == 256);
      Vec3 mean = Vec3::Zero();
      for (const auto& p : pc.points) mean += p;
      CHECK((mean / 256.0).norm() < 1e-5);
      ++normalized;
    }
    CHECK(normalized == 6);
  }
  CHECK(persons == std::set<int>{1, 2});
}

TEST_CASE("preprocess honors --nfps and background removal") {
  TempDir tmp("cli_nfps");
  hpskit::testing::write_cube_animation(tmp / "anim", 2);
  REQUIRE(run({"simulate", "--mesh", (tmp / "anim").string(), "--out", (tmp / "seq").string()}).code == kExitOk);
  const Sequence s = read_sequence(tmp / "seq");

  // The floor is the only static surface. A background made from a
  // floor-only scan removes it and leaves the cube.
  hpskit::TriangleMesh floor;
  floor.vertices = {{-10, -10, 0}, {10, -10, 0}, {10, 10, 0}, {-10, 10, 0}};
  floor.faces = {{0, 1, 2}, {0, 2, 3}};
  const std::vector<TriangleMesh> bg{floor};
  write_point_frame(scan_scene(SensorSpec{}, bg), tmp / "bg.bin");

  const CliResult r = run({"preprocess", "--input", (tmp / "seq").string(), "--background", (tmp / "bg.bin").string(),
                           "--nfps", "64", "--out", (tmp / "pre").string()});
  REQUIRE_MESSAGE(r.code == kExitOk, r.err);
  CHECK(r.out.find("tracks: 1") != std::string::npos);
  for (const auto& e : fs::directory_iterator(tmp / "pre" / "track_0" / "normalized"))
    CHECK(read_point_frame(e.path(), "n").size() == 64);
}

TEST_CASE("preprocess of an empty sequence exits cleanly") {
  TempDir tmp("cli_empty");
  Sequence s;
  s.manifest = SequenceManifest::standard("empty", 0, {});
  write_sequence(s, tmp / "seq");
  const CliResult r = run({"preprocess", "--input", (tmp / "seq").string(), "--out", (tmp / "pre").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("no frames") != std::string::npos);
}

TEST_CASE("preprocess output does not depend on the thread count") {
  ThreadGuard guard;
  TempDir tmp("cli_threads");
  const auto in = hpskit::testing::two_body_inputs(tmp.path(), 4);
  REQUIRE(run({"simulate", "--model", in[0], "--annotations", in[1], "--annotations", in[2], "--out",
               (tmp / "seq").string()})
              .code == kExitOk);
  REQUIRE(run({"--threads", "1", "--seed", "5", "preprocess", "--input", (tmp / "seq").string(), "--out",
               (tmp / "one").string()})
              .code == kExitOk);
  REQUIRE(run({"--threads", "3", "--seed", "5", "preprocess", "--input", (tmp / "seq").string(), "--out",
               (tmp / "three").string()})
              .code == kExitOk);
  CHECK(snapshot(tmp / "one") == snapshot(tmp / "three"));
}

TEST_CASE("config file supplies options and flags override it") {
  TempDir tmp("cli_config");
  hpskit::testing::write_cube_animation(tmp / "anim", 1);
  REQUIRE(run({"simulate", "--mesh", (tmp / "anim").string(), "--body-only", "--out", (tmp / "seq").string()}).code ==
          kExitOk);
  {
    std::ofstream(tmp / "run.toml") << "[preprocess]\nnfps = 32\n";
  }
  const std::string cfg = (tmp / "run.toml").string();
  REQUIRE(run({"--config", cfg, "preprocess", "--input", (tmp / "seq").string(), "--out", (tmp / "a").string()})
              .code == kExitOk);
  CHECK(read_point_frame(tmp / "a" / "track_0" / "normalized" / "000000.bin", "a").size() == 32);
  REQUIRE(run({"--config", cfg, "preprocess", "--input", (tmp / "seq").string(), "--nfps", "16", "--out",
               (tmp / "b").string()})
              .code == kExitOk);
  CHECK(read_point_frame(tmp / "b" / "track_0" / "normalized" / "000000.bin", "b").size() == 16);

  CHECK(run({"--config", (tmp / "missing.toml").string(), "preprocess", "--input", (tmp / "seq").string(), "--out",
             (tmp / "c").string()})
            .code == kExitConfig);
}

TEST_CASE("evaluate reports") {
  TempDir tmp("cli_eval");
  const auto in = hpskit::testing::two_body_inputs(tmp.path(), 5);
  const std::string model = in[0], gt = in[1];

  SUBCASE("pred equal to gt is all zero") {
    const CliResult r = run({"evaluate", "--pred", gt, "--gt", gt, "--model", model, "--table",
                             (tmp / "t.csv").string(), "--report", (tmp / "r.json").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto t = read_table(tmp / "t.csv");
    for (const char* k : {"P_joint_mm", "P_vertex_mm", "PS_joint_mm", "PS_vertex_mm", "PST_joint_mm",
                          "PST_vertex_mm", "ang_err_deg"})
      CHECK(std::stod(t.at(k)) == 0.0);
    CHECK(t.at("frames") == "5");
    CHECK(fs::file_size(tmp / "r.json") > 0);
  }

  SUBCASE("50 mm translation offset only shows up in PST") {
    PersonAnnotation p = read_annotation(gt);
    for (auto& tr : p.translations) tr += Vec3(0.03, 0.0, -0.04);
    write_annotation(p, tmp / "pred.json");
    const CliResult r = run({"evaluate", "--pred", (tmp / "pred.json").string(), "--gt", gt, "--model", model,
                             "--table", (tmp / "t.csv").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto t = read_table(tmp / "t.csv");
    CHECK(std::abs(std::stod(t.at("PST_joint_mm")) - 50.0) < 1e-6);
    CHECK(std::abs(std::stod(t.at("PST_vertex_mm")) - 50.0) < 1e-6);
    CHECK(std::abs(std::stod(t.at("P_joint_mm"))) < 1e-9);
    CHECK(std::abs(std::stod(t.at("PS_joint_mm"))) < 1e-9);
    CHECK(r.out.find("50.000000") != std::string::npos);
  }

  SUBCASE("frame count mismatch names both files") {
    PersonAnnotation p = read_annotation(gt);
    p.poses.pop_back();
    p.translations.pop_back();
    const std::string pred = (tmp / "short.json").string();
    write_annotation(p, pred);
    const CliResult r = run({"evaluate", "--pred", pred, "--gt", gt, "--model", model});
    CHECK(r.code == kExitValidation);
    CHECK(r.err.find(pred) != std::string::npos);
    CHECK(r.err.find(gt) != std::string::npos);
  }

  SUBCASE("SUCD against a sequence") {
    REQUIRE(run({"simulate", "--model", model, "--annotations", gt, "--body-only", "--out", (tmp / "seq").string()})
                .code == kExitOk);
    const CliResult r = run({"evaluate", "--pred", gt, "--gt", gt, "--model", model, "--sequence",
                             (tmp / "seq").string(), "--table", (tmp / "t.csv").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    const auto t = read_table(tmp / "t.csv");
    CHECK(t.at("sucd_frames_used") == "5");
    CHECK(std::stod(t.at("sucd_sum_m2")) > 0.0);
  }
}

TEST_CASE("calibrate") {
  TempDir tmp("cli_calib");
  Rng rng(11);
  const auto pts = float_points(rng, 200);
  write_sequence(points_sequence("lidar_a", pts), tmp / "a");

  SUBCASE("self calibration gives the identity") {
    const CliResult r = run({"calibrate", "--source", (tmp / "a").string(), "--target", (tmp / "a").string(), "--out",
                             (tmp / "T.txt").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    std::istringstream in(hpskit::testing::read_text(tmp / "T.txt"));
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        double v = 0;
        REQUIRE(static_cast<bool>(in >> v));
        CHECK(std::abs(v - (i == j ? 1.0 : 0.0)) < 1e-9);
      }
  }

  SUBCASE("a shifted copy is recovered") {
    std::vector<Vec3> moved;
    for (const auto& p : pts) moved.push_back(p + Vec3(0.25, -0.125, 0.0625));
    write_sequence(points_sequence("lidar_b", moved), tmp / "b");
    REQUIRE(run({"calibrate", "--source", (tmp / "a").string(), "--target", (tmp / "b").string(), "--out",
                 (tmp / "T.txt").string()})
                .code == kExitOk);
    std::istringstream in(hpskit::testing::read_text(tmp / "T.txt"));
    std::vector<double> m(16);
    for (auto& v : m) REQUIRE(static_cast<bool>(in >> v));
    CHECK(std::abs(m[3] - 0.25) < 1e-6);
    CHECK(std::abs(m[7] + 0.125) < 1e-6);
    CHECK(std::abs(m[11] - 0.0625) < 1e-6);
  }

  SUBCASE("degenerate registration names both sequences") {
    std::vector<Vec3> line;
    for (int i = 0; i < 20; ++i) line.push_back(Vec3(0.1 * i, 0, 1));
    write_sequence(points_sequence("pole_a", line), tmp / "pa");
    write_sequence(points_sequence("pole_b", line), tmp / "pb");
    const CliResult r = run({"calibrate", "--source", (tmp / "pa").string(), "--target", (tmp / "pb").string(),
                             "--out", (tmp / "T.txt").string()});
    CHECK(r.code == kExitComputation);
    CHECK(r.err.find("pole_a") != std::string::npos);
    CHECK(r.err.find("pole_b") != std::string::npos);
  }
}

TEST_CASE("sync") {
  TempDir tmp("cli_sync");
  write_trace(tmp / "ref.txt", 60, 20);
  write_trace(tmp / "late.txt", 60, 25);

  SUBCASE("a 5-frame shift") {
    const CliResult r = run({"sync", "--stream", (tmp / "ref.txt").string(), "--stream", (tmp / "late.txt").string(),
                             "--out", (tmp / "off.txt").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    std::istringstream in(hpskit::testing::read_text(tmp / "off.txt"));
    std::string line;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') rows.push_back(split(line, ' '));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][1] == "0");
    CHECK(rows[1][1] == "-5");
  }

  SUBCASE("a single stream is a usage error") {
    CHECK(run({"sync", "--stream", (tmp / "ref.txt").string(), "--out", (tmp / "off.txt").string()}).code ==
          kExitUsage);
  }

  SUBCASE("a flat stream has no peak") {
    HeightTrace flat;
    for (int i = 0; i < 30; ++i) {
      flat.values.push_back(1.0);
      flat.timestamps.push_back(i);
    }
    save_height_trace(flat, tmp / "flat.txt");
    const CliResult r = run({"sync", "--stream", (tmp / "ref.txt").string(), "--stream", (tmp / "flat.txt").string(),
                             "--out", (tmp / "off.txt").string()});
    CHECK(r.code == kExitComputation);
    CHECK(r.err.find("flat.txt") != std::string::npos);
  }

  SUBCASE("sequence directories as streams") {
    auto seq_with_jump = [&](const std::string& id, std::size_t at) {
      Sequence s;
      s.manifest = SequenceManifest::standard(id, 40, {});
      for (std::size_t t = 0; t < 40; ++t) {
        PointCloud pc;
        const double z = t >= at && t < at + 4 ? 1.5 : 1.0;
        pc.points = {{0, 0, z}, {0.5, 0, z}, {0, 0.5, z}};
        s.frames.push_back(pc);
      }
      write_sequence(s, tmp / id);
    };
    seq_with_jump("cam", 10);
    seq_with_jump("lidar", 13);
    const CliResult r = run({"sync", "--stream", (tmp / "cam").string(), "--stream", (tmp / "lidar").string(),
                             "--out", (tmp / "off.txt").string()});
    REQUIRE_MESSAGE(r.code == kExitOk, r.err);
    CHECK(r.out.find("lidar: offset -3") != std::string::npos);
  }
}

TEST_CASE("demo-model writes a loadable model") {
  TempDir tmp("cli_demo");
  REQUIRE(run({"demo-model", "--out", (tmp / "m.bin").string()}).code == kExitOk);
  CHECK(load_body_model(tmp / "m.bin").joint_count() == make_demo_body_model().joint_count());
}
