#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

#include "hpskit/body_model.hpp"
#include "hpskit/errors.hpp"
#include "hpskit/log.hpp"

#include <filesystem>
#include <fstream>

using namespace hpskit;

namespace {

Rotation rz_deg(double deg) { return Rotation::about_axis(Vec3::UnitZ(), deg * M_PI / 180.0); }

double max_diff(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, (a[i] - b[i]).norm());
  return m;
}

}  // namespace

TEST_CASE("toy fixture A: child joint rotated 90 degrees about z") {
  const BodyModel m = fixtures::toy_two_joint();
  PoseParams pose = PoseParams::identity(2);
  pose.rotations[1] = rz_deg(90);
  const BodyOutput out = forward(m, pose, ShapeParams{}, Translation{});
  CHECK(max_diff(out.joints, fixtures::toy_two_joint_expected_joints()) < 1e-9);
  CHECK(max_diff(out.vertices, fixtures::toy_two_joint_expected_vertices()) < 1e-9);
}

TEST_CASE("toy fixture B: three-joint chain, root and mid rotations") {
  const BodyModel m = fixtures::toy_chain();
  const auto [pose, joints, verts] = fixtures::toy_chain_case();
  const BodyOutput out = forward(m, pose, ShapeParams{}, Translation{});
  CHECK(max_diff(out.joints, joints) < 1e-9);
  CHECK(max_diff(out.vertices, verts) < 1e-9);
}

TEST_CASE("toy fixture C: shape offsets, rotation and translation") {
  const BodyModel m = fixtures::toy_two_joint();
  const auto [pose, shape, tr, joints, verts] = fixtures::toy_shape_case();
  const BodyOutput out = forward(m, pose, shape, tr);
  CHECK(max_diff(out.joints, joints) < 1e-9);
  CHECK(max_diff(out.vertices, verts) < 1e-9);
}

TEST_CASE("forward at rest reproduces the template and regressed joints") {
  const BodyModel m = make_demo_body_model();
  const auto out = forward(m, PoseParams::identity(m.joint_count()), ShapeParams{}, Translation{});
  CHECK(max_diff(out.vertices, m.data().template_vertices) < 1e-12);
  std::vector<Vec3> rest(m.joint_count(), Vec3::Zero());
  for (std::size_t j = 0; j < m.joint_count(); ++j)
    for (std::size_t v = 0; v < m.vertex_count(); ++v)
      rest[j] += m.data().joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) *
                 m.data().template_vertices[v];
  CHECK(max_diff(out.joints, rest) < 1e-12);

  const auto moved = forward(m, PoseParams::identity(m.joint_count()), ShapeParams{}, Translation{Vec3(1, 2, 3)});
  for (std::size_t v = 0; v < m.vertex_count(); ++v) CHECK((moved.vertices[v] - out.vertices[v] - Vec3(1, 2, 3)).norm() < 1e-12);
  for (std::size_t j = 0; j < m.joint_count(); ++j) CHECK((moved.joints[j] - out.joints[j] - Vec3(1, 2, 3)).norm() < 1e-12);
}

TEST_CASE("forward rejects dimension mismatch") {
  const BodyModel m = fixtures::toy_two_joint();
  CHECK_THROWS_AS(forward(m, PoseParams::identity(3), ShapeParams{}, Translation{}), InvalidArgument);
  CHECK_THROWS_AS(global_joint_rotations(m, PoseParams::identity(1)), InvalidArgument);
}

TEST_CASE("global_joint_rotations examples") {
  const BodyModel m = make_demo_body_model();
  const std::size_t nj = m.joint_count();
  for (const auto& r : global_joint_rotations(m, PoseParams::identity(nj))) {
    CHECK((r.matrix() - Mat3::Identity()).norm() < 1e-15);
  }
  PoseParams pose = PoseParams::identity(nj);
  pose.rotations[0] = rz_deg(90);
  for (const auto& r : global_joint_rotations(m, pose)) CHECK((r.matrix() - rz_deg(90).matrix()).norm() < 1e-12);

  const BodyModel chain = fixtures::toy_chain();
  PoseParams p2 = PoseParams::identity(3);
  p2.rotations[1] = rz_deg(45);
  p2.rotations[2] = rz_deg(45);
  CHECK((global_joint_rotations(chain, p2)[2].matrix() - rz_deg(90).matrix()).norm() < 1e-12);
}

TEST_CASE("root_relative_joints") {
  const std::vector<Vec3> j = {{1, 2, 3}, {2, 2, 3}, {1, 5, 3}};
  const auto r = root_relative_joints(j);
  CHECK(r[0] == Vec3::Zero());
  CHECK(r[1] == Vec3(1, 0, 0));
  CHECK(root_relative_joints(r) == r);
  std::vector<Vec3> shifted = j;
  for (auto& p : shifted) p += Vec3(-4, 7, 0.5);
  CHECK(max_diff(root_relative_joints(shifted), r) < 1e-12);
  CHECK_THROWS_AS(root_relative_joints({}), InvalidArgument);
}

TEST_CASE("forward properties on random toy models") {
  Rng rng(404);
  for (int trial = 0; trial < 100; ++trial) {
    const BodyModel m = fixtures::random_toy_model(rng);
    const std::size_t nj = m.joint_count();
    PoseParams pose;
    for (std::size_t j = 0; j < nj; ++j) pose.rotations.push_back(oracle::random_rotation(rng));
    ShapeParams s1, s2, s12;
    for (std::size_t b = 0; b < kShapeCoefficients; ++b) {
      s1.beta[b] = rng.uniform(-2, 2);
      s2.beta[b] = rng.uniform(-2, 2);
      s12.beta[b] = s1.beta[b] + s2.beta[b];
    }
    const Translation t1{oracle::random_point(rng, -3, 3)};
    const Translation t2{oracle::random_point(rng, -3, 3)};

    // Translation moves everything rigidly.
    const auto a = forward(m, pose, s1, t1);
    const auto b = forward(m, pose, s1, t2);
    for (std::size_t i = 0; i < a.vertices.size(); ++i) CHECK((a.vertices[i] - b.vertices[i] - (t1.value - t2.value)).norm() < 1e-6);
    for (std::size_t i = 0; i < a.joints.size(); ++i) CHECK((a.joints[i] - b.joints[i] - (t1.value - t2.value)).norm() < 1e-6);

    // Linear in beta at the identity pose.
    const PoseParams rest = PoseParams::identity(nj);
    const auto o0 = forward(m, rest, ShapeParams{}, Translation{});
    const auto o1 = forward(m, rest, s1, Translation{});
    const auto o2 = forward(m, rest, s2, Translation{});
    const auto o12 = forward(m, rest, s12, Translation{});
    for (std::size_t i = 0; i < o0.vertices.size(); ++i) {
      CHECK(((o12.vertices[i] - o0.vertices[i]) - (o1.vertices[i] - o0.vertices[i]) - (o2.vertices[i] - o0.vertices[i])).norm() < 1e-6);
    }
    for (std::size_t i = 0; i < o0.joints.size(); ++i) {
      CHECK(((o12.joints[i] - o0.joints[i]) - (o1.joints[i] - o0.joints[i]) - (o2.joints[i] - o0.joints[i])).norm() < 1e-6);
    }

    // Rotating the root rotates root-relative outputs.
    const Rotation extra = oracle::random_rotation(rng);
    PoseParams rotated = pose;
    rotated.rotations[0] = extra * pose.rotations[0];
    const auto base = forward(m, pose, s1, Translation{});
    const auto turned = forward(m, rotated, s1, Translation{});
    const Vec3 root = base.joints[0];
    for (std::size_t i = 0; i < base.vertices.size(); ++i) {
      CHECK((turned.vertices[i] - root - extra * (base.vertices[i] - root)).norm() < 1e-6);
    }
  }
}

TEST_CASE("BodyModel rejects invariant violations") {
  BodyModel::Data d = fixtures::toy_two_joint().data();
  SUBCASE("skin weights must sum to one") {
    d.skin_weights(0, 0) = 0.5;
    CHECK_THROWS_AS(BodyModel{d}, InvalidArgument);
  }
  SUBCASE("negative skin weights") {
    d.skin_weights(0, 0) = 1.5;
    d.skin_weights(0, 1) = -0.5;
    CHECK_THROWS_AS(BodyModel{d}, InvalidArgument);
  }
  SUBCASE("parent must precede the child") {
    d.parents[1] = 1;
    CHECK_THROWS_AS(BodyModel{d}, InvalidArgument);
  }
  SUBCASE("regressor rows sum to one") {
    d.joint_regressor(1, 0) = 0.9;
    CHECK_THROWS_AS(BodyModel{d}, InvalidArgument);
  }
}

TEST_CASE("ShapeParams validation warns on large coefficients") {
  std::vector<std::string> warnings;
  auto prev = set_warning_sink([&](const std::string& m) { warnings.push_back(m); });
  ShapeParams s;
  s.beta[3] = 11.0;
  s.validate();
  CHECK(warnings.size() == 1);
  s.beta[3] = std::nan("");
  CHECK_THROWS_AS(s.validate(), NonFiniteValue);
  set_warning_sink(prev);
}

TEST_CASE("binary model container round trip") {
  const BodyModel m = make_demo_body_model();
  const auto path = std::filesystem::temp_directory_path() / "hpskit_test_model.hbm";
  save_body_model(m, path);
  const BodyModel back = load_body_model(path);
  CHECK(back.joint_count() == m.joint_count());
  CHECK(back.vertex_count() == m.vertex_count());
  CHECK(back.faces() == m.faces());
  CHECK(back.data().parents == m.data().parents);
  CHECK((back.data().joint_regressor - m.data().joint_regressor).norm() == 0.0);
  CHECK((back.data().skin_weights - m.data().skin_weights).norm() == 0.0);
  CHECK((back.data().shape_dirs - m.data().shape_dirs).norm() == 0.0);
  CHECK(max_diff(back.data().template_vertices, m.data().template_vertices) == 0.0);

  // Truncation is reported.
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 100);
  CHECK_THROWS_AS(load_body_model(path), ValidationError);
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_body_model(path), MissingFile);
}

TEST_CASE("toy text format parses and reports located errors") {
  const BodyModel m = parse_toy_model(fixtures::kToyTwoJointText);
  CHECK(m.joint_count() == 2);
  CHECK(m.vertex_count() == 2);

  try {
    parse_toy_model("hpskit-toy-model 1\njoints 2\nparent 0 -1\nparent 1 0\nvertices 1\nv 0 0 0\nweight 0 5 1\n", "bad.toy");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 7);
    CHECK(std::string(e.what()).find("bad.toy:7") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_toy_model("nonsense\n"), ParseError);
  // Parsed fine but violates the skin-weight invariant.
  CHECK_THROWS_AS(parse_toy_model("hpskit-toy-model 1\njoints 1\nparent 0 -1\nvertices 1\nv 0 0 0\nregress 0 0 1\n"),
                  ValidationError);
}

TEST_CASE("demo model satisfies invariants") {
  const BodyModel m = make_demo_body_model();
  CHECK(m.joint_count() == kSmplJoints);
  CHECK(m.faces().size() > 500);
  for (const auto& f : m.faces()) CHECK_NOTHROW(Triangle(m.data().template_vertices[f[0]], m.data().template_vertices[f[1]], m.data().template_vertices[f[2]]));
}
