#pragma once

// Hand-checkable body models. Expected values below were worked out by hand
// with forward kinematics; Rz90 maps (x, y, z) -> (-y, x, z) and Rx90 maps
// (x, y, z) -> (x, -z, y).

#include "hpskit/body_model.hpp"
#include "hpskit/random.hpp"

#include <tuple>

namespace hpskit::fixtures {

inline Rotation rz90() { return Rotation::about_axis(Vec3::UnitZ(), M_PI / 2); }
inline Rotation rx90() { return Rotation::about_axis(Vec3::UnitX(), M_PI / 2); }

inline constexpr const char* kToyTwoJointText = R"(hpskit-toy-model 1
# two joints on the x axis, one vertex bound to each
joints 2
parent 0 -1
parent 1 0
vertices 2
v 0 0 0
v 2 0 0
weight 0 0 1
weight 1 1 1
regress 0 0 1
regress 1 0 0.5
regress 1 1 0.5
shape 1 0 0 1 0   # beta0 pushes vertex 1 along +y
shape 0 1 0 0 1   # beta1 lifts vertex 0 along +z
)";

/// J0 = v0 = (0,0,0), J1 = (v0 + v1) / 2 = (1,0,0).
inline BodyModel toy_two_joint() { return parse_toy_model(kToyTwoJointText, "toy_two_joint"); }

// Fixture A: child rotated Rz90. v1 = Rz90 (v1 - J1) + J1 = (0,1,0) + (1,0,0).
inline std::vector<Vec3> toy_two_joint_expected_joints() { return {{0, 0, 0}, {1, 0, 0}}; }
inline std::vector<Vec3> toy_two_joint_expected_vertices() { return {{0, 0, 0}, {1, 1, 0}}; }

/// Chain 0 -> 1 -> 2 on the x axis; v3 blends joints 0 and 2 equally.
inline BodyModel toy_chain() {
  BodyModel::Data d;
  d.template_vertices = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  d.parents = {-1, 0, 1};
  d.skin_weights = Eigen::MatrixXd::Zero(4, 3);
  d.skin_weights(0, 0) = 1;
  d.skin_weights(1, 1) = 1;
  d.skin_weights(2, 2) = 1;
  d.skin_weights(3, 0) = 0.5;
  d.skin_weights(3, 2) = 0.5;
  d.joint_regressor = Eigen::MatrixXd::Zero(3, 4);
  d.joint_regressor(0, 0) = 1;
  d.joint_regressor(1, 1) = 1;
  d.joint_regressor(2, 2) = 1;
  return BodyModel(std::move(d));
}

// Fixture B: root Rx90, joint 1 Rz90.
//   G1 = (Rx90 Rz90, (1,0,0)); J2' = Rx90 Rz90 (1,0,0) + (1,0,0) = (1,0,1)
//   v3 via joint 2: Rx90 Rz90 (1,0,0) + (1,0,1) = (1,0,2); via joint 0: (3,0,0)
//   blend -> (2,0,1)
inline std::tuple<PoseParams, std::vector<Vec3>, std::vector<Vec3>> toy_chain_case() {
  PoseParams p = PoseParams::identity(3);
  p.rotations[0] = rx90();
  p.rotations[1] = rz90();
  return {p, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}}, {{0, 0, 0}, {1, 0, 0}, {1, 0, 1}, {2, 0, 1}}};
}

// Fixture C on toy_two_joint: beta = (0.5, 1, 0...), root Rz90, tr = (1,2,3).
//   shaped v0 = (0,0,1), v1 = (2,0.5,0); J0 = (0,0,1), J1 = (1,0.25,0.5)
//   G1.t = Rz90 (1,0.25,-0.5) + J0 = (-0.25,1,0.5)
//   v1' = Rz90 (v1 - J1) + G1.t = (-0.5,2,0)
inline std::tuple<PoseParams, ShapeParams, Translation, std::vector<Vec3>, std::vector<Vec3>> toy_shape_case() {
  PoseParams p = PoseParams::identity(2);
  p.rotations[0] = rz90();
  ShapeParams s;
  s.beta[0] = 0.5;
  s.beta[1] = 1.0;
  return {p, s, Translation{Vec3(1, 2, 3)}, {{1, 2, 4}, {0.75, 3, 3.5}}, {{1, 2, 4}, {0.5, 4, 3}}};
}

inline BodyModel random_toy_model(Rng& rng) {
  const std::size_t nj = 1 + rng.index(6);
  const std::size_t nv = nj + rng.index(20);
  BodyModel::Data d;
  d.parents.push_back(-1);
  for (std::size_t j = 1; j < nj; ++j) d.parents.push_back(static_cast<std::int64_t>(rng.index(j)));
  for (std::size_t v = 0; v < nv; ++v) d.template_vertices.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
  d.skin_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nj));
  for (std::size_t v = 0; v < nv; ++v) {
    double sum = 0.0;
    for (std::size_t j = 0; j < nj; ++j) {
      const double w = rng.uniform() < 0.5 ? rng.uniform() : 0.0;
      d.skin_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) = w;
      sum += w;
    }
    if (sum == 0.0) {
      d.skin_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(rng.index(nj))) = 1.0;
    } else {
      d.skin_weights.row(static_cast<Eigen::Index>(v)) /= sum;
    }
  }
  d.joint_regressor = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(nv));
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t v = 0; v < nv; ++v) d.joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) = rng.uniform();
    d.joint_regressor.row(static_cast<Eigen::Index>(j)) /= d.joint_regressor.row(static_cast<Eigen::Index>(j)).sum();
  }
  d.shape_dirs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * nv), kShapeCoefficients);
  for (Eigen::Index r = 0; r < d.shape_dirs.rows(); ++r)
    for (Eigen::Index c = 0; c < d.shape_dirs.cols(); ++c) d.shape_dirs(r, c) = rng.uniform(-0.1, 0.1);
  return BodyModel(std::move(d));
}

}  // namespace hpskit::fixtures
