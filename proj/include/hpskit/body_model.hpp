#pragma once

#include "hpskit/geometry.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace hpskit {

inline constexpr std::size_t kShapeCoefficients = 10;
inline constexpr std::size_t kSmplJoints = 24;
inline constexpr std::size_t kSmplVertices = 6890;

struct PoseParams {
  /// One local rotation per joint, root first.
  std::vector<Rotation> rotations;

  static PoseParams identity(std::size_t joints);
  static PoseParams from_axis_angle(std::span<const Vec3> aa);
  static PoseParams from_rot6d(std::span<const Rot6d> r6);

  std::vector<Vec3> to_axis_angle() const;
  std::size_t size() const { return rotations.size(); }
};

struct ShapeParams {
  std::array<double, kShapeCoefficients> beta{};

  /// Throws NonFiniteValue for NaN/inf. Warns when |beta_i| > 10.
  void validate() const;
};

struct Translation {
  Vec3 value = Vec3::Zero();
};

struct BodyOutput {
  std::vector<Vec3> joints;
  std::vector<Vec3> vertices;
};

using Face = std::array<std::uint32_t, 3>;

/// Immutable skinned body: template mesh, kinematic tree, skin weights,
/// linear shape basis and joint regressor. Pose correctives are not modeled.
class BodyModel {
 public:
  struct Data {
    std::vector<Vec3> template_vertices;
    /// parents[0] < 0 marks the root; parents[j] < j otherwise.
    std::vector<std::int64_t> parents;
    Eigen::MatrixXd joint_regressor;  // N_J x N_V
    Eigen::MatrixXd skin_weights;     // N_V x N_J
    Eigen::MatrixXd shape_dirs;       // 3*N_V x 10, row 3v+c
    std::vector<Face> faces;          // optional, needed for scanning
  };

  /// Validates every invariant and throws InvalidArgument on the first
  /// violation. A zero-column shape_dirs is widened to 10 zero columns.
  explicit BodyModel(Data data);

  std::size_t joint_count() const { return d_.parents.size(); }
  std::size_t vertex_count() const { return d_.template_vertices.size(); }
  const Data& data() const { return d_; }
  const std::vector<Face>& faces() const { return d_.faces; }

 private:
  Data d_;
};

/// Shape blend, joint regression, forward kinematics and linear blend
/// skinning; translation is added last. Throws InvalidArgument on a pose of
/// the wrong length.
BodyOutput forward(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape,
                   const Translation& tr);

/// Product of local rotations from the root down to each joint.
std::vector<Rotation> global_joint_rotations(const BodyModel& model, const PoseParams& pose);

/// Subtracts joint 0 from every joint.
std::vector<Vec3> root_relative_joints(std::span<const Vec3> joints);

/// Reads either container: the binary model format or the text toy format,
/// chosen by the file's leading magic.
BodyModel load_body_model(const std::filesystem::path& path);
void save_body_model(const BodyModel& model, const std::filesystem::path& path);

/// Parses the human-writable toy format. `source` names the input in
/// ParseError diagnostics.
BodyModel parse_toy_model(const std::string& text, const std::string& source = "<toy>");

/// Procedural 24-joint stick-capsule figure, z-up, pelvis at the origin and
/// feet about 0.9 m below it. Useful for demos and end-to-end tests.
BodyModel make_demo_body_model();

}  // namespace hpskit
