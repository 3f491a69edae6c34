#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace hpskit {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Rot6d = std::array<double, 6>;

/// Proper rotation stored as an orthonormal 3x3 matrix.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  static Rotation identity() { return Rotation(); }

  /// Validates orthonormality and det = +1 (within 1e-6); throws
  /// InvalidArgument otherwise.
  static Rotation from_matrix(const Mat3& m);

  /// Skips validation. Caller guarantees m is a rotation.
  static Rotation from_matrix_unchecked(const Mat3& m) { return Rotation(m); }

  /// Rotation by angle_rad about a (not necessarily unit) axis.
  static Rotation about_axis(const Vec3& axis, double angle_rad);

  const Mat3& matrix() const { return m_; }

  Rotation inverse() const { return Rotation(m_.transpose()); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(m_ * o.m_); }

 private:
  explicit Rotation(const Mat3& m) : m_(m) {}
  Mat3 m_;
};

/// x -> rotation * x + translation.
struct RigidTransform {
  Rotation rotation;
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 apply(const Vec3& p) const { return rotation * p + translation; }

  /// (a * b).apply(x) == a.apply(b.apply(x)).
  RigidTransform operator*(const RigidTransform& o) const {
    return {rotation * o.rotation, rotation * o.translation + translation};
  }

  RigidTransform inverse() const {
    const Rotation inv = rotation.inverse();
    return {inv, -(inv * translation)};
  }

  Mat4 matrix() const;
};

/// Triangle with cached unit normal. Rejects near-degenerate input.
class Triangle {
 public:
  static constexpr double kMinArea = 1e-12;

  /// Throws InvalidArgument if the area is <= kMinArea.
  Triangle(const Vec3& a, const Vec3& b, const Vec3& c);

  const Vec3& vertex(std::size_t i) const { return v_[i]; }
  const Vec3& normal() const { return n_; }
  double area() const { return area_; }

 private:
  std::array<Vec3, 3> v_;
  Vec3 n_;
  double area_;
};

/// Ordered frame of points in meters, optionally tagged with beam indices.
struct PointCloud {
  std::vector<Vec3> points;
  /// Empty, or one entry per point.
  std::vector<std::int64_t> beam_index;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  /// Throws NonFiniteValue on NaN/inf coordinates and InvalidArgument if
  /// beam_index is neither empty nor size()-long.
  void validate() const;

  Vec3 centroid() const;

  /// Keeps the listed indices in the order given.
  PointCloud subset(std::span<const std::size_t> indices) const;
};

// ---- rotations -------------------------------------------------------------

/// Gram-Schmidt on the two stored columns. Throws DegenerateRotation on zero
/// or parallel inputs.
Rotation rot6d_to_matrix(const Rot6d& r);

/// First two columns, column-major: (R00, R10, R20, R01, R11, R21).
Rot6d matrix_to_rot6d(const Rotation& r);

/// Rodrigues formula; the zero vector maps to identity.
Rotation axis_angle_to_matrix(const Vec3& aa);

/// Inverse of axis_angle_to_matrix with angle in [0, pi].
Vec3 matrix_to_axis_angle(const Rotation& r);

/// Relative rotation angle in degrees, in [0, 180].
double geodesic_angle_deg(const Rotation& a, const Rotation& b);

// ---- ray casting -----------------------------------------------------------

struct RayHit {
  double t;
  Vec3 point;
};

inline constexpr double kParallelTolerance = 1e-9;
inline constexpr double kMinHitDistance = 1e-6;

/// Ray-plane intersection p = c + d * n.(q - c) / n.d followed by a
/// barycentric inside test. Parallel rays and hits at t <= 1e-6 miss.
std::optional<RayHit> ray_triangle_intersect(const Vec3& origin, const Vec3& dir,
                                             const Triangle& tri);

/// Axis-aligned bounding-volume hierarchy over a fixed triangle list.
class TriangleBvh {
 public:
  struct Hit {
    double t;
    Vec3 point;
    std::size_t triangle;
  };

  TriangleBvh() = default;
  explicit TriangleBvh(std::vector<Triangle> triangles);

  std::size_t size() const { return triangles_.size(); }
  const Triangle& triangle(std::size_t i) const { return triangles_[i]; }

  /// Closest hit with t <= max_t; equal t resolves to the lowest triangle
  /// index.
  std::optional<Hit> first_hit(const Vec3& origin, const Vec3& dir, double max_t) const;

 private:
  struct Node {
    Eigen::Vector3d lo, hi;
    std::uint32_t left = 0, right = 0;  // children, valid when count == 0
    std::uint32_t first = 0, count = 0;  // leaf range into order_
  };

  std::uint32_t build(std::uint32_t first, std::uint32_t count);

  std::vector<Triangle> triangles_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

// ---- sampling and neighbors ------------------------------------------------

/// Greedy farthest point sampling. The start index is drawn from seed; each
/// later pick maximizes the distance to the selected set (ties -> lowest
/// index). Returns min(n, N) distinct indices in pick order.
std::vector<std::size_t> farthest_point_sample(const PointCloud& pc, std::size_t n,
                                               std::uint64_t seed);

/// Static kd-tree with exact, index-tie-broken queries.
class KdTree {
 public:
  explicit KdTree(std::span<const Vec3> points);

  std::size_t size() const { return points_.size(); }

  /// k nearest indices ordered by (distance, index).
  std::vector<std::size_t> nearest(const Vec3& q, std::size_t k) const;

  /// Index and squared distance of the nearest point. Tree must be non-empty.
  std::pair<std::size_t, double> nearest_one(const Vec3& q) const;

  /// All indices with squared distance <= radius^2, ascending by index.
  std::vector<std::size_t> within(const Vec3& q, double radius) const;

 private:
  static constexpr std::uint32_t kNone = 0xFFFFFFFFu;

  struct Node {
    std::uint32_t point;
    std::uint32_t left = kNone, right = kNone;
    int axis = 0;
  };

  std::uint32_t build(std::span<std::uint32_t> idx);
  void search_k(std::uint32_t node, const Vec3& q, std::size_t k,
                std::vector<std::pair<double, std::uint32_t>>& heap) const;
  void search_radius(std::uint32_t node, const Vec3& q, double r2,
                     std::vector<std::size_t>& out) const;

  std::vector<Vec3> points_;
  std::vector<Node> nodes_;
  std::uint32_t root_ = kNone;
};

/// Per-query k nearest reference indices, ascending by distance, ties ->
/// lowest index. Throws InvalidArgument if k exceeds the reference size.
std::vector<std::vector<std::size_t>> knn(const PointCloud& query, const PointCloud& reference,
                                          std::size_t k);

/// (1/|src|) sum over src of the squared distance to the nearest dst point.
/// Throws EmptyInput if either cloud is empty.
double unidirectional_chamfer(const PointCloud& src, const PointCloud& dst);
double unidirectional_chamfer(std::span<const Vec3> src, std::span<const Vec3> dst);

}  // namespace hpskit
