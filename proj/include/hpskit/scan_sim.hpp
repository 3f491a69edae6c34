#pragma once

#include "hpskit/geometry.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hpskit {

/// Beam pattern of a spinning LiDAR. Defaults match a 128-line, 2048-column
/// unit mounted 2 m above the origin.
struct SensorSpec {
  std::size_t h_resolution = 2048;
  std::size_t v_lines = 128;
  double v_fov_deg = 45.0;
  double h_fov_deg = 360.0;
  Vec3 center = Vec3(0.0, 0.0, 2.0);
  double max_range = 120.0;
  /// Reserved for a per-point range perturbation model; must be 0 for now.
  double range_noise_m = 0.0;

  /// Throws ConfigError on an invalid field.
  void validate() const;
};

/// Parses `key = value` lines (`#` comments). Unknown keys are errors.
SensorSpec parse_sensor_spec(const std::string& text, const std::string& source = "<sensor>");
SensorSpec load_sensor_spec(const std::filesystem::path& path);
std::string format_sensor_spec(const SensorSpec& spec);

enum class MeshRole { kScene, kBody };

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> faces;
  std::string name;
  MeshRole role = MeshRole::kScene;

  /// Index range and non-degenerate-triangle checks; throws InvalidArgument.
  void validate() const;
  std::vector<Triangle> triangles() const;
};

/// Row-major (scan line major, azimuth minor). Elevation phi spans
/// [-v_fov/2, +v_fov/2]; azimuth theta starts at +y and turns clockwise seen
/// from +z; d = (cos phi sin theta, cos phi cos theta, sin phi).
std::vector<Vec3> beam_directions(const SensorSpec& spec);

/// Per-beam angles underlying beam_directions, degrees.
std::pair<double, double> beam_angles_deg(const SensorSpec& spec, std::size_t beam);

struct LabeledScan {
  PointCloud cloud;         // beam_index filled
  std::vector<std::size_t> mesh;  // index into the mesh list, per point
};

/// Nearest first hit per beam across all meshes within max_range.
LabeledScan scan_scene_labeled(const SensorSpec& spec, std::span<const TriangleMesh> meshes);
PointCloud scan_scene(const SensorSpec& spec, std::span<const TriangleMesh> meshes);

/// Keeps points strictly farther than r from o, order preserved.
PointCloud crop_occlusion(const PointCloud& pc, const Vec3& o, double r);

/// o drawn uniformly from the cloud's points, r uniformly from r_range.
PointCloud random_crop(const PointCloud& pc, std::pair<double, double> r_range, std::uint64_t seed);

/// scan_scene per frame, parallel over frames. With body_segmentation only
/// points whose first hit is a body-role mesh survive.
std::vector<PointCloud> simulate_sequence(const SensorSpec& spec,
                                          std::span<const std::vector<TriangleMesh>> frames,
                                          bool body_segmentation);

}  // namespace hpskit
