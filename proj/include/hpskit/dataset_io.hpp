#pragma once

#include "hpskit/body_model.hpp"
#include "hpskit/calib_sync.hpp"
#include "hpskit/geometry.hpp"
#include "hpskit/metrics.hpp"
#include "hpskit/scan_sim.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hpskit {

inline constexpr int kFormatVersion = 1;
inline constexpr double kDefaultFrameRate = 10.0;

struct SequenceManifest {
  int format_version = kFormatVersion;
  std::string sequence_id;
  std::size_t frame_count = 0;
  double frame_rate = kDefaultFrameRate;
  std::vector<double> timestamps;
  std::vector<int> person_ids;
  /// Relative to the sequence directory, one per frame / per person.
  std::vector<std::string> frame_files;
  std::vector<std::string> annotation_files;
  /// Empty when no sensor spec is stored.
  std::string sensor_file;
  std::string coordinate_frame = "world, z up, meters";

  /// Standard file names and timestamps at frame_rate.
  static SequenceManifest standard(const std::string& id, std::size_t frames, std::vector<int> persons,
                                   bool with_sensor = false);

  /// Count agreement, strictly increasing timestamps, unique person ids.
  /// Throws CountMismatch or ValidationError.
  void validate() const;
};

/// Ground-truth or predicted SMPL parameters of one person, axis-angle
/// poses.
struct PersonAnnotation {
  int person_id = 0;
  ShapeParams shape;
  std::vector<std::vector<Vec3>> poses;  // frame -> joint
  std::vector<Vec3> translations;

  std::size_t frame_count() const { return poses.size(); }

  /// Throws NonFiniteValue naming person and frame, CountMismatch on
  /// ragged data.
  void validate() const;

  SmplSequence to_smpl() const;
  static PersonAnnotation from_smpl(int person_id, const SmplSequence& seq);
};

struct Sequence {
  SequenceManifest manifest;
  std::vector<PointCloud> frames;
  std::vector<PersonAnnotation> annotations;  // same order as person_ids
  std::optional<SensorSpec> sensor;
};

/// Writes manifest.json, frames/*.bin and annotations/person_<id>.json.
/// Points are stored as float32. Holds a lock file in the directory for the
/// duration; a present lock fails with IoError.
void write_sequence(const Sequence& seq, const std::filesystem::path& dir);

/// Loads and validates everything the manifest references.
Sequence read_sequence(const std::filesystem::path& dir);

void write_point_frame(const PointCloud& pc, const std::filesystem::path& file);
PointCloud read_point_frame(const std::filesystem::path& file, const std::string& label);

void write_annotation(const PersonAnnotation& a, const std::filesystem::path& file);
PersonAnnotation read_annotation(const std::filesystem::path& file);

/// Wavefront OBJ subset: v, f (polygons fan-triangulated, v/vt/vn and
/// negative indices accepted), o/g. Each object becomes one mesh with its
/// referenced vertices in first-use order; objects named body* get the
/// body role.
std::vector<TriangleMesh> parse_obj(const std::string& text, const std::string& source = "<obj>");
std::vector<TriangleMesh> load_obj(const std::filesystem::path& file);
void save_obj(std::span<const TriangleMesh> meshes, const std::filesystem::path& file);

/// A single OBJ file is one frame; a directory holds one frame per .obj
/// file in name order. Topology must match across frames.
std::vector<std::vector<TriangleMesh>> import_mesh_animation(const std::filesystem::path& path);

/// One value per line, or `timestamp value` pairs. `#` comments.
HeightTrace load_height_trace(const std::filesystem::path& file);
void save_height_trace(const HeightTrace& trace, const std::filesystem::path& file);

/// Centroid heights of a sequence's frames; empty frames are an error.
HeightTrace height_trace_from_sequence(const Sequence& seq);

}  // namespace hpskit
