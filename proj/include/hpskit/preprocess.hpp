#pragma once

#include "hpskit/body_model.hpp"
#include "hpskit/geometry.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace hpskit {

inline constexpr std::size_t kFpsPoints = 256;

struct Frame {
  double timestamp = 0.0;
  PointCloud cloud;
};

/// Keeps points whose nearest background point is farther than threshold.
/// An empty background returns the frame unchanged and warns.
PointCloud remove_background(const PointCloud& frame, const PointCloud& background, double threshold);

struct Clustering {
  /// Member indices into the input, ascending. Clusters are ordered by their
  /// first member.
  std::vector<std::vector<std::size_t>> clusters;
  std::vector<std::size_t> noise;
};

/// DBSCAN. A point's neighborhood includes itself (distance <= eps); a point
/// is core when the neighborhood holds at least min_pts points. A border
/// point reachable from several clusters joins the one found first by the
/// index-ordered scan.
Clustering cluster_instances(const PointCloud& pc, double eps, std::size_t min_pts);

struct Assignment {
  /// (row, col) pairs ascending by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

/// Minimum-cost one-to-one assignment of min(M, N) pairs.
Assignment hungarian_assign(const Eigen::MatrixXd& cost);

struct Track {
  int id = 0;
  /// One slot per frame processed so far; nullopt is a gap.
  std::vector<std::optional<PointCloud>> clouds;
  std::vector<std::optional<Vec3>> locations;

  /// Index of the last frame with a cloud, or nullopt.
  std::optional<std::size_t> last_seen() const;
};

/// Tracks plus the number of frames folded in so far.
struct TrackSet {
  std::vector<Track> tracks;
  std::size_t frames = 0;
};

struct TrackerConfig {
  /// Gate per frame of separation between the track's last sighting and now.
  double max_dist = 1.0;
};

/// Folds one frame of clusters into the track set. Existing tracks that do
/// not match record a gap; unmatched clusters open new tracks (gap-padded
/// for earlier frames) with ids above every id in use.
void track_instances(TrackSet& set, const std::vector<PointCloud>& clusters, const TrackerConfig& config);

struct NormalizedFrame {
  std::vector<Vec3> points;  // centered
  Vec3 loc = Vec3::Zero();
  /// Source index of every output point.
  std::vector<std::size_t> source;
};

/// FPS down to n points, or seeded resampling with replacement up to n when
/// the cloud is smaller, then centering on the mean of the selection.
NormalizedFrame normalize_frame(const PointCloud& pc, std::uint64_t seed, std::size_t n = kFpsPoints);

/// Union of the k nearest mesh vertices of every point after subtracting the
/// translation. Sorted, deduplicated vertex indices.
std::vector<std::size_t> vertex_guidance(const PointCloud& pc, std::span<const Vec3> gt_vertices,
                                         const Translation& gt_translation, std::size_t k = 1);

}  // namespace hpskit
