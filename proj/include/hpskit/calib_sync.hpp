#pragma once

#include "hpskit/geometry.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace hpskit {

struct IcpOptions {
  std::size_t max_iters = 100;
  /// Stop once an iteration improves the residual by less than this, meters.
  double tol = 1e-10;
  /// Starting guess. Defaults to the centroid-aligning translation.
  std::optional<RigidTransform> init;
};

struct IcpResult {
  RigidTransform transform;  // maps source onto target
  /// RMS nearest-neighbor distance under the final transform, meters.
  double residual = 0.0;
  std::size_t iterations = 0;
  /// Residual before each update and after the last one; non-increasing.
  std::vector<double> history;
};

/// Point-to-point ICP with closed-form SVD fits (reflections corrected).
/// Throws DegenerateRegistration for clouds with fewer than 3 points, or
/// collinear geometry.
IcpResult icp_register(const PointCloud& source, const PointCloud& target, const IcpOptions& options = {});

/// Least-squares rigid transform taking src[i] to dst[i].
RigidTransform fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst);

/// Vertical position of a tracked subject per frame, meters.
struct HeightTrace {
  std::vector<double> values;
  /// Optional; when present, one per value and strictly increasing.
  std::vector<double> timestamps;

  void validate() const;
};

/// Centered moving average; near the ends the window shrinks to the
/// available samples.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

/// Frame of the global maximum of the smoothed trace, earliest on ties.
/// Throws InvalidArgument when the trace is not longer than the window and
/// NoPeak when the smoothed trace is flat.
std::size_t detect_jump_peak(const HeightTrace& trace, std::size_t window);

/// Per-stream frame offsets mapping every peak onto the first stream's:
/// offset_i = peak_0 - peak_i.
std::vector<long> align_streams(std::span<const HeightTrace> traces, std::size_t window);

}  // namespace hpskit
