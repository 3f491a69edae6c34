#include "hpskit/calib_sync.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace hpskit {

namespace {

Vec3 mean_of(std::span<const Vec3> pts) {
  Vec3 s = Vec3::Zero();
  for (const auto& p : pts) s += p;
  return s / static_cast<double>(pts.size());
}

void require_spread(std::span<const Vec3> pts, const char* which) {
  if (pts.size() < 3) {
    throw DegenerateRegistration(std::string("icp: ") + which + " cloud needs at least 3 points");
  }
  const Vec3 c = mean_of(pts);
  Mat3 cov = Mat3::Zero();
  for (const auto& p : pts) cov += (p - c) * (p - c).transpose();
  const Vec3 sv = Eigen::JacobiSVD<Mat3>(cov).singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw DegenerateRegistration(std::string("icp: ") + which + " cloud is collinear");
  }
}

}  // namespace

RigidTransform fit_rigid(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) throw InvalidArgument("fit_rigid: size mismatch");
  if (src.size() < 3) throw DegenerateRegistration("fit_rigid: needs at least 3 pairs");
  const Vec3 cs = mean_of(src), cd = mean_of(dst);
  Mat3 h = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) h += (src[i] - cs) * (dst[i] - cd).transpose();
  const Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 sv = svd.singularValues();
  if (!(sv[0] > 0.0) || sv[1] <= 1e-12 * sv[0]) {
    throw DegenerateRegistration("fit_rigid: rank-deficient cross-covariance");
  }
  const Mat3 u = svd.matrixU(), v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = v * d * u.transpose();
  RigidTransform t;
  t.rotation = Rotation::from_matrix_unchecked(r);
  t.translation = cd - r * cs;
  return t;
}

IcpResult icp_register(const PointCloud& source, const PointCloud& target, const IcpOptions& options) {
  require_spread(source.points, "source");
  require_spread(target.points, "target");
  if (options.max_iters == 0) throw InvalidArgument("icp: max_iters must be >= 1");
  if (!(options.tol >= 0.0)) throw InvalidArgument("icp: tol must be >= 0");

  const KdTree tree(target.points);
  const std::size_t n = source.size();
  std::vector<Vec3> matched(n);
  std::vector<double> d2(n);

  // Fresh correspondences under t; returns the RMS distance.
  auto correspond = [&](const RigidTransform& t) {
    parallel_for(n, [&](std::size_t i) {
      const auto [j, dist2] = tree.nearest_one(t.apply(source.points[i]));
      matched[i] = target.points[j];
      d2[i] = dist2;
    });
    double s = 0.0;
    for (double v : d2) s += v;
    return std::sqrt(s / static_cast<double>(n));
  };

  IcpResult out;
  if (options.init) {
    out.transform = *options.init;
  } else {
    out.transform.translation = target.centroid() - source.centroid();
  }
  double residual = correspond(out.transform);
  out.history.push_back(residual);
  for (std::size_t it = 0; it < options.max_iters; ++it) {
    const RigidTransform next = fit_rigid(source.points, matched);
    const double r = correspond(next);
    ++out.iterations;
    // The fit can not raise the error on the old pairs and re-matching can
    // not raise it further, so r <= residual up to rounding.
    const double improvement = residual - r;
    if (r <= residual) {
      out.transform = next;
      residual = r;
      out.history.push_back(r);
    } else {
      break;
    }
    if (improvement < options.tol || residual == 0.0) break;
  }
  out.residual = residual;
  return out;
}

void HeightTrace::validate() const {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) throw NonFiniteValue("height trace: non-finite value at frame " + std::to_string(i));
  }
  if (timestamps.empty()) return;
  if (timestamps.size() != values.size()) throw CountMismatch("height trace: timestamp count differs from values");
  for (std::size_t i = 1; i < timestamps.size(); ++i) {
    if (!(timestamps[i] > timestamps[i - 1])) {
      throw ValidationError("height trace: timestamps not increasing at frame " + std::to_string(i));
    }
  }
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
  if (window == 0) throw InvalidArgument("moving_average: window must be >= 1");
  const std::size_t n = values.size();
  const std::size_t before = (window - 1) / 2, after = window / 2;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= before ? i - before : 0;
    const std::size_t hi = std::min(n - 1, i + after);
    // Direct summation, so equal neighborhoods give bit-equal means.
    double s = 0.0;
    for (std::size_t k = lo; k <= hi; ++k) s += values[k];
    out[i] = s / static_cast<double>(hi - lo + 1);
  }
  return out;
}

std::size_t detect_jump_peak(const HeightTrace& trace, std::size_t window) {
  trace.validate();
  if (window == 0) throw InvalidArgument("detect_jump_peak: window must be >= 1");
  if (trace.values.size() <= window) {
    throw InvalidArgument("detect_jump_peak: trace of " + std::to_string(trace.values.size()) +
                          " frames is not longer than the window of " + std::to_string(window));
  }
  const std::vector<double> s = moving_average(trace.values, window);
  std::size_t best = 0;
  double lo = s[0];
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i] > s[best]) best = i;
    lo = std::min(lo, s[i]);
  }
  if (s[best] - lo <= 1e-12) throw NoPeak("detect_jump_peak: trace is flat");
  return best;
}

std::vector<long> align_streams(std::span<const HeightTrace> traces, std::size_t window) {
  if (traces.size() < 2) throw InvalidArgument("align_streams: needs at least 2 streams");
  std::vector<long> peaks(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) {
    try {
      peaks[i] = static_cast<long>(detect_jump_peak(traces[i], window));
    } catch (const NoPeak& e) {
      throw NoPeak("stream " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<long> offsets(traces.size());
  for (std::size_t i = 0; i < traces.size(); ++i) offsets[i] = peaks[0] - peaks[i];
  return offsets;
}

}  // namespace hpskit
