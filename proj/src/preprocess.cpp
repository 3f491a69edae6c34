#include "hpskit/preprocess.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/log.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hpskit {

PointCloud remove_background(const PointCloud& frame, const PointCloud& background, double threshold) {
  if (!(threshold > 0.0)) throw InvalidArgument("remove_background: threshold must be > 0");
  if (background.empty()) {
    warn("remove_background: empty background, frame kept unchanged");
    return frame;
  }
  const KdTree tree(background.points);
  const double t2 = threshold * threshold;
  std::vector<char> keep(frame.size(), 0);
  parallel_for(frame.size(), [&](std::size_t i) { keep[i] = tree.nearest_one(frame.points[i]).second > t2; });
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (keep[i]) idx.push_back(i);
  return frame.subset(idx);
}

Clustering cluster_instances(const PointCloud& pc, double eps, std::size_t min_pts) {
  if (!(eps > 0.0)) throw InvalidArgument("cluster_instances: eps must be > 0");
  if (min_pts == 0) throw InvalidArgument("cluster_instances: min_pts must be >= 1");
  Clustering out;
  const std::size_t n = pc.size();
  if (n == 0) return out;

  const KdTree tree(pc.points);
  std::vector<std::vector<std::size_t>> nbrs(n);
  parallel_for(n, [&](std::size_t i) { nbrs[i] = tree.within(pc.points[i], eps); });

  constexpr std::size_t kUnset = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> label(n, kUnset);
  std::size_t next = 0;
  std::vector<std::size_t> queue;
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] != kUnset || nbrs[i].size() < min_pts) continue;
    const std::size_t c = next++;
    label[i] = c;
    queue.assign(1, i);
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const std::size_t p = queue[q];
      if (nbrs[p].size() < min_pts) continue;  // border: does not expand
      for (std::size_t j : nbrs[p]) {
        if (label[j] != kUnset) continue;
        label[j] = c;
        queue.push_back(j);
      }
    }
  }

  std::vector<std::vector<std::size_t>> raw(next);
  for (std::size_t i = 0; i < n; ++i) {
    if (label[i] == kUnset)
      out.noise.push_back(i);
    else
      raw[label[i]].push_back(i);
  }
  std::sort(raw.begin(), raw.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  out.clusters = std::move(raw);
  return out;
}

namespace {

// Potentials-based shortest augmenting path, O(n^2 m), requires rows <= cols.
Assignment hungarian_wide(const Eigen::MatrixXd& a) {
  const std::size_t n = static_cast<std::size_t>(a.rows());
  const std::size_t m = static_cast<std::size_t>(a.cols());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, kInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(static_cast<Eigen::Index>(i0 - 1), static_cast<Eigen::Index>(j - 1)) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  for (std::size_t j = 1; j <= m; ++j) {
    if (p[j] != 0) out.pairs.emplace_back(p[j] - 1, j - 1);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  for (const auto& [r, c] : out.pairs) out.total_cost += a(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  return out;
}

}  // namespace

Assignment hungarian_assign(const Eigen::MatrixXd& cost) {
  if (!cost.allFinite()) throw InvalidArgument("hungarian_assign: non-finite cost");
  if (cost.rows() == 0 || cost.cols() == 0) return {};
  if (cost.rows() <= cost.cols()) return hungarian_wide(cost);
  Assignment t = hungarian_wide(cost.transpose());
  for (auto& pr : t.pairs) std::swap(pr.first, pr.second);
  std::sort(t.pairs.begin(), t.pairs.end());
  return t;
}

std::optional<std::size_t> Track::last_seen() const {
  for (std::size_t f = clouds.size(); f-- > 0;)
    if (clouds[f]) return f;
  return std::nullopt;
}

void track_instances(TrackSet& set, const std::vector<PointCloud>& clusters, const TrackerConfig& config) {
  if (!(config.max_dist > 0.0)) throw InvalidArgument("track_instances: max_dist must be > 0");
  std::vector<Track>& tracks = set.tracks;
  const std::size_t frame = set.frames;

  std::vector<Vec3> centroids;
  for (const auto& c : clusters) {
    if (c.empty()) throw EmptyInput("track_instances: empty cluster");
    centroids.push_back(c.centroid());
  }

  const auto nt = static_cast<Eigen::Index>(tracks.size());
  const auto nc = static_cast<Eigen::Index>(clusters.size());
  Eigen::MatrixXd dist(nt, nc);
  std::vector<double> gate(tracks.size(), 0.0);
  std::vector<char> alive(tracks.size(), 0);
  double worst = 0.0;
  for (Eigen::Index t = 0; t < nt; ++t) {
    const Track& tr = tracks[static_cast<std::size_t>(t)];
    const auto last = tr.last_seen();
    if (!last) continue;
    alive[static_cast<std::size_t>(t)] = 1;
    gate[static_cast<std::size_t>(t)] = config.max_dist * static_cast<double>(frame - *last);
    for (Eigen::Index c = 0; c < nc; ++c) {
      dist(t, c) = (*tr.locations[*last] - centroids[static_cast<std::size_t>(c)]).norm();
      worst = std::max(worst, dist(t, c));
    }
  }
  // Gated-out pairs get a cost larger than any feasible total, so the
  // solver maximizes the number of feasible matches first.
  const double big = (worst + 1.0) * static_cast<double>(std::max<Eigen::Index>(1, std::min(nt, nc)) + 1);
  Eigen::MatrixXd cost(nt, nc);
  for (Eigen::Index t = 0; t < nt; ++t)
    for (Eigen::Index c = 0; c < nc; ++c) {
      const auto ts = static_cast<std::size_t>(t);
      cost(t, c) = (alive[ts] && dist(t, c) <= gate[ts]) ? dist(t, c) : big;
    }

  std::vector<std::optional<std::size_t>> match(tracks.size());
  std::vector<char> used(clusters.size(), 0);
  for (const auto& [t, c] : hungarian_assign(cost).pairs) {
    if (cost(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) >= big) continue;
    match[t] = c;
    used[c] = 1;
  }

  for (std::size_t t = 0; t < tracks.size(); ++t) {
    Track& tr = tracks[t];
    tr.clouds.resize(frame);
    tr.locations.resize(frame);
    if (match[t]) {
      tr.clouds.push_back(clusters[*match[t]]);
      tr.locations.push_back(centroids[*match[t]]);
    } else {
      tr.clouds.emplace_back();
      tr.locations.emplace_back();
    }
  }

  int next_id = 0;
  for (const auto& t : tracks) next_id = std::max(next_id, t.id + 1);
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    if (used[c]) continue;
    Track tr;
    tr.id = next_id++;
    tr.clouds.resize(frame);
    tr.locations.resize(frame);
    tr.clouds.push_back(clusters[c]);
    tr.locations.push_back(centroids[c]);
    tracks.push_back(std::move(tr));
  }
  ++set.frames;
}

NormalizedFrame normalize_frame(const PointCloud& pc, std::uint64_t seed, std::size_t n) {
  if (pc.empty()) throw EmptyInput("normalize_frame: empty cloud");
  if (n == 0) throw InvalidArgument("normalize_frame: n must be >= 1");
  NormalizedFrame out;
  if (pc.size() >= n) {
    out.source = farthest_point_sample(pc, n, seed);
  } else {
    out.source.resize(pc.size());
    std::iota(out.source.begin(), out.source.end(), std::size_t{0});
    Rng rng(seed);
    while (out.source.size() < n) out.source.push_back(rng.index(pc.size()));
  }
  Vec3 sum = Vec3::Zero();
  for (std::size_t i : out.source) sum += pc.points[i];
  out.loc = sum / static_cast<double>(n);
  out.points.reserve(n);
  for (std::size_t i : out.source) out.points.push_back(pc.points[i] - out.loc);
  return out;
}

std::vector<std::size_t> vertex_guidance(const PointCloud& pc, std::span<const Vec3> gt_vertices,
                                         const Translation& gt_translation, std::size_t k) {
  if (pc.empty() || gt_vertices.empty()) throw EmptyInput("vertex_guidance: empty input");
  if (k == 0) throw InvalidArgument("vertex_guidance: k must be >= 1");
  PointCloud aligned;
  aligned.points.reserve(pc.size());
  for (const auto& p : pc.points) aligned.points.push_back(p - gt_translation.value);
  PointCloud mesh;
  mesh.points.assign(gt_vertices.begin(), gt_vertices.end());
  std::vector<std::size_t> out;
  for (const auto& row : knn(aligned, mesh, k)) out.insert(out.end(), row.begin(), row.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace hpskit
