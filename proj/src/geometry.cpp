#include "hpskit/geometry.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace hpskit {

namespace {

constexpr double kRotationTolerance = 1e-6;
constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_rotation(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::isfinite(ortho) && ortho < kRotationTolerance &&
         std::abs(m.determinant() - 1.0) < kRotationTolerance;
}

}  // namespace

Rotation Rotation::from_matrix(const Mat3& m) {
  if (!is_rotation(m)) throw InvalidArgument("matrix is not a proper rotation");
  return Rotation(m);
}

Rotation Rotation::about_axis(const Vec3& axis, double angle_rad) {
  const double len = axis.norm();
  if (len == 0.0) return Rotation();
  return Rotation(Eigen::AngleAxisd(angle_rad, axis / len).toRotationMatrix());
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation.matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Triangle::Triangle(const Vec3& a, const Vec3& b, const Vec3& c) : v_{a, b, c} {
  const Vec3 cross = (b - a).cross(c - a);
  area_ = 0.5 * cross.norm();
  if (!(area_ > kMinArea)) throw InvalidArgument("degenerate triangle (area <= 1e-12 m^2)");
  n_ = cross.normalized();
}

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw NonFiniteValue("non-finite coordinate at point " + std::to_string(i));
    }
  }
  if (!beam_index.empty() && beam_index.size() != points.size()) {
    throw InvalidArgument("beam_index length does not match point count");
  }
}

Vec3 PointCloud::centroid() const {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

PointCloud PointCloud::subset(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  for (std::size_t i : indices) out.points.push_back(points.at(i));
  if (!beam_index.empty()) {
    out.beam_index.reserve(indices.size());
    for (std::size_t i : indices) out.beam_index.push_back(beam_index.at(i));
  }
  return out;
}

// ---- rotations -------------------------------------------------------------

Rotation rot6d_to_matrix(const Rot6d& r) {
  const Vec3 a1(r[0], r[1], r[2]);
  const Vec3 a2(r[3], r[4], r[5]);
  const double n1 = a1.norm();
  if (!(n1 > 1e-12)) throw DegenerateRotation("6D rotation: first column is zero");
  const Vec3 b1 = a1 / n1;
  const Vec3 u = a2 - b1.dot(a2) * b1;
  const double n2 = u.norm();
  if (!(n2 > 1e-12 * std::max(1.0, a2.norm()))) {
    throw DegenerateRotation("6D rotation: columns are zero or parallel");
  }
  const Vec3 b2 = u / n2;
  Mat3 m;
  m.col(0) = b1;
  m.col(1) = b2;
  m.col(2) = b1.cross(b2);
  return Rotation::from_matrix_unchecked(m);
}

Rot6d matrix_to_rot6d(const Rotation& r) {
  const Mat3& m = r.matrix();
  return {m(0, 0), m(1, 0), m(2, 0), m(0, 1), m(1, 1), m(2, 1)};
}

Rotation axis_angle_to_matrix(const Vec3& aa) {
  const double angle = aa.norm();
  if (angle == 0.0) return Rotation();
  return Rotation::from_matrix_unchecked(Eigen::AngleAxisd(angle, aa / angle).toRotationMatrix());
}

Vec3 matrix_to_axis_angle(const Rotation& r) {
  const Eigen::AngleAxisd aa(r.matrix());
  return aa.axis() * aa.angle();
}

double geodesic_angle_deg(const Rotation& a, const Rotation& b) {
  // atan2 of (sin, cos) stays accurate near 0 and 180 degrees where a plain
  // arccos of the trace loses half its digits.
  const Mat3 rel = a.matrix().transpose() * b.matrix();
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 skew(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1));
  const double s = 0.5 * skew.norm();
  return std::atan2(s, c) * (180.0 / M_PI);
}

// ---- ray casting -----------------------------------------------------------

std::optional<RayHit> ray_triangle_intersect(const Vec3& origin, const Vec3& dir,
                                             const Triangle& tri) {
  const Vec3& n = tri.normal();
  const double denom = n.dot(dir);
  if (std::abs(denom) < kParallelTolerance) return std::nullopt;
  const Vec3& q = tri.vertex(0);
  const double t = n.dot(q - origin) / denom;
  if (!(t > kMinHitDistance)) return std::nullopt;
  const Vec3 p = origin + t * dir;

  const Vec3 e1 = tri.vertex(1) - q;
  const Vec3 e2 = tri.vertex(2) - q;
  const Vec3 w = p - q;
  const double d00 = e1.dot(e1);
  const double d01 = e1.dot(e2);
  const double d11 = e2.dot(e2);
  const double d20 = w.dot(e1);
  const double d21 = w.dot(e2);
  const double det = d00 * d11 - d01 * d01;
  const double b1 = (d11 * d20 - d01 * d21) / det;
  const double b2 = (d00 * d21 - d01 * d20) / det;
  const double b0 = 1.0 - b1 - b2;
  if (b0 < 0.0 || b1 < 0.0 || b2 < 0.0 || b0 > 1.0 || b1 > 1.0 || b2 > 1.0) return std::nullopt;
  return RayHit{t, p};
}

namespace {

constexpr std::uint32_t kLeafSize = 4;

// Slab test against [lo, hi]; returns entry distance or +inf on a miss.
double ray_box(const Vec3& origin, const Vec3& inv_dir, const Vec3& dir, const Vec3& lo,
               const Vec3& hi, double max_t) {
  double t0 = 0.0;
  double t1 = max_t;
  for (int a = 0; a < 3; ++a) {
    if (dir[a] == 0.0) {
      if (origin[a] < lo[a] || origin[a] > hi[a]) return kInf;
      continue;
    }
    double near = (lo[a] - origin[a]) * inv_dir[a];
    double far = (hi[a] - origin[a]) * inv_dir[a];
    if (near > far) std::swap(near, far);
    t0 = std::max(t0, near);
    t1 = std::min(t1, far);
    if (t0 > t1) return kInf;
  }
  return t0;
}

}  // namespace

TriangleBvh::TriangleBvh(std::vector<Triangle> triangles) : triangles_(std::move(triangles)) {
  if (triangles_.empty()) return;
  order_.resize(triangles_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * triangles_.size() / kLeafSize + 2);
  build(0, static_cast<std::uint32_t>(triangles_.size()));
}

std::uint32_t TriangleBvh::build(std::uint32_t first, std::uint32_t count) {
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.emplace_back();
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);
  Vec3 clo = lo;
  Vec3 chi = hi;
  for (std::uint32_t i = first; i < first + count; ++i) {
    const Triangle& tri = triangles_[order_[i]];
    Vec3 c = Vec3::Zero();
    for (std::size_t k = 0; k < 3; ++k) {
      lo = lo.cwiseMin(tri.vertex(k));
      hi = hi.cwiseMax(tri.vertex(k));
      c += tri.vertex(k);
    }
    c /= 3.0;
    clo = clo.cwiseMin(c);
    chi = chi.cwiseMax(c);
  }
  // Pad so rounding in the slab test never rejects a boundary hit.
  const double pad = 1e-9 * std::max(1.0, (hi - lo).cwiseAbs().maxCoeff());
  nodes_[id].lo = lo.array() - pad;
  nodes_[id].hi = hi.array() + pad;

  if (count <= kLeafSize) {
    nodes_[id].first = first;
    nodes_[id].count = count;
    return id;
  }
  int axis = 0;
  (chi - clo).maxCoeff(&axis);
  const std::uint32_t half = count / 2;
  auto centroid_key = [&](std::uint32_t t) {
    const Triangle& tri = triangles_[t];
    return tri.vertex(0)[axis] + tri.vertex(1)[axis] + tri.vertex(2)[axis];
  };
  std::nth_element(order_.begin() + first, order_.begin() + first + half,
                   order_.begin() + first + count, [&](std::uint32_t a, std::uint32_t b) {
                     const double ka = centroid_key(a);
                     const double kb = centroid_key(b);
                     return ka < kb || (ka == kb && a < b);
                   });
  const std::uint32_t left = build(first, half);
  const std::uint32_t right = build(first + half, count - half);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::optional<TriangleBvh::Hit> TriangleBvh::first_hit(const Vec3& origin, const Vec3& dir,
                                                      double max_t) const {
  if (nodes_.empty()) return std::nullopt;
  const Vec3 inv_dir = dir.cwiseInverse();
  std::optional<Hit> best;
  double best_t = max_t;

  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const Node& node = nodes_[stack[--top]];
    if (ray_box(origin, inv_dir, dir, node.lo, node.hi, best_t) == kInf) continue;
    if (node.count > 0) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = order_[i];
        const auto hit = ray_triangle_intersect(origin, dir, triangles_[t]);
        if (!hit || hit->t > best_t) continue;
        if (!best || hit->t < best->t || (hit->t == best->t && t < best->triangle)) {
          best = Hit{hit->t, hit->point, t};
          best_t = hit->t;
        }
      }
      continue;
    }
    // Visit the nearer child first.
    const Node& l = nodes_[node.left];
    const Node& r = nodes_[node.right];
    const double tl = ray_box(origin, inv_dir, dir, l.lo, l.hi, best_t);
    const double tr = ray_box(origin, inv_dir, dir, r.lo, r.hi, best_t);
    if (tl <= tr) {
      if (tr != kInf) stack[top++] = node.right;
      if (tl != kInf) stack[top++] = node.left;
    } else {
      if (tl != kInf) stack[top++] = node.left;
      if (tr != kInf) stack[top++] = node.right;
    }
  }
  return best;
}

// ---- sampling and neighbors ------------------------------------------------

std::vector<std::size_t> farthest_point_sample(const PointCloud& pc, std::size_t n,
                                               std::uint64_t seed) {
  if (pc.empty()) throw EmptyInput("farthest_point_sample: empty cloud");
  if (n == 0) throw InvalidArgument("farthest_point_sample: n must be >= 1");
  const std::size_t total = pc.size();
  const std::size_t target = std::min(n, total);

  std::vector<std::size_t> picked;
  picked.reserve(target);
  std::vector<double> min_d2(total, kInf);
  std::vector<bool> taken(total, false);

  Rng rng(seed);
  std::size_t current = rng.index(total);
  for (;;) {
    picked.push_back(current);
    taken[current] = true;
    if (picked.size() == target) break;
    const Vec3& c = pc.points[current];
    std::size_t best = total;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < total; ++i) {
      if (taken[i]) continue;
      min_d2[i] = std::min(min_d2[i], (pc.points[i] - c).squaredNorm());
      if (min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    current = best;
  }
  return picked;
}

KdTree::KdTree(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  if (points_.empty()) return;
  std::vector<std::uint32_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), 0u);
  nodes_.reserve(points_.size());
  root_ = build(idx);
}

std::uint32_t KdTree::build(std::span<std::uint32_t> idx) {
  if (idx.empty()) return kNone;
  Vec3 lo = Vec3::Constant(kInf);
  Vec3 hi = Vec3::Constant(-kInf);
  for (std::uint32_t i : idx) {
    lo = lo.cwiseMin(points_[i]);
    hi = hi.cwiseMax(points_[i]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const std::size_t mid = idx.size() / 2;
  std::nth_element(idx.begin(), idx.begin() + mid, idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
  });
  const auto id = static_cast<std::uint32_t>(nodes_.size());
  nodes_.push_back(Node{idx[mid], kNone, kNone, axis});
  const std::uint32_t left = build(idx.subspan(0, mid));
  const std::uint32_t right = build(idx.subspan(mid + 1));
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdTree::search_k(std::uint32_t node, const Vec3& q, std::size_t k,
                      std::vector<std::pair<double, std::uint32_t>>& heap) const {
  if (node == kNone) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  const std::pair<double, std::uint32_t> cand{(p - q).squaredNorm(), n.point};
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end());
  }
  const double diff = q[n.axis] - p[n.axis];
  const std::uint32_t near = diff < 0.0 ? n.left : n.right;
  const std::uint32_t far = diff < 0.0 ? n.right : n.left;
  search_k(near, q, k, heap);
  // Equal plane distance may still hide a lower-index tie, so prune strictly.
  if (heap.size() < k || diff * diff <= heap.front().first) search_k(far, q, k, heap);
}

void KdTree::search_radius(std::uint32_t node, const Vec3& q, double r2,
                           std::vector<std::size_t>& out) const {
  if (node == kNone) return;
  const Node& n = nodes_[node];
  const Vec3& p = points_[n.point];
  if ((p - q).squaredNorm() <= r2) out.push_back(n.point);
  const double diff = q[n.axis] - p[n.axis];
  if (diff <= 0.0 || diff * diff <= r2) search_radius(n.left, q, r2, out);
  if (diff >= 0.0 || diff * diff <= r2) search_radius(n.right, q, r2, out);
}

std::vector<std::size_t> KdTree::nearest(const Vec3& q, std::size_t k) const {
  k = std::min(k, points_.size());
  std::vector<std::pair<double, std::uint32_t>> heap;
  heap.reserve(k + 1);
  if (k > 0) search_k(root_, q, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  std::vector<std::size_t> out;
  out.reserve(heap.size());
  for (const auto& [d2, i] : heap) out.push_back(i);
  return out;
}

std::pair<std::size_t, double> KdTree::nearest_one(const Vec3& q) const {
  std::vector<std::pair<double, std::uint32_t>> heap;
  heap.reserve(2);
  search_k(root_, q, 1, heap);
  return {heap.front().second, heap.front().first};
}

std::vector<std::size_t> KdTree::within(const Vec3& q, double radius) const {
  std::vector<std::size_t> out;
  search_radius(root_, q, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::size_t>> knn(const PointCloud& query, const PointCloud& reference,
                                          std::size_t k) {
  if (reference.empty()) throw EmptyInput("knn: empty reference cloud");
  if (k > reference.size()) throw InvalidArgument("knn: k exceeds reference size");
  const KdTree tree(reference.points);
  std::vector<std::vector<std::size_t>> out(query.size());
  parallel_for(query.size(), [&](std::size_t i) { out[i] = tree.nearest(query.points[i], k); });
  return out;
}

double unidirectional_chamfer(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.empty() || dst.empty()) throw EmptyInput("unidirectional_chamfer: empty cloud");
  const KdTree tree(dst);
  std::vector<double> d2(src.size());
  parallel_for(src.size(), [&](std::size_t i) { d2[i] = tree.nearest_one(src[i]).second; });
  double sum = 0.0;
  for (double v : d2) sum += v;
  return sum / static_cast<double>(src.size());
}

double unidirectional_chamfer(const PointCloud& src, const PointCloud& dst) {
  return unidirectional_chamfer(std::span<const Vec3>(src.points), std::span<const Vec3>(dst.points));
}

}  // namespace hpskit
