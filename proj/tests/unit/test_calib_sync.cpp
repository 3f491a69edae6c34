#include "doctest.h"
#include "support/oracles.hpp"

#include "hpskit/calib_sync.hpp"
#include "hpskit/errors.hpp"

using namespace hpskit;

namespace {

Rotation rz_deg(double deg) { return Rotation::about_axis(Vec3::UnitZ(), deg * M_PI / 180.0); }

PointCloud transformed(const PointCloud& pc, const RigidTransform& t) {
  PointCloud out;
  for (const auto& p : pc.points) out.points.push_back(t.apply(p));
  return out;
}

// Anisotropic blob so the registration has a single basin.
PointCloud lumpy_cloud(Rng& rng, std::size_t n) {
  PointCloud pc;
  for (std::size_t i = 0; i < n; ++i) {
    pc.points.push_back(Vec3(rng.uniform(-0.8, 0.8), rng.uniform(-0.3, 0.3), rng.uniform(-0.1, 0.1)));
  }
  for (std::size_t i = 0; i < n / 4; ++i) pc.points.push_back(Vec3(0.6, 0.2, 0.3) + oracle::random_point(rng, -0.1, 0.1));
  return pc;
}

HeightTrace parabola(std::size_t n, double peak, double noise, Rng* rng) {
  HeightTrace t;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = static_cast<double>(i) - peak;
    double v = 1.0 - 0.001 * x * x;
    if (rng) v += noise * rng->normal();
    t.values.push_back(v);
    t.timestamps.push_back(0.1 * static_cast<double>(i));
  }
  return t;
}

}  // namespace

TEST_CASE("fit_rigid recovers a known transform and corrects reflections") {
  Rng rng(1);
  const PointCloud pc = oracle::random_cloud(rng, 20);
  const RigidTransform t{oracle::random_rotation(rng), Vec3(1, 2, 3)};
  const RigidTransform got = fit_rigid(pc.points, transformed(pc, t).points);
  CHECK((got.rotation.matrix() - t.rotation.matrix()).norm() < 1e-9);
  CHECK((got.translation - t.translation).norm() < 1e-9);

  // Mirror image: the best proper rotation is still a rotation.
  PointCloud mirror = pc;
  for (auto& p : mirror.points) p.x() = -p.x();
  const RigidTransform m = fit_rigid(pc.points, mirror.points);
  CHECK(m.rotation.matrix().determinant() == doctest::Approx(1.0));
}

TEST_CASE("icp_register examples") {
  Rng rng(2);
  const PointCloud src = lumpy_cloud(rng, 200);
  SUBCASE("identity") {
    const IcpResult r = icp_register(src, src);
    CHECK(r.residual < 1e-12);
    CHECK((r.transform.rotation.matrix() - Mat3::Identity()).norm() < 1e-9);
    CHECK(r.transform.translation.norm() < 1e-9);
  }
  SUBCASE("pure translation") {
    const RigidTransform t{Rotation::identity(), Vec3(0.5, 0, 0)};
    const IcpResult r = icp_register(src, transformed(src, t));
    CHECK((r.transform.translation - t.translation).norm() < 1e-6);
  }
  SUBCASE("rotation and translation") {
    const RigidTransform t{rz_deg(20), Vec3(0.1, 0.2, 0)};
    const IcpResult r = icp_register(src, transformed(src, t));
    CHECK((r.transform.translation - t.translation).norm() < 1e-4);
    CHECK(geodesic_angle_deg(r.transform.rotation, t.rotation) < 0.1);
    const Mat3& m = r.transform.rotation.matrix();
    CHECK((m.transpose() * m - Mat3::Identity()).norm() < 1e-9);
    CHECK(m.determinant() == doctest::Approx(1.0).epsilon(1e-9));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  }
  SUBCASE("explicit initial guess") {
    const RigidTransform t{rz_deg(90), Vec3(0.3, 0, 0)};
    IcpOptions o;
    o.init = RigidTransform{rz_deg(85), Vec3(0.25, 0, 0)};
    const IcpResult r = icp_register(src, transformed(src, t), o);
    CHECK(geodesic_angle_deg(r.transform.rotation, t.rotation) < 0.1);
  }
}

TEST_CASE("icp_register partial overlap") {
  Rng rng(3);
  const PointCloud full = lumpy_cloud(rng, 400);
  const RigidTransform t{rz_deg(10), Vec3(0.05, -0.05, 0.02)};
  // Source is a 40 % slice of the target cloud.
  PointCloud part;
  for (const auto& p : full.points)
    if (p.x() < -0.2) part.points.push_back(p);
  const PointCloud target = transformed(full, t);
  const IcpResult r = icp_register(part, target, IcpOptions{200, 1e-12, RigidTransform{}});
  CHECK((r.transform.translation - t.translation).norm() < 1e-4);
  CHECK(geodesic_angle_deg(r.transform.rotation, t.rotation) < 0.1);
}

TEST_CASE("icp_register rejects degenerate geometry") {
  PointCloud two;
  two.points = {{0, 0, 0}, {1, 0, 0}};
  CHECK_THROWS_AS(icp_register(two, two), DegenerateRegistration);
  PointCloud line;
  for (int i = 0; i < 10; ++i) line.points.push_back(Vec3(i, 2 * i, 0));
  CHECK_THROWS_AS(icp_register(line, line), DegenerateRegistration);
}

TEST_CASE("moving_average") {
  const std::vector<double> v = {1, 2, 3, 4, 5};
  CHECK(moving_average(v, 1) == v);
  const auto s = moving_average(v, 3);
  CHECK(s[0] == 1.5);
  CHECK(s[2] == 3.0);
  CHECK(s[4] == 4.5);
}

TEST_CASE("detect_jump_peak") {
  CHECK(detect_jump_peak(parabola(100, 40, 0, nullptr), 1) == 40);
  CHECK(detect_jump_peak(parabola(100, 40, 0, nullptr), 5) == 40);

  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    const std::size_t got = detect_jump_peak(parabola(100, 40, 0.005, &rng), 5);
    CHECK(got >= 39);
    CHECK(got <= 41);
  }

  HeightTrace twin;
  twin.values = {0, 1, 0, 0, 1, 0};
  CHECK(detect_jump_peak(twin, 1) == 1);

  HeightTrace flat;
  flat.values.assign(20, 1.7);
  CHECK_THROWS_AS(detect_jump_peak(flat, 3), NoPeak);
  CHECK_THROWS_AS(detect_jump_peak(twin, 6), InvalidArgument);
  HeightTrace bad = twin;
  bad.values[2] = std::nan("");
  CHECK_THROWS_AS(detect_jump_peak(bad, 1), NonFiniteValue);
  HeightTrace backwards = twin;
  backwards.timestamps = {0, 1, 2, 2, 3, 4};
  CHECK_THROWS_AS(detect_jump_peak(backwards, 1), ValidationError);
}

TEST_CASE("align_streams") {
  const HeightTrace base = parabola(120, 40, 0, nullptr);
  const std::vector<HeightTrace> same = {base, base};
  CHECK(align_streams(same, 5) == std::vector<long>{0, 0});

  const std::vector<HeightTrace> delayed = {base, parabola(120, 45, 0, nullptr)};
  CHECK(align_streams(delayed, 5) == std::vector<long>{0, -5});

  const std::vector<HeightTrace> three = {base, parabola(120, 43, 0, nullptr), parabola(120, 47, 0, nullptr)};
  CHECK(align_streams(three, 5) == std::vector<long>{0, -3, -7});

  // Shift equivariance in the delay of one stream.
  for (long d = 1; d < 10; ++d) {
    const std::vector<HeightTrace> s = {base, parabola(120, 43, 0, nullptr),
                                        parabola(120, 47.0 + static_cast<double>(d), 0, nullptr)};
    const auto o = align_streams(s, 5);
    CHECK(o[1] == -3);
    CHECK(o[2] == -7 - d);
  }

  CHECK_THROWS_AS(align_streams(std::vector<HeightTrace>{base}, 5), InvalidArgument);
  HeightTrace flat;
  flat.values.assign(50, 0.0);
  try {
    align_streams(std::vector<HeightTrace>{base, flat}, 5);
    FAIL("expected NoPeak");
  } catch (const NoPeak& e) {
    CHECK(std::string(e.what()).find("stream 1") != std::string::npos);
  }
}
