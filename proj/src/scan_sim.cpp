#include "hpskit/scan_sim.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/random.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>

namespace hpskit {

namespace {
constexpr double kDeg = M_PI / 180.0;
}

void SensorSpec::validate() const {
  if (h_resolution < 1 || v_lines < 1) throw ConfigError("sensor: resolutions must be >= 1");
  if (!(v_fov_deg > 0.0 && v_fov_deg <= 360.0)) throw ConfigError("sensor: v_fov_deg must be in (0, 360]");
  if (!(h_fov_deg > 0.0 && h_fov_deg <= 360.0)) throw ConfigError("sensor: h_fov_deg must be in (0, 360]");
  if (!(max_range > 0.0) || !std::isfinite(max_range)) throw ConfigError("sensor: max_range must be > 0");
  if (!center.allFinite()) throw ConfigError("sensor: center must be finite");
  if (range_noise_m != 0.0) throw ConfigError("sensor: range_noise_m is reserved and must be 0");
}

SensorSpec parse_sensor_spec(const std::string& text, const std::string& source) {
  SensorSpec spec;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    std::istringstream probe(line);
    std::string word;
    if (!(probe >> word)) continue;
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::istringstream ks(line.substr(0, eq));
    std::string key;
    ks >> key;
    std::istringstream vs(line.substr(eq + 1));
    auto fail = [&](const std::string& what) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": " + what);
    };
    auto read_size = [&](std::size_t& out) {
      long long v = 0;
      if (!(vs >> v) || v < 1) fail("'" + key + "' must be a positive integer");
      out = static_cast<std::size_t>(v);
    };
    auto read_double = [&](double& out) {
      if (!(vs >> out)) fail("'" + key + "' must be a number");
    };
    if (key == "h_resolution") {
      read_size(spec.h_resolution);
    } else if (key == "v_lines") {
      read_size(spec.v_lines);
    } else if (key == "v_fov_deg") {
      read_double(spec.v_fov_deg);
    } else if (key == "h_fov_deg") {
      read_double(spec.h_fov_deg);
    } else if (key == "max_range") {
      read_double(spec.max_range);
    } else if (key == "range_noise_m") {
      read_double(spec.range_noise_m);
    } else if (key == "center") {
      read_double(spec.center.x());
      read_double(spec.center.y());
      read_double(spec.center.z());
    } else {
      fail("unknown key '" + key + "'");
    }
    std::string extra;
    if (vs >> extra) fail("trailing token '" + extra + "'");
  }
  try {
    spec.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return spec;
}

SensorSpec load_sensor_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open sensor spec " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_sensor_spec(text.str(), path.string());
}

std::string format_sensor_spec(const SensorSpec& spec) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "h_resolution = " << spec.h_resolution << '\n'
      << "v_lines = " << spec.v_lines << '\n'
      << "v_fov_deg = " << spec.v_fov_deg << '\n'
      << "h_fov_deg = " << spec.h_fov_deg << '\n'
      << "center = " << spec.center.x() << ' ' << spec.center.y() << ' ' << spec.center.z() << '\n'
      << "max_range = " << spec.max_range << '\n'
      << "range_noise_m = " << spec.range_noise_m << '\n';
  return out.str();
}

void TriangleMesh::validate() const {
  for (const auto& v : vertices) {
    if (!v.allFinite()) throw InvalidArgument("mesh '" + name + "': non-finite vertex");
  }
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (auto i : faces[f]) {
      if (i >= vertices.size()) {
        throw InvalidArgument("mesh '" + name + "': face " + std::to_string(f) + " index out of range");
      }
    }
  }
  (void)triangles();
}

std::vector<Triangle> TriangleMesh::triangles() const {
  std::vector<Triangle> out;
  out.reserve(faces.size());
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto& face = faces[f];
    try {
      out.emplace_back(vertices.at(face[0]), vertices.at(face[1]), vertices.at(face[2]));
    } catch (const InvalidArgument&) {
      throw InvalidArgument("mesh '" + name + "': face " + std::to_string(f) + " is degenerate");
    }
  }
  return out;
}

std::pair<double, double> beam_angles_deg(const SensorSpec& spec, std::size_t beam) {
  const std::size_t line = beam / spec.h_resolution;
  const std::size_t col = beam % spec.h_resolution;
  double phi = 0.0;
  if (spec.v_lines > 1) {
    phi = -spec.v_fov_deg / 2.0 + spec.v_fov_deg * static_cast<double>(line) / static_cast<double>(spec.v_lines - 1);
  }
  double theta = 0.0;
  if (spec.h_fov_deg >= 360.0) {
    theta = 360.0 * static_cast<double>(col) / static_cast<double>(spec.h_resolution);
  } else if (spec.h_resolution > 1) {
    theta = -spec.h_fov_deg / 2.0 +
            spec.h_fov_deg * static_cast<double>(col) / static_cast<double>(spec.h_resolution - 1);
  }
  return {theta, phi};
}

std::vector<Vec3> beam_directions(const SensorSpec& spec) {
  spec.validate();
  const std::size_t n = spec.h_resolution * spec.v_lines;
  std::vector<Vec3> dirs(n);
  for (std::size_t b = 0; b < n; ++b) {
    const auto [theta, phi] = beam_angles_deg(spec, b);
    const double cp = std::cos(phi * kDeg);
    dirs[b] = Vec3(cp * std::sin(theta * kDeg), cp * std::cos(theta * kDeg), std::sin(phi * kDeg));
  }
  return dirs;
}

LabeledScan scan_scene_labeled(const SensorSpec& spec, std::span<const TriangleMesh> meshes) {
  const std::vector<Vec3> dirs = beam_directions(spec);
  std::vector<Triangle> tris;
  std::vector<std::size_t> tri_mesh;
  for (std::size_t m = 0; m < meshes.size(); ++m) {
    auto t = meshes[m].triangles();
    tri_mesh.insert(tri_mesh.end(), t.size(), m);
    tris.insert(tris.end(), t.begin(), t.end());
  }
  LabeledScan out;
  if (tris.empty()) return out;
  const TriangleBvh bvh(std::move(tris));

  std::vector<std::optional<TriangleBvh::Hit>> hits(dirs.size());
  parallel_for(dirs.size(), [&](std::size_t b) { hits[b] = bvh.first_hit(spec.center, dirs[b], spec.max_range); });

  for (std::size_t b = 0; b < hits.size(); ++b) {
    if (!hits[b]) continue;
    out.cloud.points.push_back(hits[b]->point);
    out.cloud.beam_index.push_back(static_cast<std::int64_t>(b));
    out.mesh.push_back(tri_mesh[hits[b]->triangle]);
  }
  return out;
}

PointCloud scan_scene(const SensorSpec& spec, std::span<const TriangleMesh> meshes) {
  return scan_scene_labeled(spec, meshes).cloud;
}

PointCloud crop_occlusion(const PointCloud& pc, const Vec3& o, double r) {
  if (!(r >= 0.0)) throw InvalidArgument("crop_occlusion: r must be >= 0");
  std::vector<std::size_t> keep;
  keep.reserve(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) {
    if ((pc.points[i] - o).norm() > r) keep.push_back(i);
  }
  return pc.subset(keep);
}

PointCloud random_crop(const PointCloud& pc, std::pair<double, double> r_range, std::uint64_t seed) {
  if (pc.empty()) throw EmptyInput("random_crop: empty cloud");
  const auto [lo, hi] = r_range;
  if (!(lo >= 0.0 && lo <= hi)) throw InvalidArgument("random_crop: need 0 <= min <= max");
  Rng rng(seed);
  const Vec3 o = pc.points[rng.index(pc.size())];
  const double r = rng.uniform(lo, hi);
  return crop_occlusion(pc, o, r);
}

std::vector<PointCloud> simulate_sequence(const SensorSpec& spec,
                                          std::span<const std::vector<TriangleMesh>> frames,
                                          bool body_segmentation) {
  if (frames.empty()) throw EmptyInput("simulate_sequence: no frames");
  spec.validate();
  std::vector<PointCloud> out(frames.size());
  parallel_for(frames.size(), [&](std::size_t f) {
    LabeledScan scan = scan_scene_labeled(spec, frames[f]);
    if (!body_segmentation) {
      out[f] = std::move(scan.cloud);
      return;
    }
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < scan.mesh.size(); ++i) {
      if (frames[f][scan.mesh[i]].role == MeshRole::kBody) keep.push_back(i);
    }
    out[f] = scan.cloud.subset(keep);
  });
  return out;
}

}  // namespace hpskit
