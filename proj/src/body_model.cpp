#include "hpskit/body_model.hpp"

#include "binary_io.hpp"
#include "hpskit/errors.hpp"
#include "hpskit/log.hpp"
#include "hpskit/parallel.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string_view>

namespace hpskit {

// ---- parameter types -------------------------------------------------------

PoseParams PoseParams::identity(std::size_t joints) {
  return PoseParams{std::vector<Rotation>(joints)};
}

PoseParams PoseParams::from_axis_angle(std::span<const Vec3> aa) {
  PoseParams p;
  p.rotations.reserve(aa.size());
  for (const auto& v : aa) {
    if (!v.allFinite()) throw NonFiniteValue("pose: non-finite axis-angle entry");
    p.rotations.push_back(axis_angle_to_matrix(v));
  }
  return p;
}

PoseParams PoseParams::from_rot6d(std::span<const Rot6d> r6) {
  PoseParams p;
  p.rotations.reserve(r6.size());
  for (const auto& r : r6) p.rotations.push_back(rot6d_to_matrix(r));
  return p;
}

std::vector<Vec3> PoseParams::to_axis_angle() const {
  std::vector<Vec3> out;
  out.reserve(rotations.size());
  for (const auto& r : rotations) out.push_back(matrix_to_axis_angle(r));
  return out;
}

void ShapeParams::validate() const {
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (!std::isfinite(beta[i])) throw NonFiniteValue("shape: non-finite beta[" + std::to_string(i) + "]");
    if (std::abs(beta[i]) > 10.0) {
      warn("shape: |beta[" + std::to_string(i) + "]| > 10 is far outside the usual range");
    }
  }
}

// ---- model -----------------------------------------------------------------

BodyModel::BodyModel(Data data) : d_(std::move(data)) {
  const std::size_t nj = d_.parents.size();
  const std::size_t nv = d_.template_vertices.size();
  if (nj == 0) throw InvalidArgument("body model: no joints");
  if (d_.parents[0] >= 0) throw InvalidArgument("body model: joint 0 must be the root");
  d_.parents[0] = -1;
  for (std::size_t j = 1; j < nj; ++j) {
    if (d_.parents[j] < 0 || d_.parents[j] >= static_cast<std::int64_t>(j)) {
      throw InvalidArgument("body model: parent of joint " + std::to_string(j) +
                            " must be in [0, " + std::to_string(j) + ")");
    }
  }
  for (const auto& v : d_.template_vertices) {
    if (!v.allFinite()) throw NonFiniteValue("body model: non-finite template vertex");
  }
  if (d_.joint_regressor.rows() != static_cast<Eigen::Index>(nj) ||
      d_.joint_regressor.cols() != static_cast<Eigen::Index>(nv)) {
    throw InvalidArgument("body model: joint_regressor must be N_J x N_V");
  }
  if (d_.skin_weights.rows() != static_cast<Eigen::Index>(nv) ||
      d_.skin_weights.cols() != static_cast<Eigen::Index>(nj)) {
    throw InvalidArgument("body model: skin_weights must be N_V x N_J");
  }
  if (d_.shape_dirs.size() == 0) d_.shape_dirs = Eigen::MatrixXd::Zero(3 * nv, kShapeCoefficients);
  if (d_.shape_dirs.rows() != static_cast<Eigen::Index>(3 * nv) ||
      d_.shape_dirs.cols() != static_cast<Eigen::Index>(kShapeCoefficients)) {
    throw InvalidArgument("body model: shape_dirs must be (3 N_V) x 10");
  }
  if (!d_.joint_regressor.allFinite() || !d_.skin_weights.allFinite() || !d_.shape_dirs.allFinite()) {
    throw NonFiniteValue("body model: non-finite array entry");
  }
  for (std::size_t v = 0; v < nv; ++v) {
    const auto row = d_.skin_weights.row(static_cast<Eigen::Index>(v));
    if (row.minCoeff() < 0.0) {
      throw InvalidArgument("body model: negative skin weight at vertex " + std::to_string(v));
    }
    if (std::abs(row.sum() - 1.0) > 1e-5) {
      throw InvalidArgument("body model: skin weights of vertex " + std::to_string(v) + " do not sum to 1");
    }
  }
  for (std::size_t j = 0; j < nj; ++j) {
    if (std::abs(d_.joint_regressor.row(static_cast<Eigen::Index>(j)).sum() - 1.0) > 1e-5) {
      throw InvalidArgument("body model: regressor row of joint " + std::to_string(j) + " does not sum to 1");
    }
  }
  for (const auto& f : d_.faces) {
    for (auto i : f) {
      if (i >= nv) throw InvalidArgument("body model: face index out of range");
    }
  }
}

namespace {

struct ChainTransforms {
  std::vector<Mat3> rot;
  std::vector<Vec3> trans;
};

ChainTransforms chain(const BodyModel& model, const PoseParams& pose, std::span<const Vec3> rest) {
  const auto& parents = model.data().parents;
  ChainTransforms g;
  g.rot.resize(parents.size());
  g.trans.resize(parents.size());
  g.rot[0] = pose.rotations[0].matrix();
  g.trans[0] = rest[0];
  for (std::size_t j = 1; j < parents.size(); ++j) {
    const auto p = static_cast<std::size_t>(parents[j]);
    g.rot[j] = g.rot[p] * pose.rotations[j].matrix();
    g.trans[j] = g.rot[p] * (rest[j] - rest[p]) + g.trans[p];
  }
  return g;
}

void check_pose(const BodyModel& model, const PoseParams& pose) {
  if (pose.size() != model.joint_count()) {
    throw InvalidArgument("pose has " + std::to_string(pose.size()) + " joints, model has " +
                          std::to_string(model.joint_count()));
  }
}

}  // namespace

BodyOutput forward(const BodyModel& model, const PoseParams& pose, const ShapeParams& shape,
                   const Translation& tr) {
  check_pose(model, pose);
  const auto& d = model.data();
  const std::size_t nv = model.vertex_count();
  const std::size_t nj = model.joint_count();

  Eigen::Map<const Eigen::Matrix<double, kShapeCoefficients, 1>> beta(shape.beta.data());
  const Eigen::VectorXd offsets = d.shape_dirs * beta;
  std::vector<Vec3> shaped(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    shaped[v] = d.template_vertices[v] + offsets.segment<3>(static_cast<Eigen::Index>(3 * v));
  }

  std::vector<Vec3> rest(nj, Vec3::Zero());
  for (std::size_t j = 0; j < nj; ++j) {
    for (std::size_t v = 0; v < nv; ++v) {
      const double w = d.joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v));
      if (w != 0.0) rest[j] += w * shaped[v];
    }
  }

  const ChainTransforms g = chain(model, pose, rest);
  // Skinning transform of joint j maps rest-space points: x -> R_j (x - J_j) + t_j.
  std::vector<Vec3> skin_offset(nj);
  for (std::size_t j = 0; j < nj; ++j) skin_offset[j] = g.trans[j] - g.rot[j] * rest[j];

  BodyOutput out;
  out.joints.resize(nj);
  for (std::size_t j = 0; j < nj; ++j) out.joints[j] = g.trans[j] + tr.value;
  out.vertices.resize(nv);
  parallel_for(nv, [&](std::size_t v) {
    Vec3 acc = Vec3::Zero();
    for (std::size_t j = 0; j < nj; ++j) {
      const double w = d.skin_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j));
      if (w != 0.0) acc += w * (g.rot[j] * shaped[v] + skin_offset[j]);
    }
    out.vertices[v] = acc + tr.value;
  });
  return out;
}

std::vector<Rotation> global_joint_rotations(const BodyModel& model, const PoseParams& pose) {
  check_pose(model, pose);
  const auto& parents = model.data().parents;
  std::vector<Rotation> out(parents.size());
  out[0] = pose.rotations[0];
  for (std::size_t j = 1; j < parents.size(); ++j) {
    out[j] = out[static_cast<std::size_t>(parents[j])] * pose.rotations[j];
  }
  return out;
}

std::vector<Vec3> root_relative_joints(std::span<const Vec3> joints) {
  if (joints.empty()) throw InvalidArgument("root_relative_joints: no joints");
  std::vector<Vec3> out(joints.begin(), joints.end());
  const Vec3 root = joints[0];
  for (auto& j : out) j -= root;
  return out;
}

// ---- binary container ------------------------------------------------------
//
// magic "HPSKMDL\0", u32 version, u32 array count, then per array:
//   u32 name length, name bytes, u8 dtype (1 = f64, 2 = i64), u8 ndim,
//   u64 dims[ndim], row-major little-endian payload.

namespace {

constexpr char kMagic[8] = {'H', 'P', 'S', 'K', 'M', 'D', 'L', '\0'};
constexpr std::uint32_t kModelVersion = 1;
constexpr std::uint8_t kF64 = 1;
constexpr std::uint8_t kI64 = 2;

struct Array {
  std::uint8_t dtype = kF64;
  std::vector<std::uint64_t> dims;
  std::vector<double> f64;
  std::vector<std::int64_t> i64;

  std::uint64_t count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
};

void write_array(std::ostream& out, const std::string& name, const Array& a) {
  detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
  out.write(name.data(), static_cast<std::streamsize>(name.size()));
  detail::write_le<std::uint8_t>(out, a.dtype);
  detail::write_le<std::uint8_t>(out, static_cast<std::uint8_t>(a.dims.size()));
  for (auto d : a.dims) detail::write_le<std::uint64_t>(out, d);
  if (a.dtype == kF64) {
    for (double v : a.f64) detail::write_le<double>(out, v);
  } else {
    for (std::int64_t v : a.i64) detail::write_le<std::int64_t>(out, v);
  }
}

std::map<std::string, Array> read_arrays(std::istream& in, const std::string& file) {
  auto fail = [&](const std::string& what) -> void { throw ValidationError(file + ": " + what); };
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kMagic, 8) != 0) fail("not a model container");
  std::uint32_t version = 0;
  std::uint32_t count = 0;
  if (!detail::read_le(in, version) || !detail::read_le(in, count)) fail("truncated header");
  if (version != kModelVersion) fail("unsupported model version " + std::to_string(version));
  std::map<std::string, Array> arrays;
  for (std::uint32_t k = 0; k < count; ++k) {
    std::uint32_t len = 0;
    if (!detail::read_le(in, len) || len > 4096) fail("bad array name");
    std::string name(len, '\0');
    in.read(name.data(), len);
    Array a;
    std::uint8_t ndim = 0;
    if (in.gcount() != len || !detail::read_le(in, a.dtype) || !detail::read_le(in, ndim)) {
      fail("truncated array header");
    }
    if (a.dtype != kF64 && a.dtype != kI64) fail("array '" + name + "': unknown dtype");
    a.dims.resize(ndim);
    for (auto& d : a.dims) {
      if (!detail::read_le(in, d)) fail("array '" + name + "': truncated dims");
    }
    const std::uint64_t n = a.count();
    if (n > (1ull << 32)) fail("array '" + name + "': implausible size");
    if (a.dtype == kF64) {
      a.f64.resize(n);
      for (auto& v : a.f64) {
        if (!detail::read_le(in, v)) fail("array '" + name + "': truncated payload");
      }
    } else {
      a.i64.resize(n);
      for (auto& v : a.i64) {
        if (!detail::read_le(in, v)) fail("array '" + name + "': truncated payload");
      }
    }
    arrays.emplace(std::move(name), std::move(a));
  }
  return arrays;
}

const Array& require(const std::map<std::string, Array>& arrays, const std::string& name,
                     std::uint8_t dtype, std::size_t ndim, const std::string& file) {
  const auto it = arrays.find(name);
  if (it == arrays.end()) throw ValidationError(file + ": missing array '" + name + "'");
  if (it->second.dtype != dtype || it->second.dims.size() != ndim) {
    throw ValidationError(file + ": array '" + name + "' has the wrong dtype or rank");
  }
  return it->second;
}

BodyModel model_from_arrays(const std::map<std::string, Array>& arrays, const std::string& file) {
  BodyModel::Data d;
  const Array& tv = require(arrays, "template_vertices", kF64, 2, file);
  const Array& kp = require(arrays, "kinematic_parents", kI64, 1, file);
  const Array& jr = require(arrays, "joint_regressor", kF64, 2, file);
  const Array& sw = require(arrays, "skin_weights", kF64, 2, file);
  const Array& sd = require(arrays, "shape_dirs", kF64, 3, file);
  if (tv.dims[1] != 3) throw ValidationError(file + ": template_vertices must be N_V x 3");
  const std::size_t nv = tv.dims[0];
  const std::size_t nj = kp.dims[0];
  d.template_vertices.resize(nv);
  for (std::size_t v = 0; v < nv; ++v) {
    d.template_vertices[v] = Vec3(tv.f64[3 * v], tv.f64[3 * v + 1], tv.f64[3 * v + 2]);
  }
  d.parents = kp.i64;
  if (jr.dims[0] != nj || jr.dims[1] != nv) throw ValidationError(file + ": joint_regressor must be N_J x N_V");
  if (sw.dims[0] != nv || sw.dims[1] != nj) throw ValidationError(file + ": skin_weights must be N_V x N_J");
  if (sd.dims[0] != nv || sd.dims[1] != 3) throw ValidationError(file + ": shape_dirs must be N_V x 3 x N_beta");
  d.joint_regressor = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      jr.f64.data(), static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(nv));
  d.skin_weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      sw.f64.data(), static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nj));
  const std::size_t nb = sd.dims[2];
  if (nb > kShapeCoefficients) {
    warn(file + ": shape_dirs has " + std::to_string(nb) + " components, using the first 10");
  }
  d.shape_dirs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * nv), kShapeCoefficients);
  for (std::size_t r = 0; r < 3 * nv; ++r) {
    for (std::size_t b = 0; b < std::min(nb, kShapeCoefficients); ++b) {
      d.shape_dirs(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = sd.f64[r * nb + b];
    }
  }
  if (const auto it = arrays.find("faces"); it != arrays.end()) {
    const Array& f = it->second;
    if (f.dtype != kI64 || f.dims.size() != 2 || f.dims[1] != 3) {
      throw ValidationError(file + ": faces must be N_F x 3 int64");
    }
    d.faces.resize(f.dims[0]);
    for (std::size_t i = 0; i < d.faces.size(); ++i) {
      for (std::size_t k = 0; k < 3; ++k) {
        const std::int64_t idx = f.i64[3 * i + k];
        if (idx < 0 || static_cast<std::uint64_t>(idx) >= nv) {
          throw ValidationError(file + ": face " + std::to_string(i) + " index out of range");
        }
        d.faces[i][k] = static_cast<std::uint32_t>(idx);
      }
    }
  }
  for (const auto& [name, a] : arrays) {
    if (name == "posedirs") {
      warn(file + ": pose-corrective basis 'posedirs' present and ignored");
    } else if (name != "template_vertices" && name != "kinematic_parents" && name != "joint_regressor" &&
               name != "skin_weights" && name != "shape_dirs" && name != "faces") {
      warn(file + ": unknown array '" + name + "' ignored");
    }
  }
  try {
    return BodyModel(std::move(d));
  } catch (const InvalidArgument& e) {
    throw ValidationError(file + ": " + e.what());
  }
}

}  // namespace

void save_body_model(const BodyModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write model file " + path.string());
  const auto& d = model.data();
  const std::size_t nv = model.vertex_count();
  const std::size_t nj = model.joint_count();

  out.write(kMagic, 8);
  detail::write_le<std::uint32_t>(out, kModelVersion);
  detail::write_le<std::uint32_t>(out, d.faces.empty() ? 5u : 6u);

  Array tv{kF64, {nv, 3}, {}, {}};
  for (const auto& v : d.template_vertices) tv.f64.insert(tv.f64.end(), {v.x(), v.y(), v.z()});
  write_array(out, "template_vertices", tv);

  Array kp{kI64, {nj}, {}, d.parents};
  write_array(out, "kinematic_parents", kp);

  auto dense = [](const Eigen::MatrixXd& m, std::vector<std::uint64_t> dims) {
    Array a{kF64, std::move(dims), {}, {}};
    a.f64.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) a.f64.push_back(m(r, c));
    }
    return a;
  };
  write_array(out, "joint_regressor", dense(d.joint_regressor, {nj, nv}));
  write_array(out, "skin_weights", dense(d.skin_weights, {nv, nj}));
  write_array(out, "shape_dirs", dense(d.shape_dirs, {nv, 3, kShapeCoefficients}));
  if (!d.faces.empty()) {
    Array f{kI64, {d.faces.size(), 3}, {}, {}};
    for (const auto& face : d.faces) f.i64.insert(f.i64.end(), {face[0], face[1], face[2]});
    write_array(out, "faces", f);
  }
  if (!out) throw IoError("short write to model file " + path.string());
}

// ---- toy text format -------------------------------------------------------

BodyModel parse_toy_model(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  std::size_t nj = 0;
  std::size_t nv = 0;
  std::vector<bool> parent_set;
  BodyModel::Data d;

  auto need_sizes = [&](std::string_view what) {
    if (nj == 0 || nv == 0) {
      throw ParseError(source, lineno, std::string(what) + " before 'joints' and 'vertices'");
    }
    if (d.joint_regressor.size() == 0) {
      d.joint_regressor = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(nv));
      d.skin_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nj));
      d.shape_dirs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * nv), kShapeCoefficients);
    }
  };
  auto index = [&](std::istringstream& ls, std::size_t bound, std::string_view what) {
    long long i = -1;
    if (!(ls >> i) || i < 0 || static_cast<std::size_t>(i) >= bound) {
      throw ParseError(source, lineno, "bad " + std::string(what) + " index");
    }
    return static_cast<std::size_t>(i);
  };
  auto number = [&](std::istringstream& ls) {
    double v = 0.0;
    if (!(ls >> v)) throw ParseError(source, lineno, "expected a number");
    return v;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (!header) {
      int version = 0;
      if (key != "hpskit-toy-model" || !(ls >> version) || version != 1) {
        throw ParseError(source, lineno, "expected header 'hpskit-toy-model 1'");
      }
      header = true;
      continue;
    }
    if (key == "joints") {
      nj = index(ls, 1u << 20, "joint count");
      d.parents.assign(nj, -1);
      parent_set.assign(nj, false);
    } else if (key == "vertices") {
      nv = index(ls, 1u << 24, "vertex count");
    } else if (key == "parent") {
      if (nj == 0) throw ParseError(source, lineno, "'parent' before 'joints'");
      const std::size_t j = index(ls, nj, "joint");
      long long p = 0;
      if (!(ls >> p)) throw ParseError(source, lineno, "expected parent index");
      d.parents[j] = p;
      parent_set[j] = true;
    } else if (key == "v") {
      if (d.template_vertices.size() >= nv) throw ParseError(source, lineno, "more 'v' lines than vertices");
      const double x = number(ls);
      const double y = number(ls);
      const double z = number(ls);
      d.template_vertices.emplace_back(x, y, z);
    } else if (key == "weight") {
      need_sizes(key);
      const std::size_t v = index(ls, nv, "vertex");
      const std::size_t j = index(ls, nj, "joint");
      d.skin_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) = number(ls);
    } else if (key == "regress") {
      need_sizes(key);
      const std::size_t j = index(ls, nj, "joint");
      const std::size_t v = index(ls, nv, "vertex");
      d.joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) = number(ls);
    } else if (key == "shape") {
      need_sizes(key);
      const std::size_t v = index(ls, nv, "vertex");
      const std::size_t b = index(ls, kShapeCoefficients, "shape component");
      for (Eigen::Index c = 0; c < 3; ++c) {
        d.shape_dirs(static_cast<Eigen::Index>(3 * v) + c, static_cast<Eigen::Index>(b)) = number(ls);
      }
    } else if (key == "face") {
      if (nv == 0) throw ParseError(source, lineno, "'face' before 'vertices'");
      Face f{};
      for (auto& i : f) i = static_cast<std::uint32_t>(index(ls, nv, "face vertex"));
      d.faces.push_back(f);
    } else {
      throw ParseError(source, lineno, "unknown record '" + key + "'");
    }
    std::string extra;
    if (ls >> extra) throw ParseError(source, lineno, "trailing token '" + extra + "'");
  }
  if (!header) throw ParseError(source, lineno, "empty toy model");
  need_sizes("end of file");
  if (d.template_vertices.size() != nv) {
    throw ParseError(source, lineno, "expected " + std::to_string(nv) + " 'v' lines");
  }
  for (std::size_t j = 0; j < nj; ++j) {
    if (!parent_set[j]) throw ParseError(source, lineno, "joint " + std::to_string(j) + " has no parent record");
  }
  try {
    return BodyModel(std::move(d));
  } catch (const InvalidArgument& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

BodyModel load_body_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open model file " + path.string());
  char head[8] = {};
  in.read(head, 8);
  const bool binary = in.gcount() == 8 && std::memcmp(head, kMagic, 8) == 0;
  in.clear();
  in.seekg(0);
  if (binary) return model_from_arrays(read_arrays(in, path.string()), path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_toy_model(text.str(), path.string());
}

// ---- demo figure -----------------------------------------------------------

namespace {

struct DemoBone {
  std::size_t child;
  double radius;
};

}  // namespace

BodyModel make_demo_body_model() {
  // SMPL-style 24-joint tree.
  const std::vector<std::int64_t> parents = {-1, 0, 0, 0, 1, 2, 3, 4, 5, 6, 7, 8,
                                             9, 9, 9, 12, 13, 14, 16, 17, 18, 19, 20, 21};
  const std::vector<Vec3> joints = {
      {0.00, 0.00, 0.00},   {0.09, 0.00, -0.08},  {-0.09, 0.00, -0.08}, {0.00, 0.00, 0.12},
      {0.10, 0.00, -0.48},  {-0.10, 0.00, -0.48}, {0.00, 0.00, 0.25},   {0.10, -0.02, -0.88},
      {-0.10, -0.02, -0.88}, {0.00, 0.00, 0.32},  {0.10, 0.12, -0.93},  {-0.10, 0.12, -0.93},
      {0.00, 0.00, 0.52},   {0.07, 0.00, 0.45},   {-0.07, 0.00, 0.45},  {0.00, 0.02, 0.64},
      {0.18, 0.00, 0.45},   {-0.18, 0.00, 0.45},  {0.45, 0.00, 0.45},   {-0.45, 0.00, 0.45},
      {0.70, 0.00, 0.45},   {-0.70, 0.00, 0.45},  {0.78, 0.00, 0.45},   {-0.78, 0.00, 0.45}};
  const std::vector<double> radius = {0.0,  0.08, 0.08, 0.12, 0.07, 0.07, 0.12, 0.05,
                                      0.05, 0.13, 0.04, 0.04, 0.05, 0.05, 0.05, 0.05,
                                      0.05, 0.05, 0.045, 0.045, 0.04, 0.04, 0.035, 0.035};
  constexpr std::size_t kSides = 8;
  constexpr std::size_t kStations = 3;
  const std::size_t nj = parents.size();

  std::vector<Vec3> verts;
  std::vector<std::size_t> owner;   // skinning joint per vertex
  std::vector<Vec3> radial;         // outward unit direction (girth blendshape)
  std::vector<Face> faces;
  // Vertices whose mean is each joint (regressor support).
  std::vector<std::vector<std::size_t>> support(nj);

  auto add = [&](const Vec3& p, std::size_t j, const Vec3& out) {
    verts.push_back(p);
    owner.push_back(j);
    radial.push_back(out);
    return static_cast<std::uint32_t>(verts.size() - 1);
  };

  for (std::size_t c = 1; c < nj; ++c) {
    const auto p = static_cast<std::size_t>(parents[c]);
    const Vec3 a = joints[p];
    const Vec3 b = joints[c];
    const Vec3 axis = (b - a).normalized();
    const Vec3 ref = std::abs(axis.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
    const Vec3 u = axis.cross(ref).normalized();
    const Vec3 w = axis.cross(u);
    const double r = radius[c];
    std::vector<std::uint32_t> rings;
    for (std::size_t s = 0; s < kStations; ++s) {
      const Vec3 center = a + (b - a) * (static_cast<double>(s) / (kStations - 1));
      for (std::size_t k = 0; k < kSides; ++k) {
        const double ang = 2.0 * M_PI * static_cast<double>(k) / kSides;
        const Vec3 dir = std::cos(ang) * u + std::sin(ang) * w;
        const auto id = add(center + r * dir, p, dir);
        rings.push_back(id);
        if (s == 0) support[p].push_back(id);
        if (s == kStations - 1 && c != 15) support[c].push_back(id);
      }
    }
    for (std::size_t s = 0; s + 1 < kStations; ++s) {
      for (std::size_t k = 0; k < kSides; ++k) {
        const std::uint32_t i0 = rings[s * kSides + k];
        const std::uint32_t i1 = rings[s * kSides + (k + 1) % kSides];
        const std::uint32_t j0 = rings[(s + 1) * kSides + k];
        const std::uint32_t j1 = rings[(s + 1) * kSides + (k + 1) % kSides];
        faces.push_back({i0, i1, j1});
        faces.push_back({i0, j1, j0});
      }
    }
    const auto cap_a = add(a, p, -axis);
    const auto cap_b = add(b, p, axis);
    for (std::size_t k = 0; k < kSides; ++k) {
      faces.push_back({cap_a, rings[(k + 1) % kSides], rings[k]});
      const std::size_t last = (kStations - 1) * kSides;
      faces.push_back({cap_b, rings[last + k], rings[last + (k + 1) % kSides]});
    }
  }

  // Head: UV sphere centered on joint 15 so its vertex mean is the joint.
  {
    constexpr std::size_t kLat = 6;
    constexpr std::size_t kLon = 10;
    constexpr double kHeadRadius = 0.11;
    const Vec3 c = joints[15];
    const auto top = add(c + Vec3(0, 0, kHeadRadius), 15, Vec3::UnitZ());
    const auto bottom = add(c - Vec3(0, 0, kHeadRadius), 15, -Vec3::UnitZ());
    support[15].push_back(top);
    support[15].push_back(bottom);
    std::vector<std::uint32_t> grid;
    for (std::size_t i = 1; i < kLat; ++i) {
      const double phi = M_PI * static_cast<double>(i) / kLat;
      for (std::size_t k = 0; k < kLon; ++k) {
        const double th = 2.0 * M_PI * static_cast<double>(k) / kLon;
        const Vec3 dir(std::sin(phi) * std::cos(th), std::sin(phi) * std::sin(th), std::cos(phi));
        const auto id = add(c + kHeadRadius * dir, 15, dir);
        grid.push_back(id);
        support[15].push_back(id);
      }
    }
    for (std::size_t k = 0; k < kLon; ++k) {
      const std::size_t k1 = (k + 1) % kLon;
      faces.push_back({top, grid[k], grid[k1]});
      const std::size_t base = (kLat - 2) * kLon;
      faces.push_back({bottom, grid[base + k1], grid[base + k]});
    }
    for (std::size_t i = 0; i + 2 < kLat; ++i) {
      for (std::size_t k = 0; k < kLon; ++k) {
        const std::size_t k1 = (k + 1) % kLon;
        const auto a0 = grid[i * kLon + k];
        const auto a1 = grid[i * kLon + k1];
        const auto b0 = grid[(i + 1) * kLon + k];
        const auto b1 = grid[(i + 1) * kLon + k1];
        faces.push_back({a0, b0, b1});
        faces.push_back({a0, b1, a1});
      }
    }
  }

  const std::size_t nv = verts.size();
  BodyModel::Data d;
  d.template_vertices = verts;
  d.parents = parents;
  d.faces = std::move(faces);
  d.skin_weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nv), static_cast<Eigen::Index>(nj));
  for (std::size_t v = 0; v < nv; ++v) {
    d.skin_weights(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(owner[v])) = 1.0;
  }
  d.joint_regressor = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(nj), static_cast<Eigen::Index>(nv));
  for (std::size_t j = 0; j < nj; ++j) {
    const double w = 1.0 / static_cast<double>(support[j].size());
    for (std::size_t v : support[j]) {
      d.joint_regressor(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(v)) += w;
    }
  }
  d.shape_dirs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(3 * nv), kShapeCoefficients);
  for (std::size_t v = 0; v < nv; ++v) {
    const Vec3& p = verts[v];
    auto set = [&](std::size_t b, const Vec3& dv) {
      d.shape_dirs.block<3, 1>(static_cast<Eigen::Index>(3 * v), static_cast<Eigen::Index>(b)) = dv;
    };
    set(0, Vec3(0, 0, 0.06 * p.z()));                                       // stature
    set(1, 0.012 * radial[v]);                                              // girth
    set(2, Vec3(std::abs(p.x()) > 0.15 ? 0.04 * p.x() : 0.0, 0, 0));        // arm span
    set(3, Vec3(0, 0, p.z() < 0.0 ? 0.05 * p.z() : 0.0));                   // leg length
    set(4, Vec3(0.02 * p.x(), 0, 0));                                       // breadth
    set(5, Vec3(0, 0.015 * radial[v].y(), 0));                              // depth
    set(6, Vec3(0, 0, p.z() > 0.3 ? 0.03 * (p.z() - 0.3) : 0.0));           // torso
    set(7, Vec3(0.005 * std::sin(4.0 * p.z()), 0, 0));
    set(8, Vec3(0, 0.005 * std::cos(3.0 * p.x()), 0));
    set(9, Vec3(0, 0, 0.004 * std::sin(5.0 * p.x())));
  }
  return BodyModel(std::move(d));
}

}  // namespace hpskit
