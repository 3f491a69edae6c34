#include "hpskit/body_model.hpp"
#include "hpskit/calib_sync.hpp"
#include "hpskit/cli.hpp"
#include "hpskit/dataset_io.hpp"
#include "hpskit/errors.hpp"
#include "hpskit/geometry.hpp"
#include "hpskit/metrics.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/preprocess.hpp"
#include "hpskit/scan_sim.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

namespace py = pybind11;
using namespace hpskit;

namespace {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Faces = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 3, Eigen::RowMajor>;

std::vector<Vec3> to_vec(const Points& p) {
  std::vector<Vec3> out(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) out[static_cast<std::size_t>(i)] = p.row(i).transpose();
  return out;
}

PointCloud to_cloud(const Points& p) {
  PointCloud pc;
  pc.points = to_vec(p);
  return pc;
}

Points to_points(const std::vector<Vec3>& v) {
  Points out(static_cast<Eigen::Index>(v.size()), 3);
  for (std::size_t i = 0; i < v.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = v[i].transpose();
  return out;
}

Rotation to_rotation(const Mat3& m) { return Rotation::from_matrix(m); }

PoseParams to_pose(const Points& aa) { return PoseParams::from_axis_angle(to_vec(aa)); }

ShapeParams to_shape(const std::vector<double>& beta) {
  if (beta.size() > kShapeCoefficients) throw InvalidArgument("shape: at most 10 coefficients");
  ShapeParams s;
  std::copy(beta.begin(), beta.end(), s.beta.begin());
  return s;
}

SmplSequence to_sequence(const std::vector<Points>& poses, const std::vector<double>& beta, const Points& trans) {
  SmplSequence s;
  for (const auto& p : poses) s.poses.push_back(to_pose(p));
  s.shape = to_shape(beta);
  for (const auto& t : to_vec(trans)) s.translations.push_back(Translation{t});
  s.validate();
  return s;
}

TriangleMesh to_mesh(const Points& v, const Faces& f, bool body, const std::string& name) {
  TriangleMesh m;
  m.vertices = to_vec(v);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    std::array<std::uint32_t, 3> face{};
    for (int c = 0; c < 3; ++c) {
      if (f(i, c) < 0) throw InvalidArgument("mesh: negative face index");
      face[static_cast<std::size_t>(c)] = static_cast<std::uint32_t>(f(i, c));
    }
    m.faces.push_back(face);
  }
  m.name = name;
  m.role = body ? MeshRole::kBody : MeshRole::kScene;
  m.validate();
  return m;
}

py::dict jv_dict(const JvError& e) {
  py::dict d;
  d["joint_mm"] = e.joint_mm;
  d["vertex_mm"] = e.vertex_mm;
  d["frame_joint_mm"] = e.frame_joint_mm;
  d["frame_vertex_mm"] = e.frame_vertex_mm;
  return d;
}

}  // namespace

PYBIND11_MODULE(_hpskit, m) {
  m.doc() = "LiDAR human pose and shape toolkit";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<EmptyInput>(m, "EmptyInput", base.ptr());
  py::register_exception<DegenerateRotation>(m, "DegenerateRotation", base.ptr());
  py::register_exception<DegenerateRegistration>(m, "DegenerateRegistration", base.ptr());
  py::register_exception<NoPeak>(m, "NoPeak", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<MissingFile>(m, "MissingFile", validation.ptr());
  py::register_exception<CountMismatch>(m, "CountMismatch", validation.ptr());
  py::register_exception<NonFiniteValue>(m, "NonFiniteValue", validation.ptr());
  py::register_exception<ParseError>(m, "ParseError", validation.ptr());

  m.def("set_thread_count", &set_thread_count, py::arg("n"), "0 means all cores.");
  m.def("thread_count", &thread_count);

  // geometry
  m.def("rot6d_to_matrix", [](const std::array<double, 6>& r) { return rot6d_to_matrix(r).matrix(); });
  m.def("matrix_to_rot6d", [](const Mat3& r) { return matrix_to_rot6d(to_rotation(r)); });
  m.def("axis_angle_to_matrix", [](const Vec3& aa) { return axis_angle_to_matrix(aa).matrix(); });
  m.def("matrix_to_axis_angle", [](const Mat3& r) { return Vec3(matrix_to_axis_angle(to_rotation(r))); });
  m.def("geodesic_angle_deg", [](const Mat3& a, const Mat3& b) {
    return geodesic_angle_deg(to_rotation(a), to_rotation(b));
  });
  m.def(
      "farthest_point_sample",
      [](const Points& p, std::size_t n, std::uint64_t seed) { return farthest_point_sample(to_cloud(p), n, seed); },
      py::arg("points"), py::arg("n"), py::arg("seed") = 0);
  m.def(
      "knn", [](const Points& q, const Points& ref, std::size_t k) { return knn(to_cloud(q), to_cloud(ref), k); },
      py::arg("query"), py::arg("reference"), py::arg("k") = 1);
  m.def("unidirectional_chamfer",
        [](const Points& src, const Points& dst) { return unidirectional_chamfer(to_cloud(src), to_cloud(dst)); });

  // scanning
  py::class_<SensorSpec>(m, "SensorSpec")
      .def(py::init<>())
      .def_readwrite("h_resolution", &SensorSpec::h_resolution)
      .def_readwrite("v_lines", &SensorSpec::v_lines)
      .def_readwrite("v_fov_deg", &SensorSpec::v_fov_deg)
      .def_readwrite("h_fov_deg", &SensorSpec::h_fov_deg)
      .def_readwrite("center", &SensorSpec::center)
      .def_readwrite("max_range", &SensorSpec::max_range)
      .def("validate", &SensorSpec::validate)
      .def_static("load", [](const std::filesystem::path& p) { return load_sensor_spec(p); })
      .def("__str__", [](const SensorSpec& s) { return format_sensor_spec(s); });
  m.def("beam_directions", [](const SensorSpec& s) { return to_points(beam_directions(s)); });
  m.def(
      "scan_scene",
      [](const SensorSpec& spec, const std::vector<std::tuple<Points, Faces, bool>>& meshes, bool body_only) {
        std::vector<TriangleMesh> scene;
        for (std::size_t i = 0; i < meshes.size(); ++i) {
          const auto& [v, f, body] = meshes[i];
          scene.push_back(to_mesh(v, f, body, "mesh" + std::to_string(i)));
        }
        const std::vector<std::vector<TriangleMesh>> frames{scene};
        const PointCloud pc = simulate_sequence(spec, frames, body_only).front();
        return py::make_tuple(to_points(pc.points), pc.beam_index);
      },
      py::arg("spec"), py::arg("meshes"), py::arg("body_only") = false,
      "meshes: list of (vertices (V,3), faces (F,3), is_body). Returns (points, beam_index).");
  m.def("random_crop", [](const Points& p, double lo, double hi, std::uint64_t seed) {
    return to_points(random_crop(to_cloud(p), {lo, hi}, seed).points);
  });

  // body model
  py::class_<BodyModel>(m, "BodyModel")
      .def_property_readonly("joint_count", &BodyModel::joint_count)
      .def_property_readonly("vertex_count", &BodyModel::vertex_count)
      .def_property_readonly("faces",
                             [](const BodyModel& b) {
                               Faces f(static_cast<Eigen::Index>(b.faces().size()), 3);
                               for (std::size_t i = 0; i < b.faces().size(); ++i)
                                 for (int c = 0; c < 3; ++c)
                                   f(static_cast<Eigen::Index>(i), c) = b.faces()[i][static_cast<std::size_t>(c)];
                               return f;
                             })
      .def_static("load", [](const std::filesystem::path& p) { return load_body_model(p); })
      .def_static("demo", &make_demo_body_model)
      .def("save", [](const BodyModel& b, const std::filesystem::path& p) { save_body_model(b, p); });
  m.def(
      "forward",
      [](const BodyModel& model, const Points& pose_aa, const std::vector<double>& beta, const Vec3& trans) {
        const BodyOutput out = forward(model, to_pose(pose_aa), to_shape(beta), Translation{trans});
        return py::make_tuple(to_points(out.joints), to_points(out.vertices));
      },
      py::arg("model"), py::arg("pose"), py::arg("shape") = std::vector<double>{},
      py::arg("translation") = Vec3(Vec3::Zero()), "Returns (joints, vertices).");

  // preprocessing
  m.def(
      "remove_background",
      [](const Points& frame, const Points& bg, double thr) {
        return to_points(remove_background(to_cloud(frame), to_cloud(bg), thr).points);
      },
      py::arg("frame"), py::arg("background"), py::arg("threshold") = 0.1);
  m.def(
      "cluster_instances",
      [](const Points& p, double eps, std::size_t min_pts) {
        const Clustering c = cluster_instances(to_cloud(p), eps, min_pts);
        return py::make_tuple(c.clusters, c.noise);
      },
      py::arg("points"), py::arg("eps") = 0.4, py::arg("min_pts") = 10, "Returns (clusters, noise).");
  m.def("hungarian_assign", [](const Eigen::MatrixXd& cost) {
    const Assignment a = hungarian_assign(cost);
    return py::make_tuple(a.pairs, a.total_cost);
  });
  m.def(
      "normalize_frame",
      [](const Points& p, std::uint64_t seed, std::size_t n) {
        const NormalizedFrame f = normalize_frame(to_cloud(p), seed, n);
        return py::make_tuple(to_points(f.points), f.loc, f.source);
      },
      py::arg("points"), py::arg("seed") = 0, py::arg("n") = kFpsPoints, "Returns (points, loc, source).");

  // metrics
  m.def(
      "evaluate",
      [](const BodyModel& model, const std::vector<Points>& pred_poses, const std::vector<double>& pred_shape,
         const Points& pred_trans, const std::vector<Points>& gt_poses, const std::vector<double>& gt_shape,
         const Points& gt_trans, const std::vector<Points>& frames) {
        std::vector<PointCloud> clouds;
        for (const auto& f : frames) clouds.push_back(to_cloud(f));
        const EvaluationReport r = evaluate_sequence(to_sequence(pred_poses, pred_shape, pred_trans),
                                                     to_sequence(gt_poses, gt_shape, gt_trans), model, clouds);
        py::dict d;
        d["frames"] = r.frame_count;
        d["P"] = jv_dict(r.p);
        d["PS"] = jv_dict(r.ps);
        d["PST"] = jv_dict(r.pst);
        d["angle_deg"] = r.angle_deg;
        if (r.sucd) {
          py::dict s;
          s["sum"] = r.sucd->sum;
          s["frame_mean"] = r.sucd->frame_mean;
          s["rms_mm"] = r.sucd->rms_mm;
          s["per_frame"] = r.sucd->per_frame;
          d["sucd"] = s;
        } else {
          d["sucd"] = py::none();
        }
        return d;
      },
      py::arg("model"), py::arg("pred_poses"), py::arg("pred_shape"), py::arg("pred_translations"),
      py::arg("gt_poses"), py::arg("gt_shape"), py::arg("gt_translations"),
      py::arg("frames") = std::vector<Points>{});
  m.def("sucd", [](const std::vector<Points>& frames, const std::vector<Points>& verts) {
    std::vector<PointCloud> clouds;
    std::vector<std::vector<Vec3>> v;
    for (const auto& f : frames) clouds.push_back(to_cloud(f));
    for (const auto& x : verts) v.push_back(to_vec(x));
    const SucdResult r = sucd(clouds, v);
    return py::make_tuple(r.sum, r.per_frame);
  });

  // calibration and sync
  m.def(
      "icp_register",
      [](const Points& src, const Points& dst, std::size_t max_iters, double tol) {
        IcpOptions o;
        o.max_iters = max_iters;
        o.tol = tol;
        const IcpResult r = icp_register(to_cloud(src), to_cloud(dst), o);
        return py::make_tuple(Mat4(r.transform.matrix()), r.residual, r.iterations);
      },
      py::arg("source"), py::arg("target"), py::arg("max_iters") = 100, py::arg("tol") = 1e-10,
      "Returns (4x4 transform, RMS residual, iterations).");
  m.def(
      "detect_jump_peak",
      [](const std::vector<double>& v, std::size_t window) {
        HeightTrace h;
        h.values = v;
        return detect_jump_peak(h, window);
      },
      py::arg("values"), py::arg("window") = 5);
  m.def(
      "align_streams",
      [](const std::vector<std::vector<double>>& streams, std::size_t window) {
        std::vector<HeightTrace> t(streams.size());
        for (std::size_t i = 0; i < streams.size(); ++i) t[i].values = streams[i];
        return align_streams(t, window);
      },
      py::arg("streams"), py::arg("window") = 5);

  // files
  m.def("read_point_frame", [](const std::filesystem::path& p) { return to_points(read_point_frame(p, p.string()).points); });
  m.def("write_point_frame",
        [](const Points& p, const std::filesystem::path& file) { write_point_frame(to_cloud(p), file); });

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = run_cli(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line in-process. Returns (exit_code, stdout, stderr).");
}
