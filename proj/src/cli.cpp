#include "hpskit/cli.hpp"

#include "hpskit/body_model.hpp"
#include "hpskit/calib_sync.hpp"
#include "hpskit/dataset_io.hpp"
#include "hpskit/errors.hpp"
#include "hpskit/metrics.hpp"
#include "hpskit/parallel.hpp"
#include "hpskit/preprocess.hpp"
#include "hpskit/random.hpp"
#include "hpskit/scan_sim.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

namespace hpskit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw MissingFile(what + " not found: " + p.string());
}

// ---- transforms ------------------------------------------------------------

std::string format_transform(const RigidTransform& t) {
  const Mat4 m = t.matrix();
  std::string s;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) s += (c ? " " : "") + num(m(r, c));
    s += '\n';
  }
  return s;
}

RigidTransform read_transform(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw MissingFile("transform file not found: " + file.string());
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c)
      if (!(in >> m(r, c))) throw ValidationError(file.string() + ": expected 16 numbers (4x4 row-major)");
  try {
    return RigidTransform{Rotation::from_matrix(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
  } catch (const InvalidArgument& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

// ---- simulate --------------------------------------------------------------

struct SimulateOptions {
  std::string mesh;
  std::string model;
  std::vector<std::string> annotations;
  std::string sensor;
  std::vector<double> crop_range;
  bool body_only = false;
  std::string out;
  std::string id;
};

int run_simulate(const SimulateOptions& o, std::uint64_t seed, std::ostream& out) {
  if (o.mesh.empty() && o.model.empty()) throw UsageError("simulate needs --mesh or --model with --annotations");
  if (!o.model.empty() && o.annotations.empty()) throw UsageError("--model needs at least one --annotations file");
  if (o.model.empty() && !o.annotations.empty()) throw UsageError("--annotations needs --model");
  if (!o.crop_range.empty() && o.crop_range.size() != 2) throw UsageError("--crop-range takes two values");

  SensorSpec spec;
  if (!o.sensor.empty()) {
    if (!fs::exists(o.sensor)) throw ConfigError("sensor spec not found: " + o.sensor);
    spec = load_sensor_spec(o.sensor);
  }
  if (!o.mesh.empty()) require_exists(o.mesh, "mesh input");
  if (!o.model.empty()) require_exists(o.model, "body model");
  for (const auto& a : o.annotations) require_exists(a, "annotation file");

  std::vector<std::vector<TriangleMesh>> frames;
  if (!o.mesh.empty()) frames = import_mesh_animation(o.mesh);

  std::vector<PersonAnnotation> people;
  if (!o.model.empty()) {
    const BodyModel model = load_body_model(o.model);
    if (model.faces().empty()) throw ValidationError(o.model + ": model has no faces and can not be scanned");
    std::size_t count = 0;
    for (const auto& file : o.annotations) {
      PersonAnnotation a = read_annotation(file);
      if (count != 0 && a.frame_count() != count) {
        throw ValidationError(file + ": " + std::to_string(a.frame_count()) + " frames, " + o.annotations.front() +
                              " has " + std::to_string(count));
      }
      count = a.frame_count();
      for (const auto& p : people)
        if (p.person_id == a.person_id) throw ValidationError(file + ": duplicate person id " + std::to_string(a.person_id));
      people.push_back(std::move(a));
    }
    if (frames.size() == 1 && count > 1) frames.resize(count, frames.front());
    if (frames.empty()) frames.resize(count);
    if (frames.size() != count) {
      throw ValidationError(o.mesh + " has " + std::to_string(frames.size()) + " frames but annotations have " +
                            std::to_string(count));
    }
    std::vector<SmplSequence> smpl;
    for (std::size_t p = 0; p < people.size(); ++p) {
      smpl.push_back(people[p].to_smpl());
      if (count > 0 && smpl.back().poses[0].size() != model.joint_count()) {
        throw ValidationError(o.annotations[p] + ": poses have " + std::to_string(smpl.back().poses[0].size()) +
                              " joints, model has " + std::to_string(model.joint_count()));
      }
    }
    std::vector<TriangleMesh> posed(count * people.size());
    parallel_for(posed.size(), [&](std::size_t k) {
      const std::size_t t = k / people.size(), p = k % people.size();
      const SmplSequence& s = smpl[p];
      TriangleMesh m;
      m.vertices = forward(model, s.poses[t], s.shape, s.translations[t]).vertices;
      m.faces = model.faces();
      m.name = "body_" + std::to_string(people[p].person_id);
      m.role = MeshRole::kBody;
      posed[k] = std::move(m);
    });
    for (std::size_t k = 0; k < posed.size(); ++k) frames[k / people.size()].push_back(std::move(posed[k]));
  }
  if (frames.empty()) throw ValidationError("no frames to simulate");

  std::vector<PointCloud> clouds = simulate_sequence(spec, frames, o.body_only);
  if (!o.crop_range.empty()) {
    for (std::size_t t = 0; t < clouds.size(); ++t) {
      if (clouds[t].empty()) continue;
      clouds[t] = random_crop(clouds[t], {o.crop_range[0], o.crop_range[1]}, mix_seed(seed, t));
    }
  }
  for (auto& c : clouds) c.beam_index.clear();

  Sequence seq;
  std::vector<int> ids;
  for (const auto& p : people) ids.push_back(p.person_id);
  const std::string id = o.id.empty() ? fs::path(o.out).filename().string() : o.id;
  seq.manifest = SequenceManifest::standard(id, clouds.size(), ids, true);
  seq.frames = std::move(clouds);
  seq.annotations = std::move(people);
  seq.sensor = spec;
  write_sequence(seq, o.out);
  for (std::size_t t = 0; t < seq.frames.size(); ++t) out << "frame " << t << ": " << seq.frames[t].size() << " points\n";
  return kExitOk;
}

// ---- preprocess ------------------------------------------------------------

struct PreprocessOptions {
  std::string input;
  std::string background;
  double bg_threshold = 0.1;
  double eps = 0.4;
  std::size_t min_pts = 10;
  double max_dist = 1.0;
  std::size_t nfps = kFpsPoints;
  double assign_dist = 1.0;
  std::string out;
};

PointCloud load_background(const fs::path& p) {
  require_exists(p, "background");
  if (!fs::is_directory(p)) return read_point_frame(p, "background");
  const Sequence s = read_sequence(p);
  PointCloud all;
  for (const auto& f : s.frames) all.points.insert(all.points.end(), f.points.begin(), f.points.end());
  return all;
}

// Ground-truth person whose translation stays closest to the track's
// locations, or -1 when none is within max_mean.
int nearest_person(const Track& tr, const std::vector<PersonAnnotation>& people, double max_mean) {
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < people.size(); ++p) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t t = 0; t < tr.locations.size(); ++t) {
      if (!tr.locations[t] || t >= people[p].translations.size()) continue;
      s += (*tr.locations[t] - people[p].translations[t]).norm();
      ++n;
    }
    if (n == 0) continue;
    const double d = s / static_cast<double>(n);
    if (d < best_d && d <= max_mean) {
      best_d = d;
      best = static_cast<int>(p);
    }
  }
  return best;
}

int run_preprocess(const PreprocessOptions& o, std::uint64_t seed, std::ostream& out) {
  require_exists(o.input, "input sequence");
  if (o.nfps == 0) throw UsageError("--nfps must be >= 1");
  const Sequence seq = read_sequence(o.input);
  if (seq.frames.empty()) {
    out << "no frames in " << o.input << "\n";
    return kExitOk;
  }
  std::optional<PointCloud> background;
  if (!o.background.empty()) background = load_background(o.background);

  std::vector<std::vector<PointCloud>> per_frame(seq.frames.size());
  parallel_for(seq.frames.size(), [&](std::size_t t) {
    const PointCloud fg = background ? remove_background(seq.frames[t], *background, o.bg_threshold) : seq.frames[t];
    for (const auto& members : cluster_instances(fg, o.eps, o.min_pts).clusters) per_frame[t].push_back(fg.subset(members));
  });
  TrackSet set;
  for (const auto& clusters : per_frame) track_instances(set, clusters, TrackerConfig{o.max_dist});

  fs::create_directories(o.out);
  out << "tracks: " << set.tracks.size() << "\n";
  for (const Track& tr : set.tracks) {
    const fs::path dir = fs::path(o.out) / ("track_" + std::to_string(tr.id));
    const int person = nearest_person(tr, seq.annotations, o.assign_dist);

    Sequence ts;
    std::vector<int> ids;
    if (person >= 0) ids.push_back(seq.annotations[static_cast<std::size_t>(person)].person_id);
    ts.manifest = SequenceManifest::standard(seq.manifest.sequence_id + "_track_" + std::to_string(tr.id),
                                             seq.frames.size(), ids, seq.sensor.has_value());
    ts.manifest.timestamps = seq.manifest.timestamps;
    ts.manifest.frame_rate = seq.manifest.frame_rate;
    ts.manifest.coordinate_frame = seq.manifest.coordinate_frame;
    ts.sensor = seq.sensor;
    if (person >= 0) ts.annotations.push_back(seq.annotations[static_cast<std::size_t>(person)]);
    ts.frames.resize(seq.frames.size());
    std::size_t present = 0;
    for (std::size_t t = 0; t < tr.clouds.size(); ++t) {
      if (!tr.clouds[t]) continue;
      ts.frames[t] = *tr.clouds[t];
      ts.frames[t].beam_index.clear();
      ++present;
    }
    write_sequence(ts, dir);

    std::vector<std::size_t> frames;
    for (std::size_t t = 0; t < tr.clouds.size(); ++t)
      if (tr.clouds[t]) frames.push_back(t);
    std::vector<NormalizedFrame> norm(frames.size());
    parallel_for(frames.size(), [&](std::size_t k) {
      const std::size_t t = frames[k];
      norm[k] = normalize_frame(*tr.clouds[t], mix_seed(mix_seed(seed, static_cast<std::uint64_t>(tr.id)), t), o.nfps);
    });
    fs::create_directories(dir / "normalized");
    std::string loc = "# frame x y z\n";
    for (std::size_t k = 0; k < frames.size(); ++k) {
      PointCloud pc;
      pc.points = norm[k].points;
      char name[32];
      std::snprintf(name, sizeof name, "%06zu.bin", frames[k]);
      write_point_frame(pc, dir / "normalized" / name);
      loc += std::to_string(frames[k]) + " " + num(norm[k].loc.x()) + " " + num(norm[k].loc.y()) + " " +
             num(norm[k].loc.z()) + "\n";
    }
    write_file(dir / "loc.txt", loc);
    out << "track " << tr.id << ": " << present << " of " << seq.frames.size() << " frames";
    if (person >= 0) out << ", person " << ids[0];
    out << "\n";
  }
  return kExitOk;
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateOptions {
  std::string pred;
  std::string gt;
  std::string model;
  std::string sequence;
  std::string report;
  std::string table;
  std::string id;
};

json jv_json(const JvError& e) {
  return {{"joint_mm", e.joint_mm}, {"vertex_mm", e.vertex_mm}, {"frame_joint_mm", e.frame_joint_mm},
          {"frame_vertex_mm", e.frame_vertex_mm}};
}

int run_evaluate(const EvaluateOptions& o, std::ostream& out) {
  require_exists(o.pred, "prediction file");
  require_exists(o.gt, "ground-truth file");
  require_exists(o.model, "body model");
  if (!o.sequence.empty()) require_exists(o.sequence, "sequence");

  const PersonAnnotation pa = read_annotation(o.pred);
  const PersonAnnotation ga = read_annotation(o.gt);
  if (pa.frame_count() != ga.frame_count()) {
    throw ValidationError("frame count mismatch: " + o.pred + " has " + std::to_string(pa.frame_count()) + ", " +
                          o.gt + " has " + std::to_string(ga.frame_count()));
  }
  const BodyModel model = load_body_model(o.model);
  for (const auto* a : {&pa, &ga}) {
    if (!a->poses.empty() && a->poses[0].size() != model.joint_count()) {
      throw ValidationError((a == &pa ? o.pred : o.gt) + ": poses have " + std::to_string(a->poses[0].size()) +
                            " joints, model has " + std::to_string(model.joint_count()));
    }
  }
  std::vector<PointCloud> frames;
  std::string id = o.id.empty() ? fs::path(o.pred).stem().string() : o.id;
  if (!o.sequence.empty()) {
    Sequence s = read_sequence(o.sequence);
    if (s.frames.size() != pa.frame_count()) {
      throw ValidationError("frame count mismatch: " + o.sequence + " has " + std::to_string(s.frames.size()) + ", " +
                            o.pred + " has " + std::to_string(pa.frame_count()));
    }
    frames = std::move(s.frames);
    if (o.id.empty()) id = s.manifest.sequence_id;
  }
  EvaluationReport rep = evaluate_sequence(pa.to_smpl(), ga.to_smpl(), model, frames);
  rep.sequence_id = id;

  out << "sequence " << rep.sequence_id << ", " << rep.frame_count << " frames\n";
  for (const JvError* e : {&rep.p, &rep.ps, &rep.pst}) {
    out << "J/V Err (" << to_string(e->mode) << "): " << fixed(e->joint_mm) << " / " << fixed(e->vertex_mm) << " mm\n";
  }
  out << "Ang Err: " << fixed(rep.angle_deg) << " deg\n";
  if (rep.sucd) {
    out << "SUCD: sum " << fixed(rep.sucd->sum, 9) << " m^2, per-frame mean " << fixed(rep.sucd->frame_mean, 9)
        << " m^2, rms " << fixed(rep.sucd->rms_mm) << " mm (" << rep.sucd->frames_used << " frames, "
        << rep.sucd->frames_skipped << " skipped)\n";
  }

  if (!o.report.empty()) {
    json j;
    j["sequence_id"] = rep.sequence_id;
    j["frame_count"] = rep.frame_count;
    j["jv_error"] = {{"P", jv_json(rep.p)}, {"PS", jv_json(rep.ps)}, {"PST", jv_json(rep.pst)}};
    j["angle_error_deg"] = rep.angle_deg;
    if (rep.sucd) {
      json per = json::array();
      for (double v : rep.sucd->per_frame) per.push_back(std::isnan(v) ? json(nullptr) : json(v));
      j["sucd"] = {{"sum_m2", rep.sucd->sum},
                   {"frame_mean_m2", rep.sucd->frame_mean},
                   {"rms_mm", rep.sucd->rms_mm},
                   {"frames_used", rep.sucd->frames_used},
                   {"frames_skipped", rep.sucd->frames_skipped},
                   {"per_frame_m2", per}};
    } else {
      j["sucd"] = nullptr;
    }
    write_file(o.report, j.dump(1) + "\n");
  }
  if (!o.table.empty()) {
    std::string t =
        "sequence_id,frames,P_joint_mm,P_vertex_mm,PS_joint_mm,PS_vertex_mm,PST_joint_mm,PST_vertex_mm,"
        "ang_err_deg,sucd_sum_m2,sucd_frame_mean_m2,sucd_rms_mm,sucd_frames_used,sucd_frames_skipped\n";
    t += rep.sequence_id + "," + std::to_string(rep.frame_count);
    for (const JvError* e : {&rep.p, &rep.ps, &rep.pst}) t += "," + num(e->joint_mm) + "," + num(e->vertex_mm);
    t += "," + num(rep.angle_deg);
    if (rep.sucd) {
      t += "," + num(rep.sucd->sum) + "," + num(rep.sucd->frame_mean) + "," + num(rep.sucd->rms_mm) + "," +
           std::to_string(rep.sucd->frames_used) + "," + std::to_string(rep.sucd->frames_skipped);
    } else {
      t += ",,,,,";
    }
    write_file(o.table, t + "\n");
  }
  return kExitOk;
}

// ---- calibrate -------------------------------------------------------------

struct CalibrateOptions {
  std::string source;
  std::string target;
  std::size_t frame = 0;
  std::size_t max_iters = 100;
  double tol = 1e-10;
  std::string init;
  std::string out;
};

int run_calibrate(const CalibrateOptions& o, std::ostream& out) {
  require_exists(o.source, "source sequence");
  require_exists(o.target, "target sequence");
  if (!o.init.empty()) require_exists(o.init, "initial transform");
  const Sequence src = read_sequence(o.source);
  const Sequence dst = read_sequence(o.target);
  for (const Sequence* s : {&src, &dst}) {
    if (o.frame >= s->frames.size()) {
      throw ValidationError(s->manifest.sequence_id + ": frame " + std::to_string(o.frame) + " out of range (" +
                            std::to_string(s->frames.size()) + " frames)");
    }
  }
  IcpOptions opt;
  opt.max_iters = o.max_iters;
  opt.tol = o.tol;
  if (!o.init.empty()) opt.init = read_transform(o.init);
  IcpResult r;
  try {
    r = icp_register(src.frames[o.frame], dst.frames[o.frame], opt);
  } catch (const DegenerateRegistration& e) {
    throw DegenerateRegistration(src.manifest.sequence_id + " -> " + dst.manifest.sequence_id + ": " + e.what());
  }
  write_file(o.out, format_transform(r.transform));
  out << "calibrated " << src.manifest.sequence_id << " -> " << dst.manifest.sequence_id << ": residual "
      << fixed(r.residual, 9) << " m after " << r.iterations << " iterations\n";
  return kExitOk;
}

// ---- sync ------------------------------------------------------------------

struct SyncOptions {
  std::vector<std::string> streams;
  std::size_t window = 5;
  std::string out;
};

int run_sync(const SyncOptions& o, std::ostream& out) {
  if (o.streams.size() < 2) throw UsageError("sync needs at least two --stream inputs");
  std::vector<HeightTrace> traces;
  std::vector<std::string> names;
  for (const auto& s : o.streams) {
    require_exists(s, "stream");
    if (fs::is_directory(s)) {
      const Sequence seq = read_sequence(s);
      traces.push_back(height_trace_from_sequence(seq));
      names.push_back(seq.manifest.sequence_id);
    } else {
      traces.push_back(load_height_trace(s));
      names.push_back(s);
    }
  }
  std::vector<long> offsets;
  try {
    offsets = align_streams(traces, o.window);
  } catch (const NoPeak& e) {
    // Swap the stream index for its name.
    std::string msg = e.what();
    for (std::size_t i = 0; i < names.size(); ++i) {
      const std::string tag = "stream " + std::to_string(i) + ":";
      if (msg.rfind(tag, 0) == 0) msg = "stream " + names[i] + ":" + msg.substr(tag.size());
    }
    throw NoPeak(msg);
  }
  std::string text = "# stream offset source\n";
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    text += std::to_string(i) + " " + std::to_string(offsets[i]) + " " + names[i] + "\n";
    out << names[i] << ": offset " << offsets[i] << " frames\n";
  }
  write_file(o.out, text);
  return kExitOk;
}

// ----------------------------------------------------------------------------

int report(std::ostream& err, const std::string& sub, const std::string& what, int code) {
  err << "hpskit" << (sub.empty() ? "" : " " + sub) << ": " << what << "\n";
  return code;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LiDAR human pose and shape toolkit", "hpskit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Read options from a TOML or INI file; command-line flags take precedence");

  long long threads = -1;
  std::uint64_t seed = 0;
  app.add_option("--threads", threads, "Worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();

  SimulateOptions so;
  auto* sim = app.add_subcommand("simulate", "Scan a mesh animation or posed body model into a sequence");
  sim->add_option("--mesh", so.mesh, "OBJ file or directory of per-frame OBJ files");
  sim->add_option("--model", so.model, "Body model file");
  sim->add_option("--annotations", so.annotations, "Per-person parameter files to pose the model with");
  sim->add_option("--sensor", so.sensor, "Sensor spec file (default: 2048 x 128 beams)");
  sim->add_option("--crop-range", so.crop_range, "Random occlusion crop radius range, meters")->expected(2);
  sim->add_flag("--body-only", so.body_only, "Keep only points hitting body meshes");
  sim->add_option("--out", so.out, "Output sequence directory")->required();
  sim->add_option("--id", so.id, "Sequence id (default: output directory name)");

  PreprocessOptions po;
  auto* pre = app.add_subcommand("preprocess", "Split a sequence into tracked, normalized per-person sequences");
  pre->add_option("--input", po.input, "Input sequence directory")->required();
  pre->add_option("--background", po.background, "Background point file or sequence");
  pre->add_option("--bg-threshold", po.bg_threshold, "Background distance threshold, meters")->capture_default_str();
  pre->add_option("--eps", po.eps, "Clustering radius, meters")->capture_default_str();
  pre->add_option("--min-pts", po.min_pts, "Clustering density threshold")->capture_default_str();
  pre->add_option("--max-dist", po.max_dist, "Tracking gate per frame, meters")->capture_default_str();
  pre->add_option("--nfps", po.nfps, "Points per normalized frame")->capture_default_str();
  pre->add_option("--assign-dist", po.assign_dist, "Max mean distance for matching a track to a person")
      ->capture_default_str();
  pre->add_option("--out", po.out, "Output directory")->required();

  EvaluateOptions eo;
  auto* ev = app.add_subcommand("evaluate", "Compare predicted and ground-truth parameters");
  ev->add_option("--pred", eo.pred, "Predicted parameter file")->required();
  ev->add_option("--gt", eo.gt, "Ground-truth parameter file")->required();
  ev->add_option("--model", eo.model, "Body model file")->required();
  ev->add_option("--sequence", eo.sequence, "Observed sequence for SUCD");
  ev->add_option("--report", eo.report, "Write the JSON report here");
  ev->add_option("--table", eo.table, "Write the CSV table here");
  ev->add_option("--id", eo.id, "Sequence id in the report");

  CalibrateOptions co;
  auto* cal = app.add_subcommand("calibrate", "Register one sequence frame onto another with ICP");
  cal->add_option("--source", co.source, "Source sequence")->required();
  cal->add_option("--target", co.target, "Target sequence")->required();
  cal->add_option("--frame", co.frame, "Frame index used from both")->capture_default_str();
  cal->add_option("--max-iters", co.max_iters, "ICP iteration cap")->capture_default_str();
  cal->add_option("--tol", co.tol, "Stop when the residual improves by less, meters")->capture_default_str();
  cal->add_option("--init", co.init, "Initial 4x4 transform file (default: centroid alignment)");
  cal->add_option("--out", co.out, "Transform file to write")->required();

  SyncOptions yo;
  auto* syn = app.add_subcommand("sync", "Frame offsets between streams from their jump peaks");
  syn->add_option("--stream", yo.streams, "Height trace file or sequence directory; first is the reference")
      ->required();
  syn->add_option("--window", yo.window, "Moving-average window, frames")->capture_default_str();
  syn->add_option("--out", yo.out, "Offsets file to write")->required();

  std::string demo_out;
  auto* demo = app.add_subcommand("demo-model", "Write the built-in demo body model");
  demo->add_option("--out", demo_out, "Model file to write")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::FileError& e) {
    return report(err, "", e.what(), kExitConfig);
  } catch (const CLI::ConfigError& e) {
    return report(err, "", e.what(), kExitConfig);
  } catch (const CLI::ParseError& e) {
    return report(err, "", std::string(e.what()) + "\nrun with --help for usage", kExitUsage);
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  try {
    if (threads >= 0) set_thread_count(static_cast<std::size_t>(threads));
    if (sim->parsed()) return run_simulate(so, seed, out);
    if (pre->parsed()) return run_preprocess(po, seed, out);
    if (ev->parsed()) return run_evaluate(eo, out);
    if (cal->parsed()) return run_calibrate(co, out);
    if (syn->parsed()) return run_sync(yo, out);
    if (demo->parsed()) {
      save_body_model(make_demo_body_model(), demo_out);
      out << "wrote " << demo_out << "\n";
      return kExitOk;
    }
  } catch (const UsageError& e) {
    return report(err, sub, std::string("usage error: ") + e.what(), kExitUsage);
  } catch (const ConfigError& e) {
    return report(err, sub, std::string("config error: ") + e.what(), kExitConfig);
  } catch (const ValidationError& e) {
    return report(err, sub, std::string("validation error: ") + e.what(), kExitValidation);
  } catch (const IoError& e) {
    return report(err, sub, std::string("i/o error: ") + e.what(), kExitIo);
  } catch (const std::filesystem::filesystem_error& e) {
    return report(err, sub, std::string("i/o error: ") + e.what(), kExitIo);
  } catch (const std::exception& e) {
    return report(err, sub, std::string("computation error: ") + e.what(), kExitComputation);
  }
  return kExitUsage;
}

}  // namespace hpskit
