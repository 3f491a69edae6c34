#include "hpskit/dataset_io.hpp"

#include "binary_io.hpp"
#include "hpskit/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace hpskit {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string frame_label(std::size_t i) { return "frame " + std::to_string(i); }

std::string padded(std::size_t i) {
  std::ostringstream s;
  s << std::setw(6) << std::setfill('0') << i;
  return s.str();
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MissingFile("missing file " + file.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << text;
  if (!out) throw IoError("write failed for " + file.string());
}

json parse_json(const fs::path& file) {
  const std::string text = read_text(file);
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(file.string() + ": malformed JSON: " + e.what());
  }
}

// Typed field access with diagnostics that name the file and key.
template <typename T>
T field(const json& j, const char* key, const fs::path& file) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError(file.string() + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(file.string() + ": key '" + key + "' has the wrong type");
  }
}

double number(const json& v, const std::string& where) {
  if (v.is_null()) throw NonFiniteValue(where + ": non-finite value");
  if (!v.is_number()) throw ValidationError(where + ": expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw NonFiniteValue(where + ": non-finite value");
  return d;
}

Vec3 vec3(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ValidationError(where + ": expected 3 numbers");
  return Vec3(number(v[0], where), number(v[1], where), number(v[2], where));
}

json to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

class DirectoryLock {
 public:
  explicit DirectoryLock(fs::path file) : file_(std::move(file)) {
    std::FILE* f = std::fopen(file_.string().c_str(), "wx");
    if (!f) throw IoError("sequence directory is locked or unwritable: " + file_.string());
    std::fclose(f);
  }
  ~DirectoryLock() {
    std::error_code ec;
    fs::remove(file_, ec);
  }
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  fs::path file_;
};

}  // namespace

// ---- manifest --------------------------------------------------------------

SequenceManifest SequenceManifest::standard(const std::string& id, std::size_t frames, std::vector<int> persons,
                                            bool with_sensor) {
  SequenceManifest m;
  m.sequence_id = id;
  m.frame_count = frames;
  for (std::size_t i = 0; i < frames; ++i) {
    m.timestamps.push_back(static_cast<double>(i) / m.frame_rate);
    m.frame_files.push_back("frames/" + padded(i) + ".bin");
  }
  m.person_ids = std::move(persons);
  for (int p : m.person_ids) m.annotation_files.push_back("annotations/person_" + std::to_string(p) + ".json");
  if (with_sensor) m.sensor_file = "sensor.cfg";
  return m;
}

void SequenceManifest::validate() const {
  if (format_version != kFormatVersion) {
    throw ValidationError("manifest: unsupported format_version " + std::to_string(format_version));
  }
  if (!(frame_rate > 0.0) || !std::isfinite(frame_rate)) throw ValidationError("manifest: frame_rate must be > 0");
  if (frame_files.size() != frame_count) {
    throw CountMismatch("manifest: frame_count " + std::to_string(frame_count) + " but " +
                        std::to_string(frame_files.size()) + " frame files");
  }
  if (timestamps.size() != frame_count) {
    throw CountMismatch("manifest: frame_count " + std::to_string(frame_count) + " but " +
                        std::to_string(timestamps.size()) + " timestamps");
  }
  for (std::size_t i = 0; i < timestamps.size(); ++i) {
    if (!std::isfinite(timestamps[i])) throw NonFiniteValue("manifest: non-finite timestamp at " + frame_label(i));
    if (i > 0 && !(timestamps[i] > timestamps[i - 1])) {
      throw ValidationError("manifest: timestamps not strictly increasing at " + frame_label(i));
    }
  }
  if (annotation_files.size() != person_ids.size()) {
    throw CountMismatch("manifest: " + std::to_string(person_ids.size()) + " person ids but " +
                        std::to_string(annotation_files.size()) + " annotation files");
  }
  if (std::set<int>(person_ids.begin(), person_ids.end()).size() != person_ids.size()) {
    throw ValidationError("manifest: duplicate person id");
  }
}

// ---- annotations -----------------------------------------------------------

void PersonAnnotation::validate() const {
  const std::string who = "person " + std::to_string(person_id);
  for (std::size_t b = 0; b < shape.beta.size(); ++b) {
    if (!std::isfinite(shape.beta[b])) throw NonFiniteValue(who + ": non-finite shape coefficient " + std::to_string(b));
  }
  if (translations.size() != poses.size()) {
    throw CountMismatch(who + ": " + std::to_string(poses.size()) + " poses but " +
                        std::to_string(translations.size()) + " translations");
  }
  for (std::size_t t = 0; t < poses.size(); ++t) {
    if (!poses.empty() && poses[t].size() != poses[0].size()) {
      throw CountMismatch(who + ", " + frame_label(t) + ": joint count differs from frame 0");
    }
    for (const auto& aa : poses[t]) {
      if (!aa.allFinite()) throw NonFiniteValue(who + ", " + frame_label(t) + ": non-finite pose");
    }
    if (!translations[t].allFinite()) throw NonFiniteValue(who + ", " + frame_label(t) + ": non-finite translation");
  }
}

SmplSequence PersonAnnotation::to_smpl() const {
  validate();
  SmplSequence s;
  s.shape = shape;
  for (std::size_t t = 0; t < poses.size(); ++t) {
    s.poses.push_back(PoseParams::from_axis_angle(poses[t]));
    s.translations.push_back(Translation{translations[t]});
  }
  return s;
}

PersonAnnotation PersonAnnotation::from_smpl(int person_id, const SmplSequence& seq) {
  seq.validate();
  PersonAnnotation a;
  a.person_id = person_id;
  a.shape = seq.shape;
  for (std::size_t t = 0; t < seq.frame_count(); ++t) {
    a.poses.push_back(seq.poses[t].to_axis_angle());
    a.translations.push_back(seq.translations[t].value);
  }
  return a;
}

void write_annotation(const PersonAnnotation& a, const fs::path& file) {
  a.validate();
  json j;
  j["person_id"] = a.person_id;
  j["shape"] = json(std::vector<double>(a.shape.beta.begin(), a.shape.beta.end()));
  json frames = json::array();
  for (std::size_t t = 0; t < a.frame_count(); ++t) {
    json pose = json::array();
    for (const auto& aa : a.poses[t]) pose.push_back(to_json(aa));
    frames.push_back({{"pose", pose}, {"translation", to_json(a.translations[t])}});
  }
  j["frames"] = frames;
  write_text(file, j.dump(1) + "\n");
}

PersonAnnotation read_annotation(const fs::path& file) {
  const json j = parse_json(file);
  PersonAnnotation a;
  a.person_id = field<int>(j, "person_id", file);
  const std::string who = file.string() + ": person " + std::to_string(a.person_id);
  const json shape = field<json>(j, "shape", file);
  if (!shape.is_array() || shape.size() != kShapeCoefficients) {
    throw ValidationError(who + ": shape must hold " + std::to_string(kShapeCoefficients) + " numbers");
  }
  for (std::size_t b = 0; b < kShapeCoefficients; ++b) a.shape.beta[b] = number(shape[b], who + ", shape");
  const json frames = field<json>(j, "frames", file);
  if (!frames.is_array()) throw ValidationError(who + ": 'frames' must be an array");
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const std::string where = who + ", " + frame_label(t);
    const json& f = frames[t];
    if (!f.is_object() || !f.contains("pose") || !f.contains("translation")) {
      throw ValidationError(where + ": needs 'pose' and 'translation'");
    }
    if (!f["pose"].is_array()) throw ValidationError(where + ": 'pose' must be an array");
    std::vector<Vec3> pose;
    for (const auto& aa : f["pose"]) pose.push_back(vec3(aa, where + ", pose"));
    a.poses.push_back(std::move(pose));
    a.translations.push_back(vec3(f["translation"], where + ", translation"));
  }
  a.validate();
  return a;
}

// ---- point frames ----------------------------------------------------------

void write_point_frame(const PointCloud& pc, const fs::path& file) {
  pc.validate();
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  detail::write_le(out, static_cast<std::uint32_t>(pc.size()));
  for (const auto& p : pc.points) {
    for (int c = 0; c < 3; ++c) detail::write_le(out, static_cast<float>(p[c]));
  }
  if (!out) throw IoError("write failed for " + file.string());
}

PointCloud read_point_frame(const fs::path& file, const std::string& label) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw MissingFile(label + ": missing point file " + file.string());
  std::uint32_t count = 0;
  if (!detail::read_le(in, count)) throw CountMismatch(label + ": point file has no count header");
  const auto size = fs::file_size(file);
  const std::uint64_t want = 4 + 12ull * count;
  if (size != want) {
    throw CountMismatch(label + ": header says " + std::to_string(count) + " points but " + file.string() +
                        " holds " + std::to_string(size) + " bytes (expected " + std::to_string(want) + ")");
  }
  PointCloud pc;
  pc.points.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    float xyz[3];
    for (float& v : xyz) detail::read_le(in, v);
    if (!std::isfinite(xyz[0]) || !std::isfinite(xyz[1]) || !std::isfinite(xyz[2])) {
      throw NonFiniteValue(label + ": non-finite coordinate at point " + std::to_string(i));
    }
    pc.points[i] = Vec3(xyz[0], xyz[1], xyz[2]);
  }
  return pc;
}

// ---- sequences -------------------------------------------------------------

void write_sequence(const Sequence& seq, const fs::path& dir) {
  const SequenceManifest& m = seq.manifest;
  m.validate();
  if (seq.frames.size() != m.frame_count) {
    throw CountMismatch("write_sequence: manifest lists " + std::to_string(m.frame_count) + " frames, got " +
                        std::to_string(seq.frames.size()));
  }
  if (seq.annotations.size() != m.person_ids.size()) {
    throw CountMismatch("write_sequence: manifest lists " + std::to_string(m.person_ids.size()) +
                        " persons, got " + std::to_string(seq.annotations.size()) + " annotations");
  }
  for (std::size_t i = 0; i < seq.annotations.size(); ++i) {
    const auto& a = seq.annotations[i];
    if (a.person_id != m.person_ids[i]) {
      throw ValidationError("write_sequence: annotation " + std::to_string(i) + " is person " +
                            std::to_string(a.person_id) + ", manifest says " + std::to_string(m.person_ids[i]));
    }
    if (a.frame_count() != m.frame_count) {
      throw CountMismatch("write_sequence: person " + std::to_string(a.person_id) + " has " +
                          std::to_string(a.frame_count()) + " frames, sequence has " + std::to_string(m.frame_count));
    }
    a.validate();
  }
  if (m.sensor_file.empty() != !seq.sensor.has_value()) {
    throw ValidationError("write_sequence: sensor_file and sensor spec must be given together");
  }

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  const DirectoryLock lock(dir / ".hpskit.lock");

  for (std::size_t i = 0; i < m.frame_count; ++i) {
    const fs::path f = dir / m.frame_files[i];
    fs::create_directories(f.parent_path());
    write_point_frame(seq.frames[i], f);
  }
  for (std::size_t i = 0; i < seq.annotations.size(); ++i) {
    const fs::path f = dir / m.annotation_files[i];
    fs::create_directories(f.parent_path());
    write_annotation(seq.annotations[i], f);
  }
  if (seq.sensor) {
    seq.sensor->validate();
    write_text(dir / m.sensor_file, format_sensor_spec(*seq.sensor));
  }

  json j;
  j["format_version"] = m.format_version;
  j["sequence_id"] = m.sequence_id;
  j["frame_count"] = m.frame_count;
  j["frame_rate"] = m.frame_rate;
  j["timestamps"] = m.timestamps;
  j["person_ids"] = m.person_ids;
  j["frame_files"] = m.frame_files;
  j["annotation_files"] = m.annotation_files;
  j["sensor_file"] = m.sensor_file;
  j["coordinate_frame"] = m.coordinate_frame;
  write_text(dir / "manifest.json", j.dump(1) + "\n");
}

Sequence read_sequence(const fs::path& dir) {
  const fs::path mf = dir / "manifest.json";
  if (!fs::exists(mf)) throw MissingFile("not a sequence directory (missing " + mf.string() + ")");
  const json j = parse_json(mf);
  Sequence seq;
  SequenceManifest& m = seq.manifest;
  m.format_version = field<int>(j, "format_version", mf);
  m.sequence_id = field<std::string>(j, "sequence_id", mf);
  m.frame_count = field<std::size_t>(j, "frame_count", mf);
  m.frame_rate = field<double>(j, "frame_rate", mf);
  m.timestamps = field<std::vector<double>>(j, "timestamps", mf);
  m.person_ids = field<std::vector<int>>(j, "person_ids", mf);
  m.frame_files = field<std::vector<std::string>>(j, "frame_files", mf);
  m.annotation_files = field<std::vector<std::string>>(j, "annotation_files", mf);
  m.sensor_file = field<std::string>(j, "sensor_file", mf);
  m.coordinate_frame = field<std::string>(j, "coordinate_frame", mf);
  m.validate();

  seq.frames.resize(m.frame_count);
  for (std::size_t i = 0; i < m.frame_count; ++i) {
    seq.frames[i] = read_point_frame(dir / m.frame_files[i], m.sequence_id + " " + frame_label(i));
  }
  for (std::size_t i = 0; i < m.person_ids.size(); ++i) {
    const fs::path f = dir / m.annotation_files[i];
    PersonAnnotation a = read_annotation(f);
    if (a.person_id != m.person_ids[i]) {
      throw ValidationError(f.string() + ": person id " + std::to_string(a.person_id) + " but manifest says " +
                            std::to_string(m.person_ids[i]));
    }
    if (a.frame_count() != m.frame_count) {
      throw CountMismatch(f.string() + ": person " + std::to_string(a.person_id) + " has " +
                          std::to_string(a.frame_count()) + " frames, manifest has " + std::to_string(m.frame_count));
    }
    seq.annotations.push_back(std::move(a));
  }
  if (!m.sensor_file.empty()) {
    const fs::path f = dir / m.sensor_file;
    if (!fs::exists(f)) throw MissingFile("missing sensor spec " + f.string());
    try {
      seq.sensor = load_sensor_spec(f);
    } catch (const ConfigError& e) {
      throw ValidationError(e.what());
    }
  }
  return seq;
}

// ---- OBJ -------------------------------------------------------------------

std::vector<TriangleMesh> parse_obj(const std::string& text, const std::string& source) {
  std::vector<Vec3> verts;
  struct Object {
    std::string name;
    std::vector<std::array<std::size_t, 3>> faces;  // global vertex indices
  };
  std::vector<Object> objects;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) throw ParseError(source, lineno, "vertex needs 3 coordinates");
      if (!p.allFinite()) throw ParseError(source, lineno, "non-finite vertex");
      verts.push_back(p);
    } else if (tag == "o" || tag == "g") {
      std::string name;
      ls >> name;
      objects.push_back(Object{name.empty() ? "object" + std::to_string(objects.size()) : name, {}});
    } else if (tag == "f") {
      if (objects.empty()) objects.push_back(Object{"mesh", {}});
      std::vector<std::size_t> idx;
      std::string tok;
      while (ls >> tok) {
        const std::string head = tok.substr(0, tok.find('/'));
        long long v = 0;
        std::size_t used = 0;
        try {
          v = std::stoll(head, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used == 0 || used != head.size() || v == 0) throw ParseError(source, lineno, "malformed face index '" + tok + "'");
        const long long n = static_cast<long long>(verts.size());
        const long long abs = v > 0 ? v - 1 : n + v;
        if (abs < 0 || abs >= n) {
          throw ParseError(source, lineno, "face index " + std::to_string(v) + " out of range (" +
                                               std::to_string(n) + " vertices so far)");
        }
        idx.push_back(static_cast<std::size_t>(abs));
      }
      if (idx.size() < 3) throw ParseError(source, lineno, "face needs at least 3 vertices");
      for (std::size_t k = 1; k + 1 < idx.size(); ++k) objects.back().faces.push_back({idx[0], idx[k], idx[k + 1]});
    }
    // Other records (vt, vn, s, usemtl, mtllib, l) carry nothing we use.
  }

  std::vector<TriangleMesh> out;
  for (const auto& o : objects) {
    if (o.faces.empty()) continue;
    TriangleMesh m;
    m.name = o.name;
    m.role = o.name.rfind("body", 0) == 0 ? MeshRole::kBody : MeshRole::kScene;
    std::map<std::size_t, std::uint32_t> remap;
    for (const auto& f : o.faces) {
      std::array<std::uint32_t, 3> local{};
      for (int c = 0; c < 3; ++c) {
        auto [it, fresh] = remap.try_emplace(f[c], static_cast<std::uint32_t>(m.vertices.size()));
        if (fresh) m.vertices.push_back(verts[f[c]]);
        local[c] = it->second;
      }
      m.faces.push_back(local);
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<TriangleMesh> load_obj(const fs::path& file) { return parse_obj(read_text(file), file.string()); }

void save_obj(std::span<const TriangleMesh> meshes, const fs::path& file) {
  std::ostringstream s;
  s << std::setprecision(17);
  std::size_t base = 1;
  for (const auto& m : meshes) {
    s << "o " << m.name << '\n';
    for (const auto& v : m.vertices) s << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : m.faces) s << "f " << f[0] + base << ' ' << f[1] + base << ' ' << f[2] + base << '\n';
    base += m.vertices.size();
  }
  write_text(file, s.str());
}

std::vector<std::vector<TriangleMesh>> import_mesh_animation(const fs::path& path) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file() && e.path().extension() == ".obj") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw MissingFile("no .obj files in " + path.string());
  } else {
    if (!fs::exists(path)) throw MissingFile("missing mesh file " + path.string());
    files.push_back(path);
  }
  std::vector<std::vector<TriangleMesh>> frames;
  for (const auto& f : files) {
    auto meshes = load_obj(f);
    for (const auto& m : meshes) {
      try {
        m.validate();
      } catch (const InvalidArgument& e) {
        throw ValidationError(f.string() + ": mesh '" + m.name + "': " + e.what());
      }
    }
    if (!frames.empty()) {
      const auto& first = frames.front();
      bool same = first.size() == meshes.size();
      for (std::size_t i = 0; same && i < meshes.size(); ++i) {
        same = first[i].name == meshes[i].name && first[i].faces == meshes[i].faces &&
               first[i].vertices.size() == meshes[i].vertices.size();
      }
      if (!same) throw ValidationError(f.string() + ": topology differs from " + files.front().string());
    }
    frames.push_back(std::move(meshes));
  }
  return frames;
}

// ---- height traces ---------------------------------------------------------

HeightTrace load_height_trace(const fs::path& file) {
  const std::string text = read_text(file);
  HeightTrace t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  int columns = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ls(line);
    std::vector<double> vals;
    std::string tok;
    while (ls >> tok) {
      std::size_t used = 0;
      double v = 0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size() || used == 0) throw ParseError(file.string(), lineno, "not a number: '" + tok + "'");
      vals.push_back(v);
    }
    if (vals.empty()) continue;
    if (vals.size() > 2) throw ParseError(file.string(), lineno, "expected 'value' or 'timestamp value'");
    if (columns == 0) columns = static_cast<int>(vals.size());
    if (static_cast<int>(vals.size()) != columns) throw ParseError(file.string(), lineno, "inconsistent column count");
    if (!std::isfinite(vals.back())) throw ParseError(file.string(), lineno, "non-finite value");
    if (columns == 2) t.timestamps.push_back(vals[0]);
    t.values.push_back(vals.back());
  }
  try {
    t.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
  return t;
}

void save_height_trace(const HeightTrace& trace, const fs::path& file) {
  trace.validate();
  std::ostringstream s;
  s << std::setprecision(17);
  for (std::size_t i = 0; i < trace.values.size(); ++i) {
    if (!trace.timestamps.empty()) s << trace.timestamps[i] << ' ';
    s << trace.values[i] << '\n';
  }
  write_text(file, s.str());
}

HeightTrace height_trace_from_sequence(const Sequence& seq) {
  HeightTrace t;
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    if (seq.frames[i].empty()) {
      throw EmptyInput(seq.manifest.sequence_id + " " + frame_label(i) + ": no points for a height sample");
    }
    t.values.push_back(seq.frames[i].centroid().z());
  }
  t.timestamps = seq.manifest.timestamps;
  return t;
}

}  // namespace hpskit
