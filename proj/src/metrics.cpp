#include "hpskit/metrics.hpp"

#include "hpskit/errors.hpp"
#include "hpskit/parallel.hpp"

#include <cmath>
#include <limits>

namespace hpskit {

void SmplSequence::validate() const {
  if (translations.size() != poses.size()) {
    throw InvalidArgument("sequence has " + std::to_string(poses.size()) + " poses but " +
                          std::to_string(translations.size()) + " translations");
  }
}

namespace {

double squared_error_sum(std::span<const std::vector<Vec3>> pred, std::span<const std::vector<Vec3>> gt,
                         Reduction reduction, const char* what) {
  if (pred.size() != gt.size()) throw InvalidArgument(std::string(what) + ": frame count mismatch");
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].size() != gt[t].size()) {
      throw InvalidArgument(std::string(what) + ": size mismatch at frame " + std::to_string(t));
    }
    for (std::size_t i = 0; i < pred[t].size(); ++i) total += (pred[t][i] - gt[t][i]).squaredNorm();
  }
  if (reduction == Reduction::kMean && !pred.empty()) total /= static_cast<double>(pred.size());
  return total;
}

}  // namespace

double mse_joint_loss(std::span<const std::vector<Vec3>> pred, std::span<const std::vector<Vec3>> gt,
                      Reduction reduction) {
  return squared_error_sum(pred, gt, reduction, "mse_joint_loss");
}

double mse_vertex_loss(std::span<const std::vector<Vec3>> pred, std::span<const std::vector<Vec3>> gt,
                       Reduction reduction) {
  return squared_error_sum(pred, gt, reduction, "mse_vertex_loss");
}

double consistency_loss(std::span<const double> fv, std::span<const double> fp) {
  if (fv.size() != fp.size()) throw InvalidArgument("consistency_loss: length mismatch");
  if (fv.empty()) throw EmptyInput("consistency_loss: empty feature vectors");
  double sv = 0.0, sp = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    if (!std::isfinite(fv[i]) || !std::isfinite(fp[i]) || fv[i] < 0.0 || fp[i] < 0.0) {
      throw InvalidArgument("consistency_loss: features must be finite and non-negative");
    }
    sv += fv[i] + kFeatureSmoothing;
    sp += fp[i] + kFeatureSmoothing;
  }
  double kl = 0.0;
  for (std::size_t i = 0; i < fv.size(); ++i) {
    const double a = (fv[i] + kFeatureSmoothing) / sv;
    const double b = (fp[i] + kFeatureSmoothing) / sp;
    kl += a * std::log(a / b);
  }
  // Rounding can leave a tiny negative value for identical inputs.
  return std::max(kl, 0.0);
}

LossWeights LossWeights::for_model(std::size_t joints, std::size_t vertices) {
  if (joints == 0 || vertices == 0) throw InvalidArgument("LossWeights: empty model");
  LossWeights w;
  w.lambda3 = 100.0 / static_cast<double>(joints);
  w.lambda4 = 100.0 / static_cast<double>(vertices);
  return w;
}

void LossWeights::validate() const {
  const double all[] = {lambda1, lambda2, lambda3, lambda4, lambda5, lambda6, lambda7, lambda8};
  for (std::size_t i = 0; i < 8; ++i) {
    if (!std::isfinite(all[i]) || all[i] < 0.0) {
      throw InvalidArgument("loss weight lambda" + std::to_string(i + 1) + " must be finite and >= 0");
    }
  }
}

double prior_loss(double joint_loss, double consistency, const LossWeights& w) {
  return w.lambda1 * joint_loss + w.lambda2 * consistency;
}

double solver_loss(const SolverTerms& t, const LossWeights& w) {
  return w.lambda3 * t.joints + w.lambda4 * t.vertices + w.lambda5 * t.pose + w.lambda6 * t.shape +
         w.lambda7 * t.translation + w.lambda8 * t.sucd;
}

const char* to_string(JvMode mode) {
  switch (mode) {
    case JvMode::kP: return "P";
    case JvMode::kPS: return "PS";
    case JvMode::kPST: return "PST";
  }
  return "?";
}

namespace {

void check_pair(const SmplSequence& pred, const SmplSequence& gt, const BodyModel& model) {
  pred.validate();
  gt.validate();
  if (pred.frame_count() != gt.frame_count()) {
    throw InvalidArgument("prediction has " + std::to_string(pred.frame_count()) + " frames, ground truth " +
                          std::to_string(gt.frame_count()));
  }
  for (std::size_t t = 0; t < pred.frame_count(); ++t) {
    if (pred.poses[t].size() != model.joint_count() || gt.poses[t].size() != model.joint_count()) {
      throw InvalidArgument("pose joint count differs from the model at frame " + std::to_string(t));
    }
  }
}

void root_align(BodyOutput& o) {
  const Vec3 root = o.joints[0];
  for (auto& j : o.joints) j -= root;
  for (auto& v : o.vertices) v -= root;
}

double mean_distance(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  if (a.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]).norm();
  return s / static_cast<double>(a.size());
}

}  // namespace

JvError jv_error(const SmplSequence& pred, const SmplSequence& gt, const BodyModel& model, JvMode mode) {
  check_pair(pred, gt, model);
  const std::size_t frames = pred.frame_count();
  JvError out;
  out.mode = mode;
  out.frame_joint_mm.resize(frames);
  out.frame_vertex_mm.resize(frames);
  parallel_for(frames, [&](std::size_t t) {
    const ShapeParams& shape = mode == JvMode::kP ? gt.shape : pred.shape;
    const Translation& tr = mode == JvMode::kPST ? pred.translations[t] : gt.translations[t];
    BodyOutput a = forward(model, pred.poses[t], shape, tr);
    BodyOutput b = forward(model, gt.poses[t], gt.shape, gt.translations[t]);
    if (mode != JvMode::kPST) {
      root_align(a);
      root_align(b);
    }
    out.frame_joint_mm[t] = 1000.0 * mean_distance(a.joints, b.joints);
    out.frame_vertex_mm[t] = 1000.0 * mean_distance(a.vertices, b.vertices);
  });
  for (std::size_t t = 0; t < frames; ++t) {
    out.joint_mm += out.frame_joint_mm[t];
    out.vertex_mm += out.frame_vertex_mm[t];
  }
  if (frames > 0) {
    out.joint_mm /= static_cast<double>(frames);
    out.vertex_mm /= static_cast<double>(frames);
  }
  return out;
}

double angle_error(std::span<const PoseParams> pred, std::span<const PoseParams> gt, const BodyModel& model) {
  if (pred.size() != gt.size()) throw InvalidArgument("angle_error: frame count mismatch");
  if (pred.empty()) return 0.0;
  std::vector<double> per(pred.size());
  parallel_for(pred.size(), [&](std::size_t t) {
    const auto a = global_joint_rotations(model, pred[t]);
    const auto b = global_joint_rotations(model, gt[t]);
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) s += geodesic_angle_deg(a[j], b[j]);
    per[t] = s;
  });
  double total = 0.0;
  for (double v : per) total += v;
  return total / static_cast<double>(pred.size() * model.joint_count());
}

SucdResult sucd(std::span<const PointCloud> frames, std::span<const std::vector<Vec3>> pred_vertices) {
  if (frames.size() != pred_vertices.size()) {
    throw InvalidArgument("sucd: " + std::to_string(frames.size()) + " point frames but " +
                          std::to_string(pred_vertices.size()) + " vertex frames");
  }
  SucdResult r;
  r.per_frame.assign(frames.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (pred_vertices[t].empty()) throw InvalidArgument("sucd: no predicted vertices at frame " + std::to_string(t));
  }
  parallel_for(frames.size(), [&](std::size_t t) {
    if (!frames[t].empty()) r.per_frame[t] = unidirectional_chamfer(frames[t].points, pred_vertices[t]);
  });
  for (std::size_t t = 0; t < frames.size(); ++t) {
    if (frames[t].empty()) {
      ++r.frames_skipped;
      continue;
    }
    ++r.frames_used;
    r.sum += r.per_frame[t];
  }
  if (r.frames_used > 0) {
    r.frame_mean = r.sum / static_cast<double>(r.frames_used);
    r.rms_mm = 1000.0 * std::sqrt(r.frame_mean);
  }
  return r;
}

EvaluationReport evaluate_sequence(const SmplSequence& pred, const SmplSequence& gt, const BodyModel& model,
                                   std::span<const PointCloud> frames) {
  EvaluationReport rep;
  rep.frame_count = pred.frame_count();
  rep.p = jv_error(pred, gt, model, JvMode::kP);
  rep.ps = jv_error(pred, gt, model, JvMode::kPS);
  rep.pst = jv_error(pred, gt, model, JvMode::kPST);
  rep.angle_deg = angle_error(pred.poses, gt.poses, model);
  if (!frames.empty()) {
    std::vector<std::vector<Vec3>> verts(pred.frame_count());
    parallel_for(verts.size(), [&](std::size_t t) {
      verts[t] = forward(model, pred.poses[t], pred.shape, pred.translations[t]).vertices;
    });
    rep.sucd = sucd(frames, verts);
  }
  return rep;
}

}  // namespace hpskit
