#pragma once

#include "hpskit/body_model.hpp"
#include "hpskit/geometry.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hpskit {

/// Per-sequence SMPL parameters: a pose and translation per frame and one
/// shape.
struct SmplSequence {
  std::vector<PoseParams> poses;
  ShapeParams shape;
  std::vector<Translation> translations;

  std::size_t frame_count() const { return poses.size(); }

  /// Throws InvalidArgument when the per-frame fields disagree in length.
  void validate() const;
};

enum class Reduction { kSum, kMean };

/// Sum over frames of the squared L2 distance over all coordinates. kMean
/// divides by the frame count.
double mse_joint_loss(std::span<const std::vector<Vec3>> pred, std::span<const std::vector<Vec3>> gt,
                      Reduction reduction = Reduction::kSum);
double mse_vertex_loss(std::span<const std::vector<Vec3>> pred, std::span<const std::vector<Vec3>> gt,
                       Reduction reduction = Reduction::kSum);

inline constexpr double kFeatureSmoothing = 1e-12;

/// KL(fv || fp) after adding 1e-12 to every entry and normalizing each
/// vector to sum 1. Entries must be finite and non-negative.
double consistency_loss(std::span<const double> fv, std::span<const double> fp);

struct LossWeights {
  double lambda1 = 1.0;
  double lambda2 = 1e3;
  double lambda3 = 100.0 / static_cast<double>(kSmplJoints);
  double lambda4 = 100.0 / static_cast<double>(kSmplVertices);
  double lambda5 = 0.2;
  double lambda6 = 1.0;
  double lambda7 = 1.0;
  double lambda8 = 1e3;

  /// Defaults with lambda3 and lambda4 scaled to the given model size.
  static LossWeights for_model(std::size_t joints, std::size_t vertices);

  /// Throws InvalidArgument on a negative or non-finite weight.
  void validate() const;
};

double prior_loss(double joint_loss, double consistency, const LossWeights& w);

struct SolverTerms {
  double joints = 0.0;
  double vertices = 0.0;
  double pose = 0.0;
  double shape = 0.0;
  double translation = 0.0;
  double sucd = 0.0;
};

double solver_loss(const SolverTerms& terms, const LossWeights& w);

/// P swaps in the ground-truth shape and translation, PS the translation
/// only, PST keeps every predicted parameter.
enum class JvMode { kP, kPS, kPST };

const char* to_string(JvMode mode);

struct JvError {
  JvMode mode = JvMode::kPST;
  double joint_mm = 0.0;
  double vertex_mm = 0.0;
  std::vector<double> frame_joint_mm;
  std::vector<double> frame_vertex_mm;
};

/// Mean per-joint and per-vertex Euclidean error in millimeters. P and PS
/// compare root-relative outputs.
JvError jv_error(const SmplSequence& pred, const SmplSequence& gt, const BodyModel& model, JvMode mode);

/// Mean geodesic angle over frames and joints between global joint
/// rotations, degrees. The root joint is included.
double angle_error(std::span<const PoseParams> pred, std::span<const PoseParams> gt, const BodyModel& model);

struct SucdResult {
  /// Sum over used frames of the mean squared nearest-vertex distance, m^2.
  double sum = 0.0;
  double frame_mean = 0.0;
  /// sqrt(frame_mean) in millimeters.
  double rms_mm = 0.0;
  std::size_t frames_used = 0;
  std::size_t frames_skipped = 0;
  std::vector<double> per_frame;  // NaN for skipped frames
};

/// Empty point frames are skipped and counted; empty vertex sets are an
/// error.
SucdResult sucd(std::span<const PointCloud> frames, std::span<const std::vector<Vec3>> pred_vertices);

struct EvaluationReport {
  std::string sequence_id;
  std::size_t frame_count = 0;
  JvError p, ps, pst;
  double angle_deg = 0.0;
  std::optional<SucdResult> sucd;
};

/// All metrics for one sequence. SUCD needs the observed frames and is
/// left empty without them.
EvaluationReport evaluate_sequence(const SmplSequence& pred, const SmplSequence& gt, const BodyModel& model,
                                   std::span<const PointCloud> frames = {});

}  // namespace hpskit
