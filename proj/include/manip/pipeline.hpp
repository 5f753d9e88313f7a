#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "manip/nmf.hpp"
#include "manip/synth.hpp"
#include "manip/trajgen.hpp"
#include "manip/types.hpp"
#include "manip/verify.hpp"

namespace manip {

/// One declarative knob set for the whole pipeline; a config file carries
/// exactly these keys (unknown keys are rejected) and flags override fields.
struct PipelineConfig {
  std::string object = "cube";
  std::filesystem::path out_dir = "out";
  std::uint64_t seed = 0;

  int n_scripts = 6;
  double minutes_each = 6.0;
  double noise_sigma = 0.0005;
  int train_parts = 5;
  int test_parts = 1;

  double cutoff_hz = 20.0;
  double max_gap_s = 0.2;
  OffsetSpec offsets{};

  int n_primitives = 200;
  int max_iters = 500;
  double rel_tol = 1e-6;
  double init_scale = 0.0;  // <= 0 selects the data-driven default

  double lambda = 1.0;
  double v_max = 0.5;

  double tau = 0.01;
  double d_min = 0.005;
  double workspace_margin = 0.005;
  double surface_resolution = 0.002;

  void validate() const;
  ObjectModel object_model() const;
};

PipelineConfig load_pipeline_config(const std::filesystem::path& path);
void save_pipeline_config(const std::filesystem::path& path,
                          const PipelineConfig& cfg);

struct RequestInfo {
  std::string kind;  // rotate_x | rotate_y | translate_y
  double magnitude;  // radians or meters, signed
};

/// The scripted request set: 7 x-rotations, 7 y-rotations, 7 y-translations
/// with magnitudes spread over 15-20 degrees / 5-10 cm, alternating sign.
/// Fingertips move rigidly with the object from the canonical grasp.
std::vector<std::pair<GenerationRequest, RequestInfo>> build_request_set(
    const ObjectModel& object, std::uint64_t seed, double lambda,
    const VelocityBounds& bounds);

struct MotionGroupSummary {
  std::string label;
  int count = 0;
  Eigen::Vector3d mean_translation_mm{0, 0, 0};
  Eigen::Vector3d min_translation_mm{0, 0, 0};
  Eigen::Vector3d max_translation_mm{0, 0, 0};
  Eigen::Vector3d mean_rotation_deg{0, 0, 0};
  Eigen::Vector3d min_rotation_deg{0, 0, 0};
  Eigen::Vector3d max_rotation_deg{0, 0, 0};
};

/// "-3.183 [-9, -1]" style cell used by the endpoint table.
std::string format_mean_range(double mean, double lo, double hi);

std::string render_endpoint_table(const std::vector<MotionGroupSummary>& groups,
                                  const std::string& title);

struct EvaluationSummary {
  ErrorTable heldout;             // per-column endpoint-fit reconstruction
  double heldout_mean_finger_mm = 0.0;
  int heldout_columns = 0;

  std::vector<MotionGroupSummary> endpoint_groups;
  double mean_endpoint_translation_mm = 0.0;  // mean over requests, 2-norm
  double mean_endpoint_rotation_deg = 0.0;    // mean over requests, max axis

  double reach_pass_fraction = 0.0;    // steps with all fingers reachable
  double contact_pass_fraction = 0.0;  // steps with >= min_contacts
  int collision_instants = 0;          // flagged steps, all trajectories
  int trajectories_with_gaiting = 0;
  double max_fingertip_speed = 0.0;    // over generated trajectories, m/s
  bool velocity_ok = true;             // <= v_max + 1e-9 everywhere
};

struct PipelineResult {
  std::filesystem::path out_dir;
  std::vector<ManipulationScript> scripts;
  Dictionary dictionary;
  Workspace workspace;
  std::vector<GenerationRequest> requests;
  std::vector<RequestInfo> request_info;
  std::vector<GenerationResult> generations;
  std::vector<ConstraintReport> reports;
  EvaluationSummary evaluation;
};

/// synth -> preprocess -> train -> generate -> verify -> evaluate, with all
/// artifacts under cfg.out_dir and a hash manifest over everything except
/// wall-clock timing.
PipelineResult run_pipeline(const PipelineConfig& cfg);

/// Held-out reconstruction by endpoint fit: solve h per column of `test`
/// (both endpoints taken from the column), then tabulate errors.
ErrorTable evaluate_heldout(const Dictionary& d, const DemoMatrix& test,
                            double lambda, const VelocityBounds& bounds);

struct BenchReport {
  std::vector<double> times_ms;
  double median_ms = 0.0;
  double max_ms = 0.0;
  std::string instance;
};

/// Times generate() per request on one warm generator; the first (warm-up)
/// call is excluded. Needs >= 20 requests for stable numbers.
BenchReport bench_generate(
    const Dictionary& d,
    const std::vector<std::pair<GenerationRequest, RequestInfo>>& requests);

/// Two-column (time_s, contact_count) file for plotting.
void emit_plot_data(const ConstraintReport& report,
                    const std::filesystem::path& path, double dt = kDefaultDt);

}  // namespace manip
