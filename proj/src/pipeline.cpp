#include "manip/pipeline.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>
#include <utility>

#include "manip/io.hpp"
#include "manip/model.hpp"
#include "object_json.hpp"

namespace manip {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - t0)
      .count();
}

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", i);
  return buf;
}

json config_to_json(const PipelineConfig& cfg, bool with_out_dir) {
  json j;
  j["object"] = cfg.object;
  if (with_out_dir) j["out_dir"] = cfg.out_dir.generic_string();
  j["seed"] = cfg.seed;
  j["n_scripts"] = cfg.n_scripts;
  j["minutes_each"] = cfg.minutes_each;
  j["noise_sigma"] = cfg.noise_sigma;
  j["train_parts"] = cfg.train_parts;
  j["test_parts"] = cfg.test_parts;
  j["cutoff_hz"] = cfg.cutoff_hz;
  j["max_gap_s"] = cfg.max_gap_s;
  j["position_offset"] = cfg.offsets.position_offset;
  j["orientation_offset"] = cfg.offsets.orientation_offset;
  j["n_primitives"] = cfg.n_primitives;
  j["max_iters"] = cfg.max_iters;
  j["rel_tol"] = cfg.rel_tol;
  j["init_scale"] = cfg.init_scale;
  j["lambda"] = cfg.lambda;
  j["v_max"] = cfg.v_max;
  j["tau"] = cfg.tau;
  j["d_min"] = cfg.d_min;
  j["workspace_margin"] = cfg.workspace_margin;
  j["surface_resolution"] = cfg.surface_resolution;
  return j;
}

/// Runs one pipeline stage, labels failures, and records the wall time.
class StageClock {
 public:
  explicit StageClock(std::vector<std::pair<std::string, double>>* out)
      : out_(out) {}

  template <typename F>
  auto run(const std::string& name, F&& f) -> decltype(f()) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        out_->emplace_back(name, ms_since(t0));
        return;
      } else {
        auto r = f();
        out_->emplace_back(name, ms_since(t0));
        return r;
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("pipeline stage '" + name + "': " + e.what());
    }
  }

 private:
  std::vector<std::pair<std::string, double>>* out_;
};

}  // namespace

void PipelineConfig::validate() const {
  object_shape_from_string(object);  // throws on junk
  if (out_dir.empty()) throw std::invalid_argument("out_dir must be set");
  if (n_scripts < 1) throw std::invalid_argument("n_scripts must be positive");
  if (!(minutes_each > 0.0))
    throw std::invalid_argument("minutes_each must be positive");
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("noise_sigma must be non-negative");
  if (train_parts < 1 || test_parts < 0)
    throw std::invalid_argument("bad train/test split");
  if (!(cutoff_hz > 0.0))
    throw std::invalid_argument("cutoff_hz must be positive");
  if (!(max_gap_s > 0.0))
    throw std::invalid_argument("max_gap_s must be positive");
  if (!(offsets.position_offset > 0.0) ||
      !(offsets.orientation_offset > 0.0))
    throw std::invalid_argument("offsets must be positive");
  if (n_primitives < 1)
    throw std::invalid_argument("n_primitives must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be positive");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be positive");
  if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  if (!(workspace_margin >= 0.0))
    throw std::invalid_argument("workspace_margin must be non-negative");
  if (!(surface_resolution > 0.0))
    throw std::invalid_argument("surface_resolution must be positive");
}

ObjectModel PipelineConfig::object_model() const {
  ObjectModel m = make_object(object_shape_from_string(object));
  m.surface_resolution = surface_resolution;
  return m;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError("failed to parse " + path.string() + ": " + e.what());
  }
  static const std::set<std::string> known = {
      "object",        "out_dir",       "seed",
      "n_scripts",     "minutes_each",  "noise_sigma",
      "train_parts",   "test_parts",    "cutoff_hz",
      "max_gap_s",     "position_offset", "orientation_offset",
      "n_primitives",  "max_iters",     "rel_tol",
      "init_scale",    "lambda",        "v_max",
      "tau",           "d_min",         "workspace_margin",
      "surface_resolution"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key))
      throw IoError("unknown config key '" + key + "' in " + path.string());
  }
  PipelineConfig cfg;
  cfg.object = j.value("object", cfg.object);
  if (j.contains("out_dir"))
    cfg.out_dir = j.at("out_dir").get<std::string>();
  cfg.seed = j.value("seed", cfg.seed);
  cfg.n_scripts = j.value("n_scripts", cfg.n_scripts);
  cfg.minutes_each = j.value("minutes_each", cfg.minutes_each);
  cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
  cfg.train_parts = j.value("train_parts", cfg.train_parts);
  cfg.test_parts = j.value("test_parts", cfg.test_parts);
  cfg.cutoff_hz = j.value("cutoff_hz", cfg.cutoff_hz);
  cfg.max_gap_s = j.value("max_gap_s", cfg.max_gap_s);
  cfg.offsets.position_offset =
      j.value("position_offset", cfg.offsets.position_offset);
  cfg.offsets.orientation_offset =
      j.value("orientation_offset", cfg.offsets.orientation_offset);
  cfg.n_primitives = j.value("n_primitives", cfg.n_primitives);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.rel_tol = j.value("rel_tol", cfg.rel_tol);
  cfg.init_scale = j.value("init_scale", cfg.init_scale);
  cfg.lambda = j.value("lambda", cfg.lambda);
  cfg.v_max = j.value("v_max", cfg.v_max);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.d_min = j.value("d_min", cfg.d_min);
  cfg.workspace_margin = j.value("workspace_margin", cfg.workspace_margin);
  cfg.surface_resolution =
      j.value("surface_resolution", cfg.surface_resolution);
  cfg.validate();
  return cfg;
}

void save_pipeline_config(const std::filesystem::path& path,
                          const PipelineConfig& cfg) {
  io::write_text_file(path, config_to_json(cfg, true).dump(2) + "\n");
}

std::vector<std::pair<GenerationRequest, RequestInfo>> build_request_set(
    const ObjectModel& object, std::uint64_t seed, double lambda,
    const VelocityBounds& bounds) {
  const auto local = base_contact_points(object, seed);
  const RigidPose base = base_object_pose();

  Frame initial;
  initial.object_position = base.position;
  initial.object_orientation.setZero();
  for (int f = 0; f < kNumFingers; ++f)
    initial.fingertips[static_cast<std::size_t>(f)] =
        local[static_cast<std::size_t>(f)] + base.position;

  std::vector<std::pair<GenerationRequest, RequestInfo>> out;
  const char* kinds[3] = {"rotate_x", "rotate_y", "translate_y"};
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < 7; ++i) {
      const double sign = i % 2 == 0 ? 1.0 : -1.0;
      GenerationRequest req;
      req.lambda = lambda;
      req.velocity_bounds = bounds;
      req.initial = initial;

      Frame fin;
      fin.object_position = base.position;
      fin.object_orientation.setZero();
      double magnitude = 0.0;
      if (g < 2) {
        const double deg = 15.0 + 5.0 * i / 6.0;
        magnitude = sign * deg * kPi / 180.0;
        fin.object_orientation(g) = magnitude;
      } else {
        magnitude = sign * (0.05 + 0.05 * i / 6.0);
        fin.object_position.y() += magnitude;
      }
      const Eigen::Matrix3d rot = rotation_from_euler(fin.object_orientation);
      for (int f = 0; f < kNumFingers; ++f)
        fin.fingertips[static_cast<std::size_t>(f)] =
            rot * local[static_cast<std::size_t>(f)] + fin.object_position;
      req.final = fin;
      out.emplace_back(std::move(req),
                       RequestInfo{kinds[g], magnitude});
    }
  }
  return out;
}

std::string format_mean_range(double mean, double lo, double hi) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%.3f [%g, %g]", mean, lo, hi);
  return buf;
}

std::string render_endpoint_table(const std::vector<MotionGroupSummary>& groups,
                                  const std::string& title) {
  std::string out = title + "\n";
  const char* axes = "xyz";
  for (const auto& g : groups) {
    out += "  " + g.label + " (" + std::to_string(g.count) + " requests)\n";
    for (int a = 0; a < 3; ++a) {
      char line[160];
      std::snprintf(line, sizeof(line), "    translation %c %-24s (mm)\n",
                    axes[a],
                    format_mean_range(g.mean_translation_mm(a),
                                      g.min_translation_mm(a),
                                      g.max_translation_mm(a))
                        .c_str());
      out += line;
    }
    for (int a = 0; a < 3; ++a) {
      char line[160];
      std::snprintf(line, sizeof(line), "    rotation    %c %-24s (deg)\n",
                    axes[a],
                    format_mean_range(g.mean_rotation_deg(a),
                                      g.min_rotation_deg(a),
                                      g.max_rotation_deg(a))
                        .c_str());
      out += line;
    }
  }
  return out;
}

ErrorTable evaluate_heldout(const Dictionary& d, const DemoMatrix& test,
                            double lambda, const VelocityBounds& bounds) {
  test.validate();
  if (test.n_steps != d.n_steps)
    throw DimensionMismatch("held-out segments do not match the dictionary");
  if (test.offsets.position_offset != d.offsets.position_offset ||
      test.offsets.orientation_offset != d.offsets.orientation_offset)
    throw DimensionMismatch("held-out offsets do not match the dictionary");

  EndpointSolver solver(make_endpoint_problem(d, bounds), lambda);
  const Eigen::Index fps = kFrameFeatures;
  Eigen::MatrixXd recon(test.v.rows(), test.v.cols());
  for (Eigen::Index c = 0; c < test.v.cols(); ++c) {
    const Eigen::VectorXd col = test.v.col(c);
    EndpointSolution sol = solver.solve(col.head(fps), col.tail(fps));
    recon.col(c) = d.w * sol.h;
  }
  return make_error_table(test.v, recon, test.n_steps);
}

BenchReport bench_generate(
    const Dictionary& d,
    const std::vector<std::pair<GenerationRequest, RequestInfo>>& requests) {
  if (requests.size() < 20)
    throw std::invalid_argument(
        "bench_generate needs at least 20 requests for stable statistics");
  TrajectoryGenerator gen(d, requests.front().first.lambda,
                          requests.front().first.velocity_bounds);
  // Warm-up: first factorization-path touch is not representative.
  gen.generate(requests.front().first.initial, requests.front().first.final);

  BenchReport rep;
  rep.times_ms.reserve(requests.size());
  for (const auto& [req, info] : requests) {
    const auto t0 = std::chrono::steady_clock::now();
    gen.generate(req.initial, req.final);
    rep.times_ms.push_back(ms_since(t0));
  }
  std::vector<double> sorted = rep.times_ms;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  rep.median_ms = n % 2 == 1 ? sorted[n / 2]
                             : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  rep.max_ms = sorted.back();
  rep.instance = "l=" + std::to_string(d.n_primitives) +
                 " N=" + std::to_string(d.n_steps) +
                 " requests=" + std::to_string(n);
  return rep;
}

void emit_plot_data(const ConstraintReport& report,
                    const std::filesystem::path& path, double dt) {
  if (report.contact_count.empty())
    throw std::invalid_argument("report carries no contact data");
  std::string out = "time_s,contact_count\n";
  for (std::size_t k = 0; k < report.contact_count.size(); ++k) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g,%d\n", static_cast<double>(k) * dt,
                  report.contact_count[k]);
    out += buf;
  }
  io::write_text_file(path, out);
}

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  const fs::path out = cfg.out_dir;
  fs::create_directories(out);
  fs::create_directories(out / "scripts");
  fs::create_directories(out / "demos");
  fs::create_directories(out / "requests");
  fs::create_directories(out / "trajectories");
  fs::create_directories(out / "reports");
  fs::create_directories(out / "plots");
  fs::create_directories(out / "tables");

  std::vector<std::string> files;  // manifest coverage, relative paths
  auto emit = [&](const fs::path& rel) { files.push_back(rel.generic_string()); };

  std::vector<std::pair<std::string, double>> stage_ms;
  StageClock clock(&stage_ms);
  PipelineResult result;
  result.out_dir = out;

  io::write_text_file(out / "config.json",
                      config_to_json(cfg, false).dump(2) + "\n");
  emit("config.json");

  const ObjectModel object = cfg.object_model();

  // --- synth ---------------------------------------------------------------
  Dataset dataset = clock.run("synth", [&] {
    auto scripts = random_scripts(object, cfg.n_scripts, cfg.minutes_each,
                                  cfg.seed);
    for (auto& s : scripts) s.noise_sigma = cfg.noise_sigma;
    for (std::size_t i = 0; i < scripts.size(); ++i) {
      const fs::path rel = fs::path("scripts") /
                           ("script_" + two_digits(static_cast<int>(i)) + ".json");
      save_script(out / rel, scripts[i]);
      emit(rel);
    }
    result.scripts = scripts;
    Dataset d = make_dataset(scripts, cfg.train_parts, cfg.test_parts,
                             cfg.seed);
    for (std::size_t k = 0; k < d.train.size(); ++k) {
      const int i = d.train_indices[k];
      const fs::path rel =
          fs::path("demos") / ("recording_" + two_digits(i) + ".csv");
      io::write_recording_csv(out / rel, d.train[k]);
      emit(rel);
    }
    for (std::size_t k = 0; k < d.test.size(); ++k) {
      const int i = d.test_indices[k];
      const fs::path rel =
          fs::path("demos") / ("recording_" + two_digits(i) + ".csv");
      io::write_recording_csv(out / rel, d.test[k]);
      emit(rel);
    }
    json js;
    js["format_version"] = 1;
    js["kind"] = "dataset";
    js["train"] = d.train_indices;
    js["test"] = d.test_indices;
    if (!d.warning.empty()) js["warning"] = d.warning;
    io::write_text_file(out / "dataset.json", js.dump(2) + "\n");
    emit("dataset.json");
    return d;
  });

  // --- preprocess ------------------------------------------------------------
  struct Preprocessed {
    std::vector<Recording> train;
    DemoMatrix v_train;
    DemoMatrix v_test;  // empty columns when the split has no test side
  };
  Preprocessed pre = clock.run("preprocess", [&] {
    auto process = [&](const std::vector<Recording>& recs,
                       const std::vector<int>& indices,
                       std::vector<Recording>* keep) {
      std::vector<DemoMatrix> parts;
      for (std::size_t k = 0; k < recs.size(); ++k) {
        Recording r = recs[k];
        if (r.has_gaps()) r = fill_gaps(r, cfg.max_gap_s);
        r = to_palm_frame(r);
        r = lowpass(r, cfg.cutoff_hz);
        parts.push_back(segment(
            r, cfg.offsets,
            "recording_" + two_digits(indices[k])));
        if (keep) keep->push_back(std::move(r));
      }
      return parts;
    };
    Preprocessed p;
    p.v_train = concat(process(dataset.train, dataset.train_indices, &p.train));
    if (!dataset.test.empty()) {
      p.v_test = concat(process(dataset.test, dataset.test_indices, nullptr));
    } else {
      p.v_test.offsets = cfg.offsets;
      p.v_test.v.resize(kFrameFeatures * kStepsPerSegment, 0);
    }
    return p;
  });

  result.workspace = clock.run("workspace", [&] {
    Workspace w = fit_workspace(pre.train, cfg.workspace_margin);
    save_workspace(out / "workspace.json", w);
    emit("workspace.json");
    return w;
  });

  // --- train -----------------------------------------------------------------
  result.dictionary = clock.run("train", [&] {
    NmfConfig nc;
    nc.n_primitives = cfg.n_primitives;
    nc.max_iters = cfg.max_iters;
    nc.rel_tol = cfg.rel_tol;
    nc.rng_seed = cfg.seed;
    nc.init_scale = cfg.init_scale;
    nc.object_label = cfg.object;
    NmfResult r = nmf_factorize(pre.v_train, nc);
    io::save_dictionary(out / "dictionary.json", r.dictionary);
    emit("dictionary.json");
    emit("dictionary.w.bin");
    return r.dictionary;
  });

  // --- generate ----------------------------------------------------------------
  std::vector<double> solve_ms;
  clock.run("generate", [&] {
    VelocityBounds bounds;
    bounds.v_max = cfg.v_max;
    auto requests = build_request_set(object, cfg.seed, cfg.lambda, bounds);
    json jreq = json::array();
    TrajectoryGenerator gen(result.dictionary, cfg.lambda, bounds);
    json jsolves = json::array();
    for (std::size_t i = 0; i < requests.size(); ++i) {
      const auto& [req, info] = requests[i];
      const std::string id = two_digits(static_cast<int>(i));
      const fs::path rel_i =
          fs::path("requests") / ("request_" + id + "_initial.csv");
      const fs::path rel_f =
          fs::path("requests") / ("request_" + id + "_final.csv");
      io::write_frame_csv(out / rel_i, req.initial);
      io::write_frame_csv(out / rel_f, req.final);
      emit(rel_i);
      emit(rel_f);
      jreq.push_back({{"kind", info.kind},
                      {"magnitude", info.magnitude},
                      {"lambda", req.lambda},
                      {"v_max", cfg.v_max},
                      {"initial", rel_i.generic_string()},
                      {"final", rel_f.generic_string()}});

      GenerationResult res = gen.generate(req.initial, req.final);
      solve_ms.push_back(res.solve_stats.wall_time_ms);
      const fs::path rel_t =
          fs::path("trajectories") / ("traj_" + id + ".csv");
      io::write_trajectory_csv(out / rel_t, res.trajectory);
      emit(rel_t);
      jsolves.push_back(
          {{"iterations", res.solve_stats.iterations},
           {"kkt_residual", res.solve_stats.kkt_residual},
           {"polished", res.solve_stats.polished},
           {"status", to_string(res.solve_stats.status)}});

      result.requests.push_back(req);
      result.request_info.push_back(info);
      result.generations.push_back(std::move(res));
    }
    io::write_text_file(out / "requests.json",
                        json{{"format_version", 1},
                             {"kind", "requests"},
                             {"requests", jreq}}
                                .dump(2) +
                            "\n");
    emit("requests.json");
    io::write_text_file(out / "solves.json",
                        json{{"format_version", 1},
                             {"kind", "solves"},
                             {"solves", jsolves}}
                                .dump(2) +
                            "\n");
    emit("solves.json");
  });

  // --- verify -------------------------------------------------------------------
  clock.run("verify", [&] {
    VerifyConfig vc;
    vc.tau = cfg.tau;
    vc.d_min = cfg.d_min;
    for (std::size_t i = 0; i < result.generations.size(); ++i) {
      const std::string id = two_digits(static_cast<int>(i));
      ConstraintReport rep = verify_trajectory(
          result.generations[i].trajectory, object, result.workspace, vc);
      const fs::path rel_r = fs::path("reports") / ("report_" + id + ".json");
      save_constraint_report(out / rel_r, rep);
      emit(rel_r);
      const fs::path rel_p = fs::path("plots") / ("contacts_" + id + ".csv");
      emit_plot_data(rep, out / rel_p,
                     result.generations[i].trajectory.dt);
      emit(rel_p);
      result.reports.push_back(std::move(rep));
    }
  });

  // --- evaluate -----------------------------------------------------------------
  clock.run("evaluate", [&] {
    EvaluationSummary& ev = result.evaluation;
    ev.heldout_columns = pre.v_test.n_segments();
    if (ev.heldout_columns > 0) {
      VelocityBounds bounds;
      bounds.v_max = cfg.v_max;
      ev.heldout = evaluate_heldout(result.dictionary, pre.v_test,
                                    cfg.lambda, bounds);
      double acc = 0.0;
      for (const auto& f : ev.heldout.finger_mm) acc += f.mean;
      ev.heldout_mean_finger_mm = acc / kNumFingers;
      io::write_text_file(
          out / "tables" / "reconstruction.txt",
          render_error_table(ev.heldout,
                             "Held-out reconstruction error, " + cfg.object +
                                 " (" + std::to_string(ev.heldout_columns) +
                                 " segments)"));
    } else {
      io::write_text_file(out / "tables" / "reconstruction.txt",
                          "Held-out reconstruction error, " + cfg.object +
                              ": no held-out segments\n");
    }
    emit(fs::path("tables") / "reconstruction.txt");

    // Endpoint accuracy by motion group.
    std::map<std::string, std::vector<PoseError>> by_kind;
    double trans_acc = 0.0, rot_acc = 0.0;
    for (std::size_t i = 0; i < result.generations.size(); ++i) {
      GenerationRequest req = result.requests[i];
      PoseError e = endpoint_error(result.generations[i], req);
      by_kind[result.request_info[i].kind].push_back(e);
      trans_acc += e.translation_mm.norm();
      rot_acc += e.rotation_deg.cwiseAbs().maxCoeff();
    }
    const double n_req =
        std::max<std::size_t>(result.generations.size(), 1);
    ev.mean_endpoint_translation_mm = trans_acc / n_req;
    ev.mean_endpoint_rotation_deg = rot_acc / n_req;
    for (const char* kind : {"rotate_x", "rotate_y", "translate_y"}) {
      auto it = by_kind.find(kind);
      if (it == by_kind.end()) continue;
      MotionGroupSummary g;
      g.label = kind;
      g.count = static_cast<int>(it->second.size());
      g.min_translation_mm.setConstant(1e300);
      g.max_translation_mm.setConstant(-1e300);
      g.min_rotation_deg.setConstant(1e300);
      g.max_rotation_deg.setConstant(-1e300);
      for (const PoseError& e : it->second) {
        g.mean_translation_mm += e.translation_mm;
        g.mean_rotation_deg += e.rotation_deg;
        g.min_translation_mm = g.min_translation_mm.cwiseMin(e.translation_mm);
        g.max_translation_mm = g.max_translation_mm.cwiseMax(e.translation_mm);
        g.min_rotation_deg = g.min_rotation_deg.cwiseMin(e.rotation_deg);
        g.max_rotation_deg = g.max_rotation_deg.cwiseMax(e.rotation_deg);
      }
      g.mean_translation_mm /= g.count;
      g.mean_rotation_deg /= g.count;
      ev.endpoint_groups.push_back(g);
    }
    io::write_text_file(
        out / "tables" / "endpoint.txt",
        render_endpoint_table(ev.endpoint_groups,
                              "Endpoint pose error (achieved - requested), " +
                                  cfg.object));
    emit(fs::path("tables") / "endpoint.txt");

    // Constraint statistics over the verified trajectories.
    long steps = 0, reach_ok = 0, contact_ok = 0;
    int collisions = 0, gaiting = 0;
    for (const auto& rep : result.reports) {
      for (int k = 0; k < rep.n_steps(); ++k) {
        const auto ku = static_cast<std::size_t>(k);
        ++steps;
        bool all = true;
        for (bool b : rep.reachability_ok[ku]) all = all && b;
        if (all) ++reach_ok;
        if (rep.contact_count[ku] >= rep.config.min_contacts) ++contact_ok;
        if (rep.min_pairwise_distance[ku] < rep.config.d_min) ++collisions;
      }
      if (rep.gaiting_detected) ++gaiting;
    }
    ev.reach_pass_fraction =
        steps > 0 ? static_cast<double>(reach_ok) / steps : 1.0;
    ev.contact_pass_fraction =
        steps > 0 ? static_cast<double>(contact_ok) / steps : 1.0;
    ev.collision_instants = collisions;
    ev.trajectories_with_gaiting = gaiting;

    double vmax_seen = 0.0;
    for (const auto& gr : result.generations) {
      const auto& frames = gr.trajectory.frames;
      for (std::size_t k = 1; k < frames.size(); ++k)
        for (int f = 0; f < kNumFingers; ++f)
          vmax_seen = std::max(
              vmax_seen,
              (frames[k].fingertips[static_cast<std::size_t>(f)] -
               frames[k - 1].fingertips[static_cast<std::size_t>(f)])
                      .cwiseAbs()
                      .maxCoeff() /
                  gr.trajectory.dt);
    }
    ev.max_fingertip_speed = vmax_seen;
    ev.velocity_ok = vmax_seen <= cfg.v_max + 1e-9;

    json je;
    je["format_version"] = 1;
    je["kind"] = "evaluation";
    je["heldout_columns"] = ev.heldout_columns;
    je["heldout_mean_finger_mm"] = ev.heldout_mean_finger_mm;
    je["mean_endpoint_translation_mm"] = ev.mean_endpoint_translation_mm;
    je["mean_endpoint_rotation_deg"] = ev.mean_endpoint_rotation_deg;
    je["reach_pass_fraction"] = ev.reach_pass_fraction;
    je["contact_pass_fraction"] = ev.contact_pass_fraction;
    je["collision_instants"] = ev.collision_instants;
    je["trajectories_with_gaiting"] = ev.trajectories_with_gaiting;
    je["max_fingertip_speed"] = ev.max_fingertip_speed;
    je["velocity_ok"] = ev.velocity_ok;
    io::write_text_file(out / "evaluation.json", je.dump(2) + "\n");
    emit("evaluation.json");
  });

  // --- timing + manifest ----------------------------------------------------
  {
    json jt;
    jt["format_version"] = 1;
    jt["kind"] = "timing";
    json stages = json::object();
    double total = 0.0;
    for (const auto& [name, ms] : stage_ms) {
      stages[name] = ms;
      total += ms;
    }
    jt["stages_ms"] = stages;
    jt["generate_solves_ms"] = solve_ms;
    jt["total_ms"] = total;
    io::write_text_file(out / "timing.json", jt.dump(2) + "\n");
    // timing.json is wall-clock noise; it stays out of the manifest so
    // reruns with one config hash identically.
  }
  std::vector<io::ManifestEntry> entries;
  entries.reserve(files.size());
  for (const auto& rel : files)
    entries.push_back({rel, io::hash_file(out / rel)});
  io::write_manifest(out / "manifest.json", entries);
  return result;
}

}  // namespace manip
