#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "manip/io.hpp"
#include "manip/nmf.hpp"
#include "manip/pipeline.hpp"
#include "manip/preprocess.hpp"
#include "manip/synth.hpp"
#include "manip/trajgen.hpp"
#include "manip/types.hpp"
#include "manip/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Exit codes: 0 success, 1 usage/error, 2 constraint violations found,
// 3 solver hit the velocity bounds (best-feasible result written anyway).
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitViolations = 2;
constexpr int kExitClipped = 3;

std::string two_digits(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02d", i);
  return buf;
}

int cmd_synth(const std::string& object, double minutes, std::uint64_t seed,
              double noise, const fs::path& out) {
  const manip::ObjectModel model =
      manip::make_object(manip::object_shape_from_string(object));
  const int n_scripts =
      std::max(1, static_cast<int>(std::ceil(minutes / 6.0)));
  const double minutes_each = minutes / n_scripts;
  auto scripts = manip::random_scripts(model, n_scripts, minutes_each, seed);
  fs::create_directories(out);
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    scripts[i].noise_sigma = noise;
    const std::string id = two_digits(static_cast<int>(i));
    manip::save_script(out / ("script_" + id + ".json"), scripts[i]);
    manip::io::write_recording_csv(out / ("recording_" + id + ".csv"),
                                   manip::synthesize(scripts[i]));
  }
  std::cout << "wrote " << scripts.size() << " recordings ("
            << minutes_each << " min each) to " << out.string() << "\n";
  return kExitOk;
}

int cmd_preprocess(const fs::path& in, const fs::path& out, double cutoff,
                   double max_gap, double pos_offset, double orient_offset) {
  std::vector<fs::path> inputs;
  for (const auto& e : fs::directory_iterator(in))
    if (e.is_regular_file() && e.path().extension() == ".csv")
      inputs.push_back(e.path());
  std::sort(inputs.begin(), inputs.end());
  if (inputs.empty())
    throw manip::IoError("no recording CSVs in " + in.string());

  manip::OffsetSpec offsets{pos_offset, orient_offset};
  std::vector<manip::DemoMatrix> parts;
  for (const auto& path : inputs) {
    const manip::Recording raw = manip::io::read_recording_csv(path);
    std::vector<manip::Recording> pieces =
        raw.has_gaps() ? manip::split_at_long_gaps(raw, max_gap)
                       : std::vector<manip::Recording>{raw};
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      manip::Recording r = pieces[i];
      if (r.has_gaps()) r = manip::fill_gaps(r, max_gap);
      r = manip::to_palm_frame(r);
      r = manip::lowpass(r, cutoff);
      std::string name = path.stem().string();
      if (pieces.size() > 1) name += "#" + std::to_string(i);
      parts.push_back(manip::segment(r, offsets, name));
    }
  }
  const manip::DemoMatrix demos = manip::concat(parts);
  manip::io::save_demo_matrix(out, demos);
  std::cout << "wrote " << demos.n_segments() << " segments ("
            << demos.v.rows() << " rows) to " << out.string() << "\n";
  return kExitOk;
}

int cmd_train(const fs::path& demos_path, const fs::path& out, int primitives,
              int max_iters, double rel_tol, std::uint64_t seed,
              double init_scale, const std::string& label) {
  const manip::DemoMatrix demos = manip::io::load_demo_matrix(demos_path);
  manip::NmfConfig cfg;
  cfg.n_primitives = primitives;
  cfg.max_iters = max_iters;
  cfg.rel_tol = rel_tol;
  cfg.rng_seed = seed;
  cfg.init_scale = init_scale;
  cfg.object_label = label;
  const manip::NmfResult res = manip::nmf_factorize(demos, cfg);
  manip::io::save_dictionary(out, res.dictionary);
  std::cout << "factorized " << demos.n_segments() << " segments into "
            << primitives << " primitives in "
            << res.dictionary.provenance.iterations
            << " iterations (residual "
            << res.dictionary.provenance.final_residual << ")\n"
            << manip::render_error_table(
                   manip::reconstruction_report(res, demos),
                   "Training reconstruction error");
  return kExitOk;
}

int cmd_generate(const fs::path& dict_path, const fs::path& initial_path,
                 const fs::path& final_path, double lambda, double vmax,
                 const fs::path& out, fs::path stats_path) {
  const manip::Dictionary dict = manip::io::load_dictionary(dict_path);
  manip::GenerationRequest req;
  req.initial = manip::io::read_frame_csv(initial_path);
  req.final = manip::io::read_frame_csv(final_path);
  req.lambda = lambda;
  req.velocity_bounds.v_max = vmax;
  const manip::GenerationResult res = manip::generate(dict, req);
  manip::io::write_trajectory_csv(out, res.trajectory);

  if (stats_path.empty()) {
    stats_path = out;
    stats_path.replace_extension(".stats.json");
  }
  json js;
  js["iterations"] = res.solve_stats.iterations;
  js["kkt_residual"] = res.solve_stats.kkt_residual;
  js["wall_time_ms"] = res.solve_stats.wall_time_ms;
  js["polished"] = res.solve_stats.polished;
  js["status"] = manip::to_string(res.solve_stats.status);
  js["initial_residual_norm"] = res.initial_residual.norm();
  js["final_residual_norm"] = res.final_residual.norm();
  manip::io::write_text_file(stats_path, js.dump(2) + "\n");

  const manip::PoseError err = manip::endpoint_error(res, req);
  std::cout << "status " << manip::to_string(res.solve_stats.status)
            << ", endpoint error " << err.translation_mm.norm() << " mm / "
            << err.rotation_deg.cwiseAbs().maxCoeff() << " deg, wrote "
            << out.string() << "\n";
  return res.solve_stats.status == manip::SolveStatus::velocity_clipped
             ? kExitClipped
             : kExitOk;
}

int cmd_verify(const fs::path& traj_path, const std::string& object,
               double tau, double dmin, double resolution,
               const fs::path& workspace_path, const fs::path& out,
               const fs::path& plot) {
  const manip::Trajectory traj = manip::io::read_trajectory_csv(traj_path);
  manip::ObjectModel model =
      manip::make_object(manip::object_shape_from_string(object));
  model.surface_resolution = resolution;
  const manip::Workspace ws = manip::load_workspace(workspace_path);
  manip::VerifyConfig cfg;
  cfg.tau = tau;
  cfg.d_min = dmin;
  const manip::ConstraintReport rep =
      manip::verify_trajectory(traj, model, ws, cfg);
  if (!out.empty()) manip::save_constraint_report(out, rep);
  if (!plot.empty()) manip::emit_plot_data(rep, plot, traj.dt);
  std::cout << rep.violations.size() << " violations over " << rep.n_steps()
            << " steps; gaiting "
            << (rep.gaiting_detected ? "detected" : "not detected") << " ("
            << rep.transitions.size() << " transitions)\n";
  return rep.ok() ? kExitOk : kExitViolations;
}

int cmd_evaluate(const fs::path& dict_path, const fs::path& demos_path,
                 double lambda, double vmax, const fs::path& out) {
  const manip::Dictionary dict = manip::io::load_dictionary(dict_path);
  const manip::DemoMatrix demos = manip::io::load_demo_matrix(demos_path);
  manip::VelocityBounds bounds;
  bounds.v_max = vmax;
  const manip::ErrorTable table =
      manip::evaluate_heldout(dict, demos, lambda, bounds);
  const std::string rendered = manip::render_error_table(
      table, "Held-out reconstruction error (" +
                 std::to_string(demos.n_segments()) + " segments)");
  std::cout << rendered;
  if (!out.empty()) manip::io::write_text_file(out, rendered);
  return kExitOk;
}

int cmd_bench(const fs::path& dict_path, const std::string& object,
              std::uint64_t seed, double lambda, double vmax,
              const fs::path& out) {
  const manip::Dictionary dict = manip::io::load_dictionary(dict_path);
  manip::ObjectModel model =
      manip::make_object(manip::object_shape_from_string(object));
  manip::VelocityBounds bounds;
  bounds.v_max = vmax;
  const auto requests = manip::build_request_set(model, seed, lambda, bounds);
  const manip::BenchReport rep = manip::bench_generate(dict, requests);
  std::cout << rep.instance << ": median " << rep.median_ms << " ms, max "
            << rep.max_ms << " ms\n";
  if (!out.empty()) {
    json js;
    js["instance"] = rep.instance;
    js["median_ms"] = rep.median_ms;
    js["max_ms"] = rep.max_ms;
    js["times_ms"] = rep.times_ms;
    manip::io::write_text_file(out, js.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_pipeline(const manip::PipelineConfig& cfg) {
  const manip::PipelineResult res = manip::run_pipeline(cfg);
  const auto& ev = res.evaluation;
  std::cout << "pipeline finished in " << res.out_dir.string() << "\n"
            << "  held-out mean fingertip error: "
            << ev.heldout_mean_finger_mm << " mm (" << ev.heldout_columns
            << " segments)\n"
            << "  endpoint error: " << ev.mean_endpoint_translation_mm
            << " mm / " << ev.mean_endpoint_rotation_deg << " deg\n"
            << "  reachability pass: " << 100.0 * ev.reach_pass_fraction
            << "%, contact pass: " << 100.0 * ev.contact_pass_fraction
            << "%, collision instants: " << ev.collision_instants << "\n"
            << "  gaiting in " << ev.trajectories_with_gaiting << "/"
            << res.reports.size() << " trajectories, max fingertip speed "
            << ev.max_fingertip_speed << " m/s\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"manipulation-primitive dictionary toolkit"};
  app.require_subcommand(1);
  int rc = kExitOk;

  // synth
  auto* synth = app.add_subcommand(
      "synth", "render scripted demonstration recordings");
  std::string sy_object = "cube";
  double sy_minutes = 30.0, sy_noise = 0.0005;
  std::uint64_t sy_seed = 0;
  fs::path sy_out;
  synth->add_option("--object", sy_object, "cube or cylinder");
  synth->add_option("--minutes", sy_minutes, "total minutes to render");
  synth->add_option("--seed", sy_seed, "RNG seed");
  synth->add_option("--noise", sy_noise, "fingertip noise sigma (m)");
  synth->add_option("--out", sy_out, "output directory")->required();
  synth->callback([&] {
    rc = cmd_synth(sy_object, sy_minutes, sy_seed, sy_noise, sy_out);
  });

  // preprocess
  auto* prep = app.add_subcommand(
      "preprocess", "gap-fill, re-frame, filter and segment recordings");
  fs::path pp_in, pp_out;
  double pp_cutoff = 20.0, pp_gap = 0.2, pp_pos = 0.8,
         pp_orient = 2.0 * std::numbers::pi;
  prep->add_option("--in", pp_in, "directory of recording CSVs")->required();
  prep->add_option("--out", pp_out, "demo matrix JSON path")->required();
  prep->add_option("--cutoff", pp_cutoff, "low-pass cutoff (Hz)");
  prep->add_option("--max-gap", pp_gap, "longest interpolable gap (s)");
  prep->add_option("--pos-offset", pp_pos, "position offset (m)");
  prep->add_option("--orient-offset", pp_orient, "orientation offset (rad)");
  prep->callback([&] {
    rc = cmd_preprocess(pp_in, pp_out, pp_cutoff, pp_gap, pp_pos, pp_orient);
  });

  // train
  auto* train = app.add_subcommand("train", "factorize demos into a dictionary");
  fs::path tr_demos, tr_out;
  int tr_l = 200, tr_iters = 500;
  double tr_tol = 1e-6, tr_scale = 0.0;
  std::uint64_t tr_seed = 0;
  std::string tr_label = "unlabeled";
  train->add_option("--demos", tr_demos, "demo matrix JSON")->required();
  train->add_option("--out", tr_out, "dictionary JSON path")->required();
  train->add_option("--primitives", tr_l, "dictionary size l");
  train->add_option("--max-iters", tr_iters, "update iterations");
  train->add_option("--rel-tol", tr_tol, "relative objective tolerance");
  train->add_option("--seed", tr_seed, "RNG seed");
  train->add_option("--init-scale", tr_scale, "init scale (<=0: automatic)");
  train->add_option("--label", tr_label, "object label for provenance");
  train->callback([&] {
    rc = cmd_train(tr_demos, tr_out, tr_l, tr_iters, tr_tol, tr_seed,
                   tr_scale, tr_label);
  });

  // generate
  auto* gen = app.add_subcommand(
      "generate", "solve for activations reaching a requested endpoint");
  fs::path g_dict, g_init, g_final, g_out, g_stats;
  double g_lambda = 1.0, g_vmax = 0.5;
  gen->add_option("--dict", g_dict, "dictionary JSON")->required();
  gen->add_option("--initial", g_init, "initial frame CSV")->required();
  gen->add_option("--final", g_final, "final frame CSV")->required();
  gen->add_option("--lambda", g_lambda, "final-endpoint weight");
  gen->add_option("--vmax", g_vmax, "fingertip speed limit (m/s)");
  gen->add_option("--out", g_out, "trajectory CSV path")->required();
  gen->add_option("--stats", g_stats, "solve-stats JSON path");
  gen->callback([&] {
    rc = cmd_generate(g_dict, g_init, g_final, g_lambda, g_vmax, g_out,
                      g_stats);
  });

  // verify
  auto* ver = app.add_subcommand(
      "verify", "check a trajectory against manipulation constraints");
  fs::path v_traj, v_ws, v_out, v_plot;
  std::string v_object = "cube";
  double v_tau = 0.01, v_dmin = 0.005, v_res = 0.002;
  ver->add_option("--traj", v_traj, "trajectory CSV")->required();
  ver->add_option("--object", v_object, "cube or cylinder");
  ver->add_option("--tau", v_tau, "contact distance threshold (m)");
  ver->add_option("--dmin", v_dmin, "fingertip clearance (m)");
  ver->add_option("--resolution", v_res, "surface sampling step (m)");
  ver->add_option("--workspace", v_ws, "workspace JSON")->required();
  ver->add_option("--out", v_out, "report JSON path");
  ver->add_option("--plot", v_plot, "contact-count CSV path");
  ver->callback([&] {
    rc = cmd_verify(v_traj, v_object, v_tau, v_dmin, v_res, v_ws, v_out,
                    v_plot);
  });

  // evaluate
  auto* ev = app.add_subcommand(
      "evaluate", "held-out reconstruction error of a dictionary");
  fs::path e_dict, e_demos, e_out;
  double e_lambda = 1.0, e_vmax = 0.5;
  ev->add_option("--dict", e_dict, "dictionary JSON")->required();
  ev->add_option("--demos", e_demos, "held-out demo matrix JSON")->required();
  ev->add_option("--lambda", e_lambda, "final-endpoint weight");
  ev->add_option("--vmax", e_vmax, "fingertip speed limit (m/s)");
  ev->add_option("--out", e_out, "write the rendered table here too");
  ev->callback([&] {
    rc = cmd_evaluate(e_dict, e_demos, e_lambda, e_vmax, e_out);
  });

  // bench
  auto* bench = app.add_subcommand("bench", "time generate() per request");
  fs::path b_dict, b_out;
  std::string b_object = "cube";
  std::uint64_t b_seed = 0;
  double b_lambda = 1.0, b_vmax = 0.5;
  bench->add_option("--dict", b_dict, "dictionary JSON")->required();
  bench->add_option("--object", b_object, "cube or cylinder");
  bench->add_option("--seed", b_seed, "request-set seed");
  bench->add_option("--lambda", b_lambda, "final-endpoint weight");
  bench->add_option("--vmax", b_vmax, "fingertip speed limit (m/s)");
  bench->add_option("--out", b_out, "bench report JSON path");
  bench->callback([&] {
    rc = cmd_bench(b_dict, b_object, b_seed, b_lambda, b_vmax, b_out);
  });

  // pipeline
  auto* pipe = app.add_subcommand(
      "pipeline", "synth -> preprocess -> train -> generate -> verify -> evaluate");
  fs::path p_config, p_out;
  std::string p_object;
  std::uint64_t p_seed = 0;
  int p_l = 0, p_scripts = 0;
  double p_minutes = 0.0;
  pipe->add_option("--config", p_config, "pipeline config JSON");
  pipe->add_option("--out", p_out, "output directory (overrides config)");
  pipe->add_option("--object", p_object, "cube or cylinder (overrides config)");
  pipe->add_option("--seed", p_seed, "seed (overrides config)");
  pipe->add_option("--primitives", p_l, "dictionary size (overrides config)");
  pipe->add_option("--scripts", p_scripts, "script count (overrides config)");
  pipe->add_option("--minutes-each", p_minutes,
                   "minutes per script (overrides config)");
  pipe->callback([&] {
    manip::PipelineConfig cfg;
    if (!p_config.empty()) cfg = manip::load_pipeline_config(p_config);
    if (pipe->count("--out")) cfg.out_dir = p_out;
    if (pipe->count("--object")) cfg.object = p_object;
    if (pipe->count("--seed")) cfg.seed = p_seed;
    if (pipe->count("--primitives")) cfg.n_primitives = p_l;
    if (pipe->count("--scripts")) cfg.n_scripts = p_scripts;
    if (pipe->count("--minutes-each")) cfg.minutes_each = p_minutes;
    rc = cmd_pipeline(cfg);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return rc;
}
