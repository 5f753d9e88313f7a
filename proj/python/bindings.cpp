#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "manip/io.hpp"
#include "manip/model.hpp"
#include "manip/nmf.hpp"
#include "manip/pipeline.hpp"
#include "manip/preprocess.hpp"
#include "manip/synth.hpp"
#include "manip/trajgen.hpp"
#include "manip/types.hpp"
#include "manip/verify.hpp"

namespace py = pybind11;
using namespace manip;

namespace {

// std::array<bool, 5> renders nicer as a list in python.
std::vector<std::vector<bool>> to_lists(
    const std::vector<std::array<bool, kNumFingers>>& rows) {
  std::vector<std::vector<bool>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.emplace_back(r.begin(), r.end());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "manipulation primitive dictionaries: learning, synthesis, checks";

  m.attr("NUM_FINGERS") = kNumFingers;
  m.attr("FRAME_FEATURES") = kFrameFeatures;
  m.attr("SAMPLE_RATE_HZ") = kSampleRateHz;
  m.attr("STEPS_PER_SEGMENT") = kStepsPerSegment;
  m.attr("FINGER_NAMES") =
      std::vector<std::string>(kFingerNames.begin(), kFingerNames.end());

  py::register_exception<DimensionMismatch>(m, "DimensionMismatch",
                                            PyExc_ValueError);
  py::register_exception<OffsetInsufficient>(m, "OffsetInsufficient",
                                             PyExc_ValueError);
  py::register_exception<GapTooLong>(m, "GapTooLong", PyExc_ValueError);
  py::register_exception<RankTooLarge>(m, "RankTooLarge", PyExc_ValueError);
  py::register_exception<NonNegativityViolated>(m, "NonNegativityViolated",
                                                PyExc_ValueError);
  py::register_exception<ScriptInfeasible>(m, "ScriptInfeasible",
                                           PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  // -------------------------------------------------------------- core types
  py::enum_<Representation>(m, "Representation")
      .value("physical", Representation::physical)
      .value("offset", Representation::offset);

  py::class_<OffsetSpec>(m, "OffsetSpec")
      .def(py::init<>())
      .def(py::init([](double pos, double orient) {
             return OffsetSpec{pos, orient};
           }),
           py::arg("position_offset"), py::arg("orientation_offset"))
      .def_readwrite("position_offset", &OffsetSpec::position_offset)
      .def_readwrite("orientation_offset", &OffsetSpec::orientation_offset);

  py::class_<Frame>(m, "Frame")
      .def(py::init<>())
      .def_readwrite("fingertips", &Frame::fingertips)
      .def_readwrite("object_position", &Frame::object_position)
      .def_readwrite("object_orientation", &Frame::object_orientation)
      .def("features", &Frame::features)
      .def_static("from_features", &Frame::from_features, py::arg("features"));

  py::class_<Trajectory>(m, "Trajectory")
      .def(py::init<>())
      .def_readwrite("frames", &Trajectory::frames)
      .def_readwrite("dt", &Trajectory::dt)
      .def_readwrite("rep", &Trajectory::rep)
      .def_property_readonly("n_steps", &Trajectory::n_steps)
      .def("validate", &Trajectory::validate);

  py::class_<DictionaryProvenance>(m, "DictionaryProvenance")
      .def(py::init<>())
      .def_readwrite("object", &DictionaryProvenance::object)
      .def_readwrite("seed", &DictionaryProvenance::seed)
      .def_readwrite("iterations", &DictionaryProvenance::iterations)
      .def_readwrite("final_residual", &DictionaryProvenance::final_residual);

  py::class_<Dictionary>(m, "Dictionary")
      .def(py::init<>())
      .def_readwrite("w", &Dictionary::w)
      .def_readwrite("n_steps", &Dictionary::n_steps)
      .def_readwrite("n_primitives", &Dictionary::n_primitives)
      .def_readwrite("offsets", &Dictionary::offsets)
      .def_readwrite("provenance", &Dictionary::provenance)
      .def("frame_block", &Dictionary::frame_block, py::arg("k"))
      .def("validate", &Dictionary::validate);

  m.def("flatten", &flatten, py::arg("trajectory"));
  m.def("unflatten", &unflatten, py::arg("values"), py::arg("dt"),
        py::arg("rep"));
  m.def("offset_pattern", &offset_pattern, py::arg("n_steps"),
        py::arg("offsets"));
  m.def("apply_offset",
        py::overload_cast<const Trajectory&, const OffsetSpec&>(&apply_offset),
        py::arg("trajectory"), py::arg("offsets"));
  m.def("remove_offset",
        py::overload_cast<const Trajectory&, const OffsetSpec&>(&remove_offset),
        py::arg("trajectory"), py::arg("offsets"));
  m.def("apply_offset",
        py::overload_cast<const Frame&, const OffsetSpec&>(&apply_offset),
        py::arg("frame"), py::arg("offsets"));
  m.def("remove_offset",
        py::overload_cast<const Frame&, const OffsetSpec&>(&remove_offset),
        py::arg("frame"), py::arg("offsets"));
  m.def("activate", &activate, py::arg("w"), py::arg("h"));
  m.def("reconstruct", &reconstruct, py::arg("dictionary"),
        py::arg("activations"));

  // ------------------------------------------------------------- preprocess
  py::class_<Recording>(m, "Recording")
      .def(py::init<>())
      .def_readwrite("data", &Recording::data)
      .def_readwrite("dt", &Recording::dt)
      .def_property_readonly("n_samples", &Recording::n_samples)
      .def("has_gaps", &Recording::has_gaps)
      .def("frame", &Recording::frame, py::arg("i"))
      .def("validate", &Recording::validate);

  py::class_<DemoMatrix>(m, "DemoMatrix")
      .def(py::init<>())
      .def_readwrite("v", &DemoMatrix::v)
      .def_readwrite("offsets", &DemoMatrix::offsets)
      .def_readwrite("n_steps", &DemoMatrix::n_steps)
      .def_property_readonly("n_segments", &DemoMatrix::n_segments)
      .def("validate", &DemoMatrix::validate);

  m.def("fill_gaps", &fill_gaps, py::arg("recording"),
        py::arg("max_gap_s") = 0.2);
  m.def("to_palm_frame", &to_palm_frame, py::arg("recording"));
  m.def("lowpass", &lowpass, py::arg("recording"), py::arg("cutoff_hz"));
  m.def("segment", &segment, py::arg("recording"), py::arg("offsets"),
        py::arg("source_name") = "");
  m.def("concat", &concat, py::arg("parts"));

  // ---------------------------------------------------------------- learning
  py::class_<NmfConfig>(m, "NmfConfig")
      .def(py::init<>())
      .def_readwrite("n_primitives", &NmfConfig::n_primitives)
      .def_readwrite("max_iters", &NmfConfig::max_iters)
      .def_readwrite("rel_tol", &NmfConfig::rel_tol)
      .def_readwrite("rng_seed", &NmfConfig::rng_seed)
      .def_readwrite("init_scale", &NmfConfig::init_scale)
      .def_readwrite("object_label", &NmfConfig::object_label);

  py::class_<NmfFactors>(m, "NmfFactors")
      .def_readonly("w", &NmfFactors::w)
      .def_readonly("h", &NmfFactors::h)
      .def_readonly("objective_trace", &NmfFactors::objective_trace)
      .def_readonly("iterations", &NmfFactors::iterations);

  py::class_<NmfResult>(m, "NmfResult")
      .def_readonly("dictionary", &NmfResult::dictionary)
      .def_readonly("activations", &NmfResult::activations)
      .def_readonly("objective_trace", &NmfResult::objective_trace);

  m.def("nmf_multiplicative", &nmf_multiplicative, py::arg("v"),
        py::arg("n_primitives"), py::arg("max_iters"), py::arg("rel_tol"),
        py::arg("seed"), py::arg("init_scale") = 0.0,
        py::call_guard<py::gil_scoped_release>());
  m.def("nmf_factorize", &nmf_factorize, py::arg("v"), py::arg("config"),
        py::call_guard<py::gil_scoped_release>());

  py::class_<ErrorTable::MeanStd>(m, "MeanStd")
      .def_readonly("mean", &ErrorTable::MeanStd::mean)
      .def_readonly("stddev", &ErrorTable::MeanStd::stddev);

  py::class_<ErrorTable>(m, "ErrorTable")
      .def_readonly("finger_mm", &ErrorTable::finger_mm)
      .def_readonly("object_translation_mm", &ErrorTable::object_translation_mm)
      .def_readonly("object_orientation_rad",
                    &ErrorTable::object_orientation_rad);

  m.def("make_error_table", &make_error_table, py::arg("original"),
        py::arg("recreated"), py::arg("n_steps"));
  m.def("reconstruction_report", &reconstruction_report, py::arg("result"),
        py::arg("v"));
  m.def("render_error_table", &render_error_table, py::arg("table"),
        py::arg("title"));

  // --------------------------------------------------------------- synthesis
  py::class_<VelocityBounds>(m, "VelocityBounds")
      .def(py::init<>())
      .def_readwrite("v_max", &VelocityBounds::v_max)
      .def_readwrite("per_finger", &VelocityBounds::per_finger)
      .def("limit", &VelocityBounds::limit, py::arg("finger"))
      .def_static("unbounded", &VelocityBounds::unbounded);

  py::class_<GenerationRequest>(m, "GenerationRequest")
      .def(py::init<>())
      .def_readwrite("initial", &GenerationRequest::initial)
      .def_readwrite("final", &GenerationRequest::final)
      .def_readwrite("lambda_", &GenerationRequest::lambda)
      .def_readwrite("velocity_bounds", &GenerationRequest::velocity_bounds);

  py::enum_<SolveStatus>(m, "SolveStatus")
      .value("ok", SolveStatus::ok)
      .value("velocity_clipped", SolveStatus::velocity_clipped);

  py::class_<SolveStats>(m, "SolveStats")
      .def_readonly("iterations", &SolveStats::iterations)
      .def_readonly("kkt_residual", &SolveStats::kkt_residual)
      .def_readonly("wall_time_ms", &SolveStats::wall_time_ms)
      .def_readonly("polished", &SolveStats::polished)
      .def_readonly("status", &SolveStats::status);

  py::class_<GenerationResult>(m, "GenerationResult")
      .def_readonly("h", &GenerationResult::h)
      .def_readonly("trajectory", &GenerationResult::trajectory)
      .def_readonly("initial_residual", &GenerationResult::initial_residual)
      .def_readonly("final_residual", &GenerationResult::final_residual)
      .def_readonly("solve_stats", &GenerationResult::solve_stats);

  py::class_<PoseError>(m, "PoseError")
      .def_readonly("translation_mm", &PoseError::translation_mm)
      .def_readonly("rotation_deg", &PoseError::rotation_deg);

  m.def("endpoint_error", &endpoint_error, py::arg("result"),
        py::arg("request"));

  py::class_<TrajectoryGenerator>(m, "TrajectoryGenerator")
      .def(py::init<const Dictionary&, double, VelocityBounds>(),
           py::arg("dictionary"), py::arg("lambda_") = 1.0,
           py::arg("velocity_bounds") = VelocityBounds{})
      .def("generate", &TrajectoryGenerator::generate, py::arg("initial"),
           py::arg("final"), py::call_guard<py::gil_scoped_release>());

  m.def("generate", &generate, py::arg("dictionary"), py::arg("request"),
        py::call_guard<py::gil_scoped_release>());

  // ------------------------------------------------------------ verification
  py::enum_<ObjectShape>(m, "ObjectShape")
      .value("cube", ObjectShape::cube)
      .value("cylinder", ObjectShape::cylinder);

  py::class_<ObjectModel>(m, "ObjectModel")
      .def(py::init<>())
      .def_readwrite("shape", &ObjectModel::shape)
      .def_readwrite("cube_edge", &ObjectModel::cube_edge)
      .def_readwrite("cylinder_diameter", &ObjectModel::cylinder_diameter)
      .def_readwrite("cylinder_height", &ObjectModel::cylinder_height)
      .def_readwrite("surface_resolution", &ObjectModel::surface_resolution)
      .def("validate", &ObjectModel::validate)
      .def("sample_surface_local", &ObjectModel::sample_surface_local);

  m.def("make_object", &make_object, py::arg("shape"));

  py::class_<Workspace>(m, "Workspace")
      .def(py::init<>())
      .def_readwrite("lo", &Workspace::lo)
      .def_readwrite("hi", &Workspace::hi)
      .def_readwrite("margin", &Workspace::margin)
      .def("contains", &Workspace::contains, py::arg("finger"), py::arg("p"))
      .def("validate", &Workspace::validate);

  m.def("fit_workspace",
        py::overload_cast<const std::vector<Recording>&, double>(
            &fit_workspace),
        py::arg("recordings"), py::arg("margin") = 0.005);
  m.def("fit_workspace_from_trajectories",
        py::overload_cast<const std::vector<Trajectory>&, double>(
            &fit_workspace),
        py::arg("trajectories"), py::arg("margin") = 0.005);
  m.def("save_workspace", &save_workspace, py::arg("path"),
        py::arg("workspace"));
  m.def("load_workspace", &load_workspace, py::arg("path"));

  py::class_<VerifyConfig>(m, "VerifyConfig")
      .def(py::init<>())
      .def_readwrite("tau", &VerifyConfig::tau)
      .def_readwrite("d_min", &VerifyConfig::d_min)
      .def_readwrite("min_contacts", &VerifyConfig::min_contacts);

  py::class_<ContactTransition>(m, "ContactTransition")
      .def_readonly("step", &ContactTransition::step)
      .def_readonly("old_count", &ContactTransition::old_count)
      .def_readonly("new_count", &ContactTransition::new_count);

  py::class_<Violation>(m, "Violation")
      .def_readonly("kind", &Violation::kind)
      .def_readonly("step", &Violation::step)
      .def_readonly("finger", &Violation::finger)
      .def_readonly("value", &Violation::value)
      .def_readonly("detail", &Violation::detail);

  py::class_<ConstraintReport>(m, "ConstraintReport")
      .def_property_readonly(
          "reachability_ok",
          [](const ConstraintReport& r) { return to_lists(r.reachability_ok); })
      .def_readonly("min_pairwise_distance",
                    &ConstraintReport::min_pairwise_distance)
      .def_readonly("contact_count", &ConstraintReport::contact_count)
      .def_property_readonly(
          "contact_set",
          [](const ConstraintReport& r) { return to_lists(r.contact_set); })
      .def_readonly("violations", &ConstraintReport::violations)
      .def_readonly("gaiting_detected", &ConstraintReport::gaiting_detected)
      .def_readonly("transitions", &ConstraintReport::transitions)
      .def_property_readonly("n_steps", &ConstraintReport::n_steps)
      .def("ok", &ConstraintReport::ok);

  m.def("verify_trajectory", &verify_trajectory, py::arg("trajectory"),
        py::arg("object"), py::arg("workspace"),
        py::arg("config") = VerifyConfig{});
  m.def("save_constraint_report", &save_constraint_report, py::arg("path"),
        py::arg("report"));

  // ------------------------------------------------------------------- synth
  py::enum_<ScriptAction::Kind>(m, "ActionKind")
      .value("rotate_x", ScriptAction::Kind::rotate_x)
      .value("rotate_y", ScriptAction::Kind::rotate_y)
      .value("translate_y", ScriptAction::Kind::translate_y);

  py::class_<ScriptAction>(m, "ScriptAction")
      .def(py::init<>())
      .def_readwrite("kind", &ScriptAction::kind)
      .def_readwrite("amount", &ScriptAction::amount)
      .def_readwrite("duration", &ScriptAction::duration)
      .def_static("hold", &ScriptAction::hold, py::arg("duration"));

  py::class_<GaitEvent>(m, "GaitEvent")
      .def(py::init<>())
      .def_readwrite("time_s", &GaitEvent::time_s)
      .def_readwrite("finger", &GaitEvent::finger)
      .def_readwrite("lift_height", &GaitEvent::lift_height)
      .def_readwrite("duration", &GaitEvent::duration);

  py::class_<ManipulationScript>(m, "ManipulationScript")
      .def(py::init<>())
      .def_readwrite("object", &ManipulationScript::object)
      .def_readwrite("actions", &ManipulationScript::actions)
      .def_readwrite("gait_events", &ManipulationScript::gait_events)
      .def_readwrite("seed", &ManipulationScript::seed)
      .def_readwrite("noise_sigma", &ManipulationScript::noise_sigma)
      .def("total_duration", &ManipulationScript::total_duration)
      .def("validate", &ManipulationScript::validate);

  m.def("synthesize", &synthesize, py::arg("script"),
        py::call_guard<py::gil_scoped_release>());
  m.def("random_scripts", &random_scripts, py::arg("object"),
        py::arg("n_scripts"), py::arg("minutes_each"), py::arg("seed"));

  py::class_<Dataset>(m, "Dataset")
      .def_readonly("train", &Dataset::train)
      .def_readonly("test", &Dataset::test)
      .def_readonly("train_indices", &Dataset::train_indices)
      .def_readonly("test_indices", &Dataset::test_indices)
      .def_readonly("warning", &Dataset::warning);

  m.def("make_dataset", &make_dataset, py::arg("scripts"),
        py::arg("train_parts"), py::arg("test_parts"), py::arg("seed"),
        py::call_guard<py::gil_scoped_release>());

  // ---------------------------------------------------------------------- io
  py::enum_<io::MatrixStorage>(m, "MatrixStorage")
      .value("binary", io::MatrixStorage::binary)
      .value("csv", io::MatrixStorage::csv);

  m.def("write_trajectory_csv", &io::write_trajectory_csv, py::arg("path"),
        py::arg("trajectory"));
  m.def("read_trajectory_csv", &io::read_trajectory_csv, py::arg("path"));
  m.def("write_recording_csv", &io::write_recording_csv, py::arg("path"),
        py::arg("recording"));
  m.def("read_recording_csv", &io::read_recording_csv, py::arg("path"));
  m.def("save_dictionary", &io::save_dictionary, py::arg("path"),
        py::arg("dictionary"),
        py::arg("storage") = io::MatrixStorage::binary);
  m.def("load_dictionary", &io::load_dictionary, py::arg("path"));
  m.def("save_demo_matrix", &io::save_demo_matrix, py::arg("path"),
        py::arg("matrix"), py::arg("storage") = io::MatrixStorage::binary);
  m.def("load_demo_matrix", &io::load_demo_matrix, py::arg("path"));

  // ---------------------------------------------------------------- pipeline
  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("object", &PipelineConfig::object)
      .def_readwrite("out_dir", &PipelineConfig::out_dir)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("n_scripts", &PipelineConfig::n_scripts)
      .def_readwrite("minutes_each", &PipelineConfig::minutes_each)
      .def_readwrite("noise_sigma", &PipelineConfig::noise_sigma)
      .def_readwrite("train_parts", &PipelineConfig::train_parts)
      .def_readwrite("test_parts", &PipelineConfig::test_parts)
      .def_readwrite("cutoff_hz", &PipelineConfig::cutoff_hz)
      .def_readwrite("max_gap_s", &PipelineConfig::max_gap_s)
      .def_readwrite("offsets", &PipelineConfig::offsets)
      .def_readwrite("n_primitives", &PipelineConfig::n_primitives)
      .def_readwrite("max_iters", &PipelineConfig::max_iters)
      .def_readwrite("rel_tol", &PipelineConfig::rel_tol)
      .def_readwrite("init_scale", &PipelineConfig::init_scale)
      .def_readwrite("lambda_", &PipelineConfig::lambda)
      .def_readwrite("v_max", &PipelineConfig::v_max)
      .def_readwrite("tau", &PipelineConfig::tau)
      .def_readwrite("d_min", &PipelineConfig::d_min)
      .def_readwrite("workspace_margin", &PipelineConfig::workspace_margin)
      .def_readwrite("surface_resolution", &PipelineConfig::surface_resolution)
      .def("validate", &PipelineConfig::validate)
      .def("object_model", &PipelineConfig::object_model);

  m.def("load_pipeline_config", &load_pipeline_config, py::arg("path"));
  m.def("save_pipeline_config", &save_pipeline_config, py::arg("path"),
        py::arg("config"));

  py::class_<EvaluationSummary>(m, "EvaluationSummary")
      .def_readonly("heldout", &EvaluationSummary::heldout)
      .def_readonly("heldout_mean_finger_mm",
                    &EvaluationSummary::heldout_mean_finger_mm)
      .def_readonly("heldout_columns", &EvaluationSummary::heldout_columns)
      .def_readonly("mean_endpoint_translation_mm",
                    &EvaluationSummary::mean_endpoint_translation_mm)
      .def_readonly("mean_endpoint_rotation_deg",
                    &EvaluationSummary::mean_endpoint_rotation_deg)
      .def_readonly("reach_pass_fraction",
                    &EvaluationSummary::reach_pass_fraction)
      .def_readonly("contact_pass_fraction",
                    &EvaluationSummary::contact_pass_fraction)
      .def_readonly("collision_instants", &EvaluationSummary::collision_instants)
      .def_readonly("trajectories_with_gaiting",
                    &EvaluationSummary::trajectories_with_gaiting)
      .def_readonly("max_fingertip_speed", &EvaluationSummary::max_fingertip_speed)
      .def_readonly("velocity_ok", &EvaluationSummary::velocity_ok);

  py::class_<PipelineResult>(m, "PipelineResult")
      .def_readonly("out_dir", &PipelineResult::out_dir)
      .def_readonly("dictionary", &PipelineResult::dictionary)
      .def_readonly("workspace", &PipelineResult::workspace)
      .def_readonly("reports", &PipelineResult::reports)
      .def_readonly("evaluation", &PipelineResult::evaluation);

  m.def("run_pipeline", &run_pipeline, py::arg("config"),
        py::call_guard<py::gil_scoped_release>());
  m.def("evaluate_heldout", &evaluate_heldout, py::arg("dictionary"),
        py::arg("test"), py::arg("lambda_"), py::arg("velocity_bounds"),
        py::call_guard<py::gil_scoped_release>());
}
