#include "manip/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "manip/io.hpp"
#include "object_json.hpp"
#include "rng_detail.hpp"

namespace manip {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMaxAngle = 25.0 * kPi / 180.0;
constexpr double kMaxTranslation = 0.12;
constexpr int kMaxLifted = kNumFingers - 2;

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 + tau * (-15.0 + 6.0 * tau));
}

/// Lift profile: 0 at both ends with zero end velocity, peak 1 at tau=1/2.
double lift_bump(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  const double a = tau * (1.0 - tau);
  return 16.0 * a * a;
}

struct ContactSite {
  Eigen::Vector3d point;
  Eigen::Vector3d normal;     // outward face normal, object frame
  Eigen::Vector3d free_axis;  // in-face jitter direction
};

std::array<ContactSite, kNumFingers> contact_sites(const ObjectModel& m) {
  std::array<ContactSite, kNumFingers> s;
  if (m.shape == ObjectShape::cube) {
    const double he = m.cube_edge / 2.0;
    const double sc = m.cube_edge / 0.05;  // insets scale with the object
    s[0] = {{-he, 0.0, 0.0}, {-1, 0, 0}, {0, 0, 1}};
    s[1] = {{he, 0.018 * sc, 0.006 * sc}, {1, 0, 0}, {0, 0, 1}};
    s[2] = {{he, 0.006 * sc, 0.006 * sc}, {1, 0, 0}, {0, 0, 1}};
    s[3] = {{he, -0.006 * sc, 0.006 * sc}, {1, 0, 0}, {0, 0, 1}};
    s[4] = {{0.010 * sc, -0.012 * sc, he}, {0, 0, 1}, {1, 0, 0}};
  } else {
    const double r = m.cylinder_diameter / 2.0;
    const double zf = 0.004 * (m.cylinder_height / 0.05);
    const double angles[kNumFingers] = {kPi, 40.0 * kPi / 180.0,
                                        13.0 * kPi / 180.0,
                                        -13.0 * kPi / 180.0,
                                        -40.0 * kPi / 180.0};
    for (int f = 0; f < kNumFingers; ++f) {
      const double th = angles[f];
      const Eigen::Vector3d n(std::cos(th), std::sin(th), 0.0);
      const double z = f == 0 ? 0.0 : zf;
      s[static_cast<std::size_t>(f)] = {n * r + Eigen::Vector3d(0, 0, z), n,
                                        {0, 0, 1}};
    }
  }
  return s;
}

}  // namespace

const char* to_string(ScriptAction::Kind k) {
  switch (k) {
    case ScriptAction::Kind::rotate_x: return "rotate_x";
    case ScriptAction::Kind::rotate_y: return "rotate_y";
    case ScriptAction::Kind::translate_y: return "translate_y";
  }
  return "unknown";
}

ScriptAction::Kind action_kind_from_string(const std::string& s) {
  if (s == "rotate_x") return ScriptAction::Kind::rotate_x;
  if (s == "rotate_y") return ScriptAction::Kind::rotate_y;
  if (s == "translate_y") return ScriptAction::Kind::translate_y;
  throw std::invalid_argument("unknown action kind: " + s);
}

double ManipulationScript::total_duration() const {
  double t = 0.0;
  for (const auto& a : actions) t += a.duration;
  return t;
}

void ManipulationScript::validate() const {
  object.validate();
  if (!(noise_sigma >= 0.0))
    throw std::invalid_argument("noise_sigma must be non-negative");

  double roll = 0.0, pitch = 0.0, y = 0.0;
  for (const auto& a : actions) {
    if (!(a.duration > 0.0))
      throw std::invalid_argument("action duration must be positive");
    switch (a.kind) {
      case ScriptAction::Kind::rotate_x: roll += a.amount; break;
      case ScriptAction::Kind::rotate_y: pitch += a.amount; break;
      case ScriptAction::Kind::translate_y: y += a.amount; break;
    }
    if (std::abs(roll) > kMaxAngle + 1e-12 ||
        std::abs(pitch) > kMaxAngle + 1e-12)
      throw std::invalid_argument(
          "script leaves the +/-25 degree rotation envelope");
    if (std::abs(y) > kMaxTranslation + 1e-12)
      throw std::invalid_argument(
          "script leaves the +/-0.12 m translation envelope");
  }

  const double total = total_duration();
  std::vector<std::pair<double, int>> edges;  // (time, +1/-1 lifted)
  std::vector<std::pair<double, double>> per_finger[kNumFingers];
  for (const auto& e : gait_events) {
    if (e.finger < 0 || e.finger >= kNumFingers)
      throw std::invalid_argument("gait event finger out of range");
    if (!(e.duration > 0.0) || !(e.lift_height > 0.0))
      throw std::invalid_argument("gait event needs positive duration/height");
    if (e.time_s < 0.0 || e.time_s + e.duration > total + 1e-9)
      throw std::invalid_argument("gait event outside the script timeline");
    per_finger[e.finger].emplace_back(e.time_s, e.time_s + e.duration);
    edges.emplace_back(e.time_s, +1);
    edges.emplace_back(e.time_s + e.duration, -1);
  }
  for (int f = 0; f < kNumFingers; ++f) {
    auto& spans = per_finger[f];
    std::sort(spans.begin(), spans.end());
    for (std::size_t i = 1; i < spans.size(); ++i)
      if (spans[i].first < spans[i - 1].second - 1e-12)
        throw ScriptInfeasible("finger lifted while already in the air");
  }
  std::sort(edges.begin(), edges.end());
  int lifted = 0;
  for (const auto& [t, d] : edges) {
    lifted += d;
    if (lifted > kMaxLifted)
      throw ScriptInfeasible("fewer than 2 grounded fingers at t=" +
                             std::to_string(t));
  }
}

std::array<Eigen::Vector3d, kNumFingers> base_contact_points(
    const ObjectModel& m, std::uint64_t seed) {
  const auto sites = contact_sites(m);
  detail::Rng rng(seed ^ 0xC0FFEE1234567890ULL);
  std::array<Eigen::Vector3d, kNumFingers> pts;
  for (int f = 0; f < kNumFingers; ++f) {
    const auto& s = sites[static_cast<std::size_t>(f)];
    pts[static_cast<std::size_t>(f)] =
        s.point + rng.uniform(-0.002, 0.002) * s.free_axis;
  }
  return pts;
}

RigidPose object_pose_at(const ManipulationScript& s, double t) {
  double roll = 0.0, pitch = 0.0, y = 0.0;
  double start = 0.0;
  for (const auto& a : s.actions) {
    double frac = 1.0;
    if (t < start) {
      frac = 0.0;
    } else if (t < start + a.duration) {
      frac = min_jerk((t - start) / a.duration);
    }
    switch (a.kind) {
      case ScriptAction::Kind::rotate_x: roll += frac * a.amount; break;
      case ScriptAction::Kind::rotate_y: pitch += frac * a.amount; break;
      case ScriptAction::Kind::translate_y: y += frac * a.amount; break;
    }
    start += a.duration;
  }
  RigidPose p = base_object_pose();
  p.position.y() += y;
  p.rpy = Eigen::Vector3d(roll, pitch, 0.0);
  return p;
}

Recording synthesize(const ManipulationScript& s) {
  s.validate();
  const double dt = kDefaultDt;
  const double total = s.total_duration();
  const int n = static_cast<int>(std::llround(total / dt)) + 1;

  // Per-finger chain of contact points: each gait event moves the finger
  // from its previous point to a freshly jittered one on the same face.
  const auto sites = contact_sites(s.object);
  auto points = base_contact_points(s.object, s.seed);
  struct Arc {
    double t0 = 0.0, t1 = 0.0;
    double lift = 0.0;
    Eigen::Vector3d from, to;
  };
  std::vector<Arc> arcs[kNumFingers];
  {
    std::vector<std::size_t> order(s.gait_events.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return s.gait_events[a].time_s < s.gait_events[b].time_s;
    });
    std::array<Eigen::Vector3d, kNumFingers> cur = points;
    for (const std::size_t i : order) {
      const GaitEvent& e = s.gait_events[i];
      const auto& site = sites[static_cast<std::size_t>(e.finger)];
      detail::Rng jit(s.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
      Arc a;
      a.t0 = e.time_s;
      a.t1 = e.time_s + e.duration;
      a.lift = e.lift_height;
      a.from = cur[static_cast<std::size_t>(e.finger)];
      a.to = site.point + jit.uniform(-0.004, 0.004) * site.free_axis;
      arcs[e.finger].push_back(a);
      cur[static_cast<std::size_t>(e.finger)] = a.to;
    }
  }

  detail::Rng noise(s.seed ^ 0xA5A5A5A55A5A5A5AULL);
  Recording rec;
  rec.dt = dt;
  rec.data.setZero(n, kRecordingChannels);
  rec.missing.resize(0, 0);

  std::size_t arc_idx[kNumFingers] = {};
  for (int k = 0; k < n; ++k) {
    const double t = k * dt;
    const RigidPose pose = object_pose_at(s, t);
    const Eigen::Matrix3d rot = pose.rotation();
    for (int f = 0; f < kNumFingers; ++f) {
      auto& idx = arc_idx[f];
      const auto& chain = arcs[f];
      while (idx < chain.size() && t >= chain[idx].t1) ++idx;
      Eigen::Vector3d local;
      if (idx < chain.size() && t >= chain[idx].t0) {
        const Arc& a = chain[idx];
        const double tau = (t - a.t0) / (a.t1 - a.t0);
        const auto& site = sites[static_cast<std::size_t>(f)];
        local = a.from + (a.to - a.from) * min_jerk(tau) +
                site.normal * (a.lift * lift_bump(tau));
      } else {
        local = idx < chain.size() ? chain[idx].from
                                   : (chain.empty() ? points[static_cast<std::size_t>(f)]
                                                    : chain.back().to);
      }
      Eigen::Vector3d p = rot * local + pose.position;
      for (int a = 0; a < 3; ++a)
        p(a) += s.noise_sigma * noise.gaussian();
      rec.data.block<1, 3>(k, 3 * f) = p.transpose();
    }
    rec.data.block<1, 3>(k, kFingerFeatures) = pose.position.transpose();
    rec.data.block<1, 3>(k, kFingerFeatures + 3) = pose.rpy.transpose();
    // palm channels stay identity (zeros)
  }
  rec.validate();
  return rec;
}

Dataset make_dataset(const std::vector<ManipulationScript>& scripts,
                     int train_parts, int test_parts, std::uint64_t seed) {
  if (scripts.empty())
    throw std::invalid_argument("make_dataset needs at least one script");
  if (train_parts < 1 || test_parts < 0)
    throw std::invalid_argument("bad split ratio");

  const int n = static_cast<int>(scripts.size());
  const int n_test = n * test_parts / (train_parts + test_parts);
  const int n_train = n - n_test;

  std::vector<int> idx(scripts.size());
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  detail::Rng rng(seed);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(
        rng.integer(static_cast<std::uint64_t>(i) + 1));
    std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
  }

  Dataset d;
  d.train_indices.assign(idx.begin(), idx.begin() + n_train);
  d.test_indices.assign(idx.begin() + n_train, idx.end());
  std::sort(d.train_indices.begin(), d.train_indices.end());
  std::sort(d.test_indices.begin(), d.test_indices.end());
  for (int i : d.train_indices)
    d.train.push_back(synthesize(scripts[static_cast<std::size_t>(i)]));
  for (int i : d.test_indices)
    d.test.push_back(synthesize(scripts[static_cast<std::size_t>(i)]));
  if (n_test == 0)
    d.warning = "dataset split left the test side empty; all recordings in train";
  return d;
}

std::vector<ManipulationScript> random_scripts(const ObjectModel& object,
                                               int n_scripts,
                                               double minutes_each,
                                               std::uint64_t seed) {
  if (n_scripts < 1) throw std::invalid_argument("n_scripts must be positive");
  if (!(minutes_each > 0.0))
    throw std::invalid_argument("minutes_each must be positive");
  object.validate();

  std::vector<ManipulationScript> scripts;
  scripts.reserve(static_cast<std::size_t>(n_scripts));
  for (int si = 0; si < n_scripts; ++si) {
    ManipulationScript s;
    s.object = object;
    s.seed = seed ^ (0x9E3779B97F4A7C15ULL *
                     (static_cast<std::uint64_t>(si) + 1));
    detail::Rng rng(s.seed ^ 0x5C81975EEDULL);

    const double total = minutes_each * 60.0;
    int gait_finger = 1;
    double t = 0.0;
    while (t + 2.0 * 1.0 + 2.0 * 0.6 <= total - 0.5) {
      ScriptAction a;
      const auto pick = rng.integer(3);
      a.kind = pick == 0   ? ScriptAction::Kind::rotate_x
               : pick == 1 ? ScriptAction::Kind::rotate_y
                           : ScriptAction::Kind::translate_y;
      const double sign = rng.integer(2) == 0 ? 1.0 : -1.0;
      a.amount = a.kind == ScriptAction::Kind::translate_y
                     ? sign * rng.uniform(0.04, 0.10)
                     : sign * rng.uniform(10.0, 22.0) * kPi / 180.0;
      a.duration = 1.0;
      const double hold1 = rng.uniform(0.6, 1.0);
      const double hold2 = rng.uniform(0.6, 1.0);
      ScriptAction undo = a;
      undo.amount = -a.amount;

      s.actions.push_back(a);
      s.actions.push_back(ScriptAction::hold(hold1));
      s.actions.push_back(undo);
      s.actions.push_back(ScriptAction::hold(hold2));

      // Gait events live inside holds, where the object is stationary.
      auto maybe_gait = [&](double hold_start, double hold_len) {
        if (rng.uniform() >= 0.3) return;
        GaitEvent e;
        e.finger = gait_finger;
        gait_finger = gait_finger == 4 ? 1 : gait_finger + 1;
        e.duration = 0.4;
        e.lift_height = rng.uniform(0.025, 0.04);
        const double slack = hold_len - e.duration - 0.1;
        e.time_s = hold_start + 0.05 + rng.uniform() * slack;
        s.gait_events.push_back(e);
      };
      maybe_gait(t + a.duration, hold1);
      maybe_gait(t + a.duration + hold1 + undo.duration, hold2);
      t += a.duration + hold1 + undo.duration + hold2;
    }
    if (total - t > 1e-9) s.actions.push_back(ScriptAction::hold(total - t));
    s.validate();
    scripts.push_back(std::move(s));
  }
  return scripts;
}

void save_script(const std::filesystem::path& path,
                 const ManipulationScript& s) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "script";
  j["object"] = detail::object_to_json(s.object);
  j["seed"] = s.seed;
  j["noise_sigma"] = s.noise_sigma;
  j["actions"] = json::array();
  for (const auto& a : s.actions)
    j["actions"].push_back({{"kind", to_string(a.kind)},
                            {"amount", a.amount},
                            {"duration", a.duration}});
  j["gait_events"] = json::array();
  for (const auto& e : s.gait_events)
    j["gait_events"].push_back(
        {{"time_s", e.time_s},
         {"finger", kFingerNames[static_cast<std::size_t>(e.finger)]},
         {"lift_height", e.lift_height},
         {"duration", e.duration}});
  io::write_text_file(path, j.dump(2) + "\n");
}

ManipulationScript load_script(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError("failed to parse " + path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "script")
    throw IoError(path.string() + " is not a script file");
  ManipulationScript s;
  s.object = detail::object_from_json(j.at("object"));
  s.seed = j.value("seed", std::uint64_t{0});
  s.noise_sigma = j.value("noise_sigma", 0.0005);
  for (const auto& ja : j.value("actions", json::array())) {
    ScriptAction a;
    a.kind = action_kind_from_string(ja.at("kind").get<std::string>());
    a.amount = ja.at("amount").get<double>();
    a.duration = ja.at("duration").get<double>();
    s.actions.push_back(a);
  }
  for (const auto& je : j.value("gait_events", json::array())) {
    GaitEvent e;
    const std::string name = je.at("finger").get<std::string>();
    e.finger = -1;
    for (int f = 0; f < kNumFingers; ++f)
      if (name == kFingerNames[static_cast<std::size_t>(f)]) e.finger = f;
    if (e.finger < 0) throw IoError("unknown finger in " + path.string());
    e.time_s = je.at("time_s").get<double>();
    e.lift_height = je.at("lift_height").get<double>();
    e.duration = je.at("duration").get<double>();
    s.gait_events.push_back(e);
  }
  s.validate();
  return s;
}

}  // namespace manip
