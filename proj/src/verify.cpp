#include "manip/verify.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "manip/io.hpp"

namespace manip {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

void require_physical(const Trajectory& t, const char* who) {
  if (t.rep != Representation::physical)
    throw std::invalid_argument(std::string(who) +
                                " expects a physical-representation trajectory");
}

}  // namespace

bool Workspace::contains(int finger, const Eigen::Vector3d& p) const {
  const auto f = static_cast<std::size_t>(finger);
  return (p.array() >= lo[f].array()).all() &&
         (p.array() <= hi[f].array()).all();
}

void Workspace::validate() const {
  for (int f = 0; f < kNumFingers; ++f) {
    const auto i = static_cast<std::size_t>(f);
    if (!((lo[i].array() < hi[i].array()).all()))
      throw std::invalid_argument("workspace box has empty extent for " +
                                  std::string(kFingerNames[i]));
    if (!lo[i].allFinite() || !hi[i].allFinite())
      throw std::invalid_argument("workspace box must be finite");
  }
}

namespace {

Workspace fit_from_points(
    const std::array<std::vector<Eigen::Vector3d>, kNumFingers>& pts,
    double margin) {
  Workspace w;
  w.margin = margin;
  for (int f = 0; f < kNumFingers; ++f) {
    const auto i = static_cast<std::size_t>(f);
    if (pts[i].empty())
      throw std::invalid_argument("no samples to fit a workspace from");
    Eigen::Vector3d lo = pts[i].front(), hi = pts[i].front();
    for (const auto& p : pts[i]) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    w.lo[i] = lo.array() - margin;
    w.hi[i] = hi.array() + margin;
  }
  w.validate();
  return w;
}

}  // namespace

Workspace fit_workspace(const std::vector<Recording>& recordings,
                        double margin) {
  std::array<std::vector<Eigen::Vector3d>, kNumFingers> pts;
  for (const auto& r : recordings) {
    const bool masked = r.missing.size() > 0;
    for (Eigen::Index i = 0; i < r.n_samples(); ++i) {
      bool valid = true;
      if (masked)
        for (int c = 0; c < kFingerFeatures; ++c)
          if (r.missing(i, c)) valid = false;
      if (!valid) continue;
      for (int f = 0; f < kNumFingers; ++f)
        pts[static_cast<std::size_t>(f)].push_back(
            r.data.row(i).segment<3>(3 * f).transpose());
    }
  }
  return fit_from_points(pts, margin);
}

Workspace fit_workspace(const std::vector<Trajectory>& trajectories,
                        double margin) {
  std::array<std::vector<Eigen::Vector3d>, kNumFingers> pts;
  for (const auto& t : trajectories) {
    require_physical(t, "fit_workspace");
    for (const auto& fr : t.frames)
      for (int f = 0; f < kNumFingers; ++f)
        pts[static_cast<std::size_t>(f)].push_back(
            fr.fingertips[static_cast<std::size_t>(f)]);
  }
  return fit_from_points(pts, margin);
}

void save_workspace(const std::filesystem::path& path, const Workspace& w) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "workspace";
  j["margin"] = w.margin;
  json fingers;
  for (int f = 0; f < kNumFingers; ++f) {
    const auto i = static_cast<std::size_t>(f);
    fingers[kFingerNames[i]] = {
        {"min", {w.lo[i].x(), w.lo[i].y(), w.lo[i].z()}},
        {"max", {w.hi[i].x(), w.hi[i].y(), w.hi[i].z()}}};
  }
  j["fingers"] = fingers;
  io::write_text_file(path, j.dump(2) + "\n");
}

Workspace load_workspace(const std::filesystem::path& path) {
  json j;
  try {
    j = json::parse(io::read_text_file(path));
  } catch (const json::exception& e) {
    throw IoError("failed to parse " + path.string() + ": " + e.what());
  }
  if (j.value("kind", "") != "workspace")
    throw IoError(path.string() + " is not a workspace file");
  Workspace w;
  w.margin = j.value("margin", 0.005);
  for (int f = 0; f < kNumFingers; ++f) {
    const auto i = static_cast<std::size_t>(f);
    const json& jf = j.at("fingers").at(kFingerNames[i]);
    for (int a = 0; a < 3; ++a) {
      w.lo[i](a) = jf.at("min").at(static_cast<std::size_t>(a)).get<double>();
      w.hi[i](a) = jf.at("max").at(static_cast<std::size_t>(a)).get<double>();
    }
  }
  w.validate();
  return w;
}

const char* to_string(ObjectShape s) {
  return s == ObjectShape::cube ? "cube" : "cylinder";
}

ObjectShape object_shape_from_string(const std::string& s) {
  if (s == "cube") return ObjectShape::cube;
  if (s == "cylinder") return ObjectShape::cylinder;
  throw std::invalid_argument("unknown object shape: " + s);
}

void ObjectModel::validate() const {
  if (!(cube_edge > 0.0) || !(cylinder_diameter > 0.0) ||
      !(cylinder_height > 0.0))
    throw std::invalid_argument("object dimensions must be positive");
  if (!(surface_resolution > 0.0))
    throw std::invalid_argument("surface resolution must be positive");
}

ObjectModel make_object(ObjectShape shape) {
  ObjectModel m;
  m.shape = shape;
  return m;
}

std::vector<Eigen::Vector3d> ObjectModel::sample_surface_local() const {
  validate();
  std::vector<Eigen::Vector3d> pts;
  if (shape == ObjectShape::cube) {
    const double e = cube_edge;
    const int n = static_cast<int>(std::ceil(e / surface_resolution));
    const double step = e / n;
    for (int d = 0; d < 3; ++d) {
      const int u = (d + 1) % 3, v = (d + 2) % 3;
      for (int s = -1; s <= 1; s += 2) {
        for (int i = 0; i <= n; ++i) {
          for (int j = 0; j <= n; ++j) {
            Eigen::Vector3d p;
            p(d) = s * e / 2.0;
            p(u) = -e / 2.0 + i * step;
            p(v) = -e / 2.0 + j * step;
            pts.push_back(p);
          }
        }
      }
    }
  } else {
    const double r = cylinder_diameter / 2.0;
    const double h = cylinder_height;
    const int nt =
        std::max(3, static_cast<int>(std::ceil(2.0 * kPi * r /
                                               surface_resolution)));
    const int nz = std::max(1, static_cast<int>(std::ceil(h /
                                                          surface_resolution)));
    for (int i = 0; i < nt; ++i) {
      const double th = 2.0 * kPi * i / nt;
      for (int j = 0; j <= nz; ++j)
        pts.emplace_back(r * std::cos(th), r * std::sin(th),
                         -h / 2.0 + j * h / nz);
    }
    const int nr = std::max(1, static_cast<int>(std::ceil(r /
                                                          surface_resolution)));
    for (int s = -1; s <= 1; s += 2) {
      const double z = s * h / 2.0;
      for (int k = 0; k < nr; ++k) {  // k = nr would duplicate the rim
        const double rho = r * k / nr;
        const int nk = std::max(
            1, static_cast<int>(std::ceil(2.0 * kPi * rho /
                                          surface_resolution)));
        for (int i = 0; i < nk; ++i) {
          const double th = 2.0 * kPi * i / nk;
          pts.emplace_back(rho * std::cos(th), rho * std::sin(th), z);
        }
      }
    }
  }
  return pts;
}

std::vector<Eigen::Vector3d> sample_surface(const ObjectModel& m,
                                            const RigidPose& pose) {
  std::vector<Eigen::Vector3d> pts = m.sample_surface_local();
  const Eigen::Matrix3d rot = pose.rotation();
  for (auto& p : pts) p = rot * p + pose.position;
  return pts;
}

std::vector<std::array<bool, kNumFingers>> check_reachability(
    const Trajectory& t, const Workspace& w) {
  require_physical(t, "check_reachability");
  w.validate();
  std::vector<std::array<bool, kNumFingers>> out;
  out.reserve(t.frames.size());
  for (const auto& fr : t.frames) {
    std::array<bool, kNumFingers> row{};
    for (int f = 0; f < kNumFingers; ++f)
      row[static_cast<std::size_t>(f)] =
          w.contains(f, fr.fingertips[static_cast<std::size_t>(f)]);
    out.push_back(row);
  }
  return out;
}

CollisionReport check_collisions(const Trajectory& t, double d_min) {
  require_physical(t, "check_collisions");
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  CollisionReport rep;
  rep.min_pairwise_distance.reserve(t.frames.size());
  rep.flagged.reserve(t.frames.size());
  for (const auto& fr : t.frames) {
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < kNumFingers; ++i)
      for (int j = i + 1; j < kNumFingers; ++j)
        dmin = std::min(dmin,
                        (fr.fingertips[static_cast<std::size_t>(i)] -
                         fr.fingertips[static_cast<std::size_t>(j)])
                            .norm());
    rep.min_pairwise_distance.push_back(dmin);
    rep.flagged.push_back(dmin < d_min);
  }
  return rep;
}

ContactReport check_contacts(const Trajectory& t, const ObjectModel& m,
                             double tau) {
  require_physical(t, "check_contacts");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  const std::vector<Eigen::Vector3d> cloud = m.sample_surface_local();

  ContactReport rep;
  rep.contact_count.reserve(t.frames.size());
  rep.contact_set.reserve(t.frames.size());
  rep.surface_distance.reserve(t.frames.size());
  for (const auto& fr : t.frames) {
    // Work in the object frame: one cloud, fingertips transformed in.
    const Eigen::Matrix3d rot =
        rotation_from_euler(fr.object_orientation).transpose();
    std::array<double, kNumFingers> dist{};
    std::array<bool, kNumFingers> in_contact{};
    int count = 0;
    for (int f = 0; f < kNumFingers; ++f) {
      const Eigen::Vector3d local =
          rot * (fr.fingertips[static_cast<std::size_t>(f)] -
                 fr.object_position);
      double best = std::numeric_limits<double>::infinity();
      for (const auto& o : cloud)
        best = std::min(best, (local - o).squaredNorm());
      best = std::sqrt(best);
      dist[static_cast<std::size_t>(f)] = best;
      const bool c = best <= tau;
      in_contact[static_cast<std::size_t>(f)] = c;
      if (c) ++count;
    }
    rep.surface_distance.push_back(dist);
    rep.contact_set.push_back(in_contact);
    rep.contact_count.push_back(count);
  }
  return rep;
}

GaitingResult detect_gaiting(const std::vector<int>& contact_count) {
  GaitingResult g;
  for (std::size_t k = 1; k < contact_count.size(); ++k) {
    if (contact_count[k] != contact_count[k - 1])
      g.transitions.push_back({static_cast<int>(k), contact_count[k - 1],
                               contact_count[k]});
  }
  g.detected = !g.transitions.empty();
  return g;
}

GaitingResult detect_gaiting(const ConstraintReport& report) {
  if (report.contact_count.empty())
    throw std::invalid_argument("report carries no contact data");
  return detect_gaiting(report.contact_count);
}

void VerifyConfig::validate() const {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(d_min > 0.0)) throw std::invalid_argument("d_min must be positive");
  if (min_contacts < 0)
    throw std::invalid_argument("min_contacts must be non-negative");
}

ConstraintReport verify_trajectory(const Trajectory& t, const ObjectModel& m,
                                   const Workspace& w,
                                   const VerifyConfig& cfg) {
  cfg.validate();
  ConstraintReport rep;
  rep.config = cfg;
  rep.reachability_ok = check_reachability(t, w);
  const CollisionReport col = check_collisions(t, cfg.d_min);
  rep.min_pairwise_distance = col.min_pairwise_distance;
  const ContactReport con = check_contacts(t, m, cfg.tau);
  rep.contact_count = con.contact_count;
  rep.contact_set = con.contact_set;

  const int n = static_cast<int>(t.frames.size());
  for (int k = 0; k < n; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    for (int f = 0; f < kNumFingers; ++f) {
      if (!rep.reachability_ok[ku][static_cast<std::size_t>(f)]) {
        Violation v;
        v.kind = "reachability";
        v.step = k;
        v.finger = f;
        v.detail = std::string(kFingerNames[static_cast<std::size_t>(f)]) +
                   " outside its reachable region";
        rep.violations.push_back(v);
      }
    }
    if (col.flagged[ku]) {
      Violation v;
      v.kind = "collision";
      v.step = k;
      v.value = col.min_pairwise_distance[ku];
      v.detail = "fingertip pair closer than clearance";
      rep.violations.push_back(v);
    }
    if (rep.contact_count[ku] < cfg.min_contacts) {
      Violation v;
      v.kind = "contact";
      v.step = k;
      v.value = rep.contact_count[ku];
      v.detail = "fewer contacting fingers than required";
      rep.violations.push_back(v);
    }
  }

  const GaitingResult g = detect_gaiting(rep.contact_count);
  rep.gaiting_detected = g.detected;
  rep.transitions = g.transitions;
  return rep;
}

void save_constraint_report(const std::filesystem::path& path,
                            const ConstraintReport& r) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "constraint_report";
  j["config"] = {{"tau", r.config.tau},
                 {"d_min", r.config.d_min},
                 {"min_contacts", r.config.min_contacts}};
  j["n_steps"] = r.n_steps();
  j["ok"] = r.ok();
  j["reachability_ok"] = json::array();
  for (const auto& row : r.reachability_ok) {
    json jr = json::array();
    for (bool b : row) jr.push_back(b);
    j["reachability_ok"].push_back(jr);
  }
  j["min_pairwise_distance"] = r.min_pairwise_distance;
  j["contact_count"] = r.contact_count;
  j["contact_set"] = json::array();
  for (const auto& row : r.contact_set) {
    json jr = json::array();
    for (bool b : row) jr.push_back(b);
    j["contact_set"].push_back(jr);
  }
  j["gaiting"] = {{"detected", r.gaiting_detected},
                  {"transitions", json::array()}};
  for (const auto& tr : r.transitions)
    j["gaiting"]["transitions"].push_back(
        {{"step", tr.step}, {"old", tr.old_count}, {"new", tr.new_count}});
  j["violations"] = json::array();
  for (const auto& v : r.violations) {
    json jv = {{"kind", v.kind},
               {"step", v.step},
               {"value", v.value},
               {"detail", v.detail}};
    if (v.finger >= 0) jv["finger"] = kFingerNames[static_cast<std::size_t>(v.finger)];
    j["violations"].push_back(jv);
  }
  io::write_text_file(path, j.dump(2) + "\n");
}

}  // namespace manip
