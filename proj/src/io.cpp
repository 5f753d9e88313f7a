#include "manip/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace manip::io {

static_assert(std::endian::native == std::endian::little,
              "matrix payloads are little-endian");

using nlohmann::json;

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// CSV

namespace {

const char* kTrajectoryHeader =
    "t,thumb_x,thumb_y,thumb_z,index_x,index_y,index_z,middle_x,middle_y,"
    "middle_z,ring_x,ring_y,ring_z,little_x,little_y,little_z,obj_x,obj_y,"
    "obj_z,obj_roll,obj_pitch,obj_yaw";
const char* kPalmHeaderSuffix = ",palm_x,palm_y,palm_z,palm_roll,palm_pitch,palm_yaw";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> read_csv_lines(const std::filesystem::path& path,
                                        const std::string& expected_header) {
  std::istringstream in(read_text_file(path));
  std::string header;
  if (!std::getline(in, header)) throw IoError(path.string() + ": empty file");
  while (!header.empty() && (header.back() == '\r' || header.back() == '\n'))
    header.pop_back();
  if (header != expected_header)
    throw IoError(path.string() + ": unexpected header '" + header + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

double parse_double(const std::string& s, const std::filesystem::path& path) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError(path.string() + ": bad number '" + s + "'");
  }
}

double infer_dt(const std::vector<double>& times, const std::filesystem::path& path) {
  if (times.size() < 2) return kDefaultDt;
  const double dt = times[1] - times[0];
  if (!(dt > 0.0)) throw IoError(path.string() + ": non-increasing time column");
  for (std::size_t i = 1; i < times.size(); ++i) {
    const double step = times[i] - times[i - 1];
    if (std::abs(step - dt) > 0.01 * dt)
      throw IoError(path.string() + ": time column not uniform at row " +
                    std::to_string(i));
  }
  return dt;
}

}  // namespace

std::string trajectory_csv_header() { return kTrajectoryHeader; }
std::string recording_csv_header() {
  return std::string(kTrajectoryHeader) + kPalmHeaderSuffix;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t) {
  std::ostringstream out;
  out << kTrajectoryHeader << "\n";
  for (int k = 0; k < t.n_steps(); ++k) {
    out << format_double(k * t.dt);
    const auto f = t.frames[k].features();
    for (int c = 0; c < kFrameFeatures; ++c) out << ',' << format_double(f[c]);
    out << "\n";
  }
  write_text_file(path, out.str());
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  const auto lines = read_csv_lines(path, kTrajectoryHeader);
  if (lines.empty()) throw IoError(path.string() + ": no data rows");
  Trajectory t;
  std::vector<double> times;
  for (const auto& line : lines) {
    const auto fields = split_csv_line(line);
    if (fields.size() != 1 + kFrameFeatures)
      throw IoError(path.string() + ": expected 22 columns, got " +
                    std::to_string(fields.size()));
    times.push_back(parse_double(fields[0], path));
    Eigen::VectorXd f(kFrameFeatures);
    for (int c = 0; c < kFrameFeatures; ++c) f[c] = parse_double(fields[c + 1], path);
    t.frames.push_back(Frame::from_features(f));
  }
  t.dt = infer_dt(times, path);
  t.rep = Representation::physical;
  return t;
}

void write_frame_csv(const std::filesystem::path& path, const Frame& f) {
  Trajectory t;
  t.frames.push_back(f);
  write_trajectory_csv(path, t);
}

Frame read_frame_csv(const std::filesystem::path& path) {
  return read_trajectory_csv(path).frames.front();
}

void write_recording_csv(const std::filesystem::path& path, const Recording& r) {
  r.validate();
  const bool masked = r.missing.size() > 0;
  std::ostringstream out;
  out << recording_csv_header() << "\n";
  for (int i = 0; i < r.n_samples(); ++i) {
    out << format_double(i * r.dt);
    for (int c = 0; c < kRecordingChannels; ++c) {
      out << ',';
      if (!masked || !r.missing(i, c)) out << format_double(r.data(i, c));
    }
    out << "\n";
  }
  write_text_file(path, out.str());
}

Recording read_recording_csv(const std::filesystem::path& path) {
  const auto lines = read_csv_lines(path, recording_csv_header());
  if (lines.empty()) throw IoError(path.string() + ": no data rows");
  Recording r;
  const int n = static_cast<int>(lines.size());
  r.data.setZero(n, kRecordingChannels);
  r.missing.setConstant(n, kRecordingChannels, false);
  std::vector<double> times;
  for (int i = 0; i < n; ++i) {
    const auto fields = split_csv_line(lines[i]);
    if (fields.size() != 1 + kRecordingChannels)
      throw IoError(path.string() + ": expected 28 columns, got " +
                    std::to_string(fields.size()));
    times.push_back(parse_double(fields[0], path));
    for (int c = 0; c < kRecordingChannels; ++c) {
      if (fields[c + 1].empty())
        r.missing(i, c) = true;
      else
        r.data(i, c) = parse_double(fields[c + 1], path);
    }
  }
  r.dt = infer_dt(times, path);
  if (!r.missing.any()) r.missing.resize(0, 0);
  return r;
}

// ---------------------------------------------------------------------------
// Matrix containers

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& json_path) {
  std::filesystem::path p = json_path;
  p.replace_extension();  // strip .json
  p += ".w.bin";
  return p;
}

json matrix_meta(const std::filesystem::path& json_path, const Eigen::MatrixXd& m,
                 MatrixStorage storage) {
  json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  if (storage == MatrixStorage::binary) {
    const auto bin = sidecar_path(json_path);
    j["storage"] = "binary";
    j["file"] = bin.filename().string();
    // row-major little-endian f64
    std::string bytes(static_cast<std::size_t>(m.size()) * sizeof(double), '\0');
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        reinterpret_cast<double*>(bytes.data()), m.rows(), m.cols()) = m;
    write_text_file(bin, bytes);
  } else {
    j["storage"] = "csv";
    std::ostringstream data;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        if (c) data << ',';
        data << format_double(m(i, c));
      }
      data << '\n';
    }
    j["data"] = data.str();
  }
  return j;
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& json_path, const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const std::string storage = j.at("storage").get<std::string>();
  if (storage == "binary") {
    const auto bin = json_path.parent_path() / j.at("file").get<std::string>();
    const std::string bytes = read_text_file(bin);
    if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
      throw IoError(bin.string() + ": payload size mismatch");
    m = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(
        reinterpret_cast<const double*>(bytes.data()), rows, cols);
  } else if (storage == "csv") {
    std::istringstream in(j.at("data").get<std::string>());
    std::string line;
    for (Eigen::Index i = 0; i < rows; ++i) {
      if (!std::getline(in, line))
        throw IoError(json_path.string() + ": embedded matrix truncated");
      const auto fields = split_csv_line(line);
      if (static_cast<Eigen::Index>(fields.size()) != cols)
        throw IoError(json_path.string() + ": embedded matrix row width mismatch");
      for (Eigen::Index c = 0; c < cols; ++c)
        m(i, c) = parse_double(fields[c], json_path);
    }
  } else {
    throw IoError(json_path.string() + ": unknown matrix storage '" + storage + "'");
  }
  return m;
}

json offsets_to_json(const OffsetSpec& s) {
  return json{{"position_offset", s.position_offset},
              {"orientation_offset", s.orientation_offset}};
}

OffsetSpec offsets_from_json(const json& j) {
  OffsetSpec s;
  s.position_offset = j.at("position_offset").get<double>();
  s.orientation_offset = j.at("orientation_offset").get<double>();
  return s;
}

void check_format_version(const json& j, const std::filesystem::path& path) {
  if (!j.contains("format_version"))
    throw IoError(path.string() + ": missing format_version");
  if (j.at("format_version").get<int>() != 1)
    throw IoError(path.string() + ": unsupported format_version");
}

}  // namespace

void save_dictionary(const std::filesystem::path& path, const Dictionary& d,
                     MatrixStorage storage) {
  d.validate();
  json j;
  j["format_version"] = 1;
  j["kind"] = "dictionary";
  j["n_steps"] = d.n_steps;
  j["n_primitives"] = d.n_primitives;
  j["offsets"] = offsets_to_json(d.offsets);
  j["provenance"] = {{"object", d.provenance.object},
                     {"seed", d.provenance.seed},
                     {"iterations", d.provenance.iterations},
                     {"final_residual", d.provenance.final_residual}};
  j["matrix"] = matrix_meta(path, d.w, storage);
  write_text_file(path, j.dump(2) + "\n");
}

Dictionary load_dictionary(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  check_format_version(j, path);
  if (j.value("kind", "") != "dictionary")
    throw IoError(path.string() + ": not a dictionary file");
  Dictionary d;
  d.n_steps = j.at("n_steps").get<int>();
  d.n_primitives = j.at("n_primitives").get<int>();
  d.offsets = offsets_from_json(j.at("offsets"));
  const auto& p = j.at("provenance");
  d.provenance.object = p.at("object").get<std::string>();
  d.provenance.seed = p.at("seed").get<std::uint64_t>();
  d.provenance.iterations = p.at("iterations").get<int>();
  d.provenance.final_residual = p.at("final_residual").get<double>();
  d.w = load_matrix(path, j.at("matrix"));
  if (d.n_steps != kStepsPerSegment)
    throw IoError(path.string() + ": dictionaries are fixed at " +
                  std::to_string(kStepsPerSegment) + " steps, got " +
                  std::to_string(d.n_steps));
  d.validate();
  return d;
}

void save_demo_matrix(const std::filesystem::path& path, const DemoMatrix& m,
                      MatrixStorage storage) {
  m.validate();
  json j;
  j["format_version"] = 1;
  j["kind"] = "demos";
  j["n_steps"] = m.n_steps;
  j["offsets"] = offsets_to_json(m.offsets);
  json sources = json::array();
  for (const auto& s : m.segment_sources)
    sources.push_back({{"recording", s.recording}, {"start_sample", s.start_sample}});
  j["segment_sources"] = sources;
  j["matrix"] = matrix_meta(path, m.v, storage);
  write_text_file(path, j.dump(2) + "\n");
}

DemoMatrix load_demo_matrix(const std::filesystem::path& path) {
  const json j = json::parse(read_text_file(path));
  check_format_version(j, path);
  if (j.value("kind", "") != "demos")
    throw IoError(path.string() + ": not a demo-matrix file");
  DemoMatrix m;
  m.n_steps = j.at("n_steps").get<int>();
  m.offsets = offsets_from_json(j.at("offsets"));
  for (const auto& s : j.at("segment_sources"))
    m.segment_sources.push_back({s.at("recording").get<std::string>(),
                                 s.at("start_sample").get<int>()});
  m.v = load_matrix(path, j.at("matrix"));
  m.validate();
  return m;
}

// ---------------------------------------------------------------------------
// Hashing / manifest

std::uint64_t fnv1a64(const void* data, std::size_t size) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::filesystem::path& path) {
  const std::string bytes = read_text_file(path);
  return fnv1a64(bytes.data(), bytes.size());
}

void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries) {
  auto sorted = entries;
  std::sort(sorted.begin(), sorted.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  json files = json::array();
  for (const auto& e : sorted) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx",
                  static_cast<unsigned long long>(e.hash));
    files.push_back({{"path", e.path}, {"fnv1a64", hex}});
  }
  json j;
  j["format_version"] = 1;
  j["files"] = files;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace manip::io
