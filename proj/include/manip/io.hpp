#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "manip/preprocess.hpp"
#include "manip/types.hpp"

namespace manip::io {

/// Lossless, locale-independent double formatting ("%.17g").
std::string format_double(double x);

// ---------------------------------------------------------------------------
// Trajectory / frame / recording CSV
//
// Trajectory CSV columns (SI units, physical representation):
//   t,thumb_x,...,little_z,obj_x,obj_y,obj_z,obj_roll,obj_pitch,obj_yaw
// Recording CSV appends palm_x..palm_yaw. Empty cells mark missing samples.

std::string trajectory_csv_header();
std::string recording_csv_header();

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& t);
Trajectory read_trajectory_csv(const std::filesystem::path& path);

/// Single-frame files reuse the trajectory layout with one data row.
void write_frame_csv(const std::filesystem::path& path, const Frame& f);
Frame read_frame_csv(const std::filesystem::path& path);

void write_recording_csv(const std::filesystem::path& path, const Recording& r);
Recording read_recording_csv(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Dictionary / demo-matrix container: JSON metadata plus a row-major matrix
// payload, either a sidecar binary of little-endian 64-bit floats
// ("<name>.w.bin" next to the JSON) or decimal CSV text embedded in the JSON.

enum class MatrixStorage { binary, csv };

void save_dictionary(const std::filesystem::path& path, const Dictionary& d,
                     MatrixStorage storage = MatrixStorage::binary);
Dictionary load_dictionary(const std::filesystem::path& path);

void save_demo_matrix(const std::filesystem::path& path, const DemoMatrix& m,
                      MatrixStorage storage = MatrixStorage::binary);
DemoMatrix load_demo_matrix(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Hashing / manifest

std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t hash_file(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  std::uint64_t hash = 0;
};

/// Writes {"format_version":1,"files":[{"path","fnv1a64"}...]} sorted by path.
void write_manifest(const std::filesystem::path& path,
                    const std::vector<ManifestEntry>& entries);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace manip::io
