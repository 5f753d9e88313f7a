#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "manip/preprocess.hpp"
#include "manip/types.hpp"

namespace manip {

struct NmfConfig {
  int n_primitives = 200;
  int max_iters = 500;
  double rel_tol = 1e-6;  // on the relative change of the Frobenius residual
  std::uint64_t rng_seed = 0;
  double init_scale = 0.0;  // <= 0 selects sqrt(mean(V)/l) scaling
  std::string object_label;
};

/// Raw factor pair from the multiplicative-update iteration.
struct NmfFactors {
  Eigen::MatrixXd w;  // n x l
  Eigen::MatrixXd h;  // l x m
  std::vector<double> objective_trace;  // ||V - WH||_F after each iteration
  int iterations = 0;
};

struct NmfResult {
  Dictionary dictionary;
  Eigen::MatrixXd activations;  // l x m
  std::vector<double> objective_trace;
};

/// Multiplicative updates for the Frobenius objective on a raw non-negative
/// matrix. Stops when the relative objective change drops below rel_tol or
/// after max_iters. Deterministic for a fixed seed.
NmfFactors nmf_multiplicative(const Eigen::MatrixXd& v, int n_primitives,
                              int max_iters, double rel_tol, std::uint64_t seed,
                              double init_scale = 0.0);

/// Factorizes a demo matrix into a Dictionary plus activations, carrying the
/// offsets metadata through. Throws RankTooLarge when l >= m and
/// NonNegativityViolated on bad input.
NmfResult nmf_factorize(const DemoMatrix& v, const NmfConfig& cfg);

/// Reconstruction accuracy in physical units, aggregated over every column
/// and time step: Euclidean fingertip/object-translation errors and signed
/// per-axis orientation differences.
struct ErrorTable {
  struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
  };
  std::array<MeanStd, kNumFingers> finger_mm;
  MeanStd object_translation_mm;
  std::array<MeanStd, 3> object_orientation_rad;  // roll, pitch, yaw
};

/// Compares two stacked-column matrices in offset representation and reports
/// physical-unit errors (Table-style summary).
ErrorTable make_error_table(const Eigen::MatrixXd& original,
                            const Eigen::MatrixXd& recreated, int n_steps);

ErrorTable reconstruction_report(const NmfResult& res, const DemoMatrix& v);

/// Fixed-layout rendering, one row per finger/object quantity.
std::string render_error_table(const ErrorTable& t, const std::string& title);

}  // namespace manip
