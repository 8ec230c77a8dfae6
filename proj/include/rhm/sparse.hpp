#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "rhm/image.hpp"
#include "rhm/patch.hpp"

namespace rhm {

// Raw high-res patch dictionary D_h and its degraded twin D_l = (G B) D_h.
// Immutable after finalize(); shared freely across threads.
struct DictionaryPair {
  Eigen::MatrixXd hi;            // (H^2 C) x n raw patch columns
  Eigen::MatrixXd lo;            // degraded columns, (L^2 C) x n
  Eigen::VectorXd column_norms;  // l2 norms of lo's columns
  int n = 0;
  DegradeOperator op;
  std::uint64_t seed = 0;
  bool mean_centered = false;

  // Derived solver constants, filled by finalize().
  Eigen::VectorXd inv_norms;     // 1/column_norms, 0 for dead columns
  double lo_spectral_norm = 0;   // largest singular value of column-normalized lo

  void finalize();               // recomputes lo and all derived fields from hi
};

struct SolverConfig {
  // Residual tolerance as a fraction of ||x_l||_2 (the paper leaves epsilon
  // unspecified; this default is a documented guess).
  double epsilon = 0.01;
  // Initial l1 weight as a fraction of ||D_l^T x_l||_inf; continuation halves
  // it until the residual constraint holds.
  double lasso_weight = 0.1;
  int max_iterations = 500;      // total budget across continuation stages
  double convergence_tol = 1e-6;

  void validate() const;
};

struct SparseCode {
  Eigen::VectorXd alpha;
  double residual_norm = 0;
  bool converged = true;         // residual constraint met within budget
  int iterations = 0;

  int nonzeros(double tol = 1e-8) const;
};

// Per-iteration penalized objective (at the current continuation weight) plus
// the index where each stage begins; monotone non-increasing end to end.
struct SolveTrace {
  std::vector<double> objective;
  std::vector<int> stage_starts;
};

// n patch centers drawn uniformly (seeded, with replacement) from all fully
// interior positions across the given images.
DictionaryPair build_dictionary(const std::vector<const ImagePlane*>& images,
                                int patch_side, int n,
                                const DegradeOperator& op, std::uint64_t seed,
                                bool mean_center = false);

// min ||alpha||_1  s.t. ||D_l alpha - x_l||_2 <= eps, realized as monotone
// accelerated proximal-gradient on the column-normalized dictionary with a
// continuation loop over the l1 weight.
SparseCode solve_l1(const DictionaryPair& dict, const Eigen::VectorXd& x_l,
                    const SolverConfig& cfg, SolveTrace* trace = nullptr);

Eigen::VectorXd reconstruct_cs(const DictionaryPair& dict,
                               const Eigen::VectorXd& x_l,
                               const SolverConfig& cfg);

// LR outputs the blur-only observation itself (the operator must have
// down_factor 1).
Eigen::VectorXd reconstruct_lr(const Eigen::VectorXd& x_l,
                               const DegradeOperator& op);

// Per-channel bicubic upsampling (Catmull-Rom, a = -0.5, edge replication)
// of the L x L patch grid back to H x H.
Eigen::VectorXd reconstruct_bi(const Eigen::VectorXd& x_l, int patch_side,
                               int down_factor);

// Flat binary format: header (magic, H, C, g, n, sigma, seed, checksum of
// D_l) followed by row-major float64 D_h. D_l is recomputed on load and
// verified against the checksum.
void save_dictionary(const DictionaryPair& dict, const std::string& path);
DictionaryPair load_dictionary(const std::string& path);

}  // namespace rhm
