#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hybridcrowd {

/// Euclidean projection onto the probability simplex {w >= 0, sum w = 1}
/// (sort-and-threshold). `v` must be non-empty.
std::vector<double> project_to_simplex(std::span<const double> v);

struct SimplexSolverOptions {
  double ridge = 0.0;  // pull toward uniform weights
  int max_iterations = 10000;
  double tolerance = 1e-9;  // sup-norm of the projected-gradient step
};

struct SimplexSolution {
  std::vector<double> weights;
  int iterations = 0;
  bool converged = false;
  double objective = 0.0;
};

/// Normal-equation form of a least-squares problem on dim columns:
/// gram = X^T X / n, cross = X^T y / n, target_sq = y^T y / n.
struct LeastSquaresMoments {
  std::size_t dim = 0;
  std::vector<double> gram;  // row-major dim x dim
  std::vector<double> cross;
  double target_sq = 0.0;
};

/// Builds the moments from `rows` (row-major n x dim) and `targets`.
LeastSquaresMoments least_squares_moments(std::span<const double> rows, std::size_t dim,
                                          std::span<const double> targets);

/// minimize  (1/n)||X w - y||^2 + ridge ||w - 1/dim||^2  subject to w on the
/// simplex, by accelerated projected gradient with adaptive restart, starting
/// from uniform weights. Deterministic.
SimplexSolution solve_simplex_least_squares(const LeastSquaresMoments& moments,
                                            const SimplexSolverOptions& options = {});

double simplex_objective(const LeastSquaresMoments& moments, std::span<const double> w,
                         double ridge);

}  // namespace hybridcrowd
