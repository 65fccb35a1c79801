#include "hybridcrowd/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "hybridcrowd/error.hpp"

namespace hybridcrowd {

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("cannot project an empty vector onto the simplex");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double threshold = 0.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
    if (sorted[j] - candidate > 0.0) threshold = candidate;
  }
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - threshold, 0.0);
  return w;
}

LeastSquaresMoments least_squares_moments(std::span<const double> rows, std::size_t dim,
                                          std::span<const double> targets) {
  const std::size_t n = targets.size();
  if (dim == 0 || rows.size() != n * dim) throw InvalidArgument("design matrix shape mismatch");
  LeastSquaresMoments m;
  m.dim = dim;
  m.gram.assign(dim * dim, 0.0);
  m.cross.assign(dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* x = rows.data() + r * dim;
    for (std::size_t i = 0; i < dim; ++i) {
      m.cross[i] += x[i] * targets[r];
      for (std::size_t j = i; j < dim; ++j) m.gram[i * dim + j] += x[i] * x[j];
    }
    m.target_sq += targets[r] * targets[r];
  }
  const double inv = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    m.cross[i] *= inv;
    for (std::size_t j = i; j < dim; ++j) {
      m.gram[i * dim + j] *= inv;
      m.gram[j * dim + i] = m.gram[i * dim + j];
    }
  }
  m.target_sq *= inv;
  return m;
}

double simplex_objective(const LeastSquaresMoments& m, std::span<const double> w, double ridge) {
  const std::size_t d = m.dim;
  const double uniform = 1.0 / static_cast<double>(d);
  double value = m.target_sq;
  for (std::size_t i = 0; i < d; ++i) {
    double gw = 0.0;
    for (std::size_t j = 0; j < d; ++j) gw += m.gram[i * d + j] * w[j];
    value += w[i] * gw - 2.0 * m.cross[i] * w[i] + ridge * (w[i] - uniform) * (w[i] - uniform);
  }
  return value;
}

namespace {

void gradient(const LeastSquaresMoments& m, double ridge, std::span<const double> w,
              std::vector<double>& out) {
  const std::size_t d = m.dim;
  const double uniform = 1.0 / static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    double gw = 0.0;
    for (std::size_t j = 0; j < d; ++j) gw += m.gram[i * d + j] * w[j];
    out[i] = 2.0 * (gw - m.cross[i]) + 2.0 * ridge * (w[i] - uniform);
  }
}

// Upper bound on the largest eigenvalue of the PSD gram matrix.
double spectral_bound(const LeastSquaresMoments& m) {
  const std::size_t d = m.dim;
  double gershgorin = 0.0;
  double trace = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < d; ++j) row += std::fabs(m.gram[i * d + j]);
    gershgorin = std::max(gershgorin, row);
    trace += m.gram[i * d + i];
  }
  return std::min(gershgorin, trace);
}

double sup_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::fabs(a[i] - b[i]));
  return d;
}

}  // namespace

SimplexSolution solve_simplex_least_squares(const LeastSquaresMoments& m,
                                            const SimplexSolverOptions& options) {
  if (m.dim == 0) throw InvalidArgument("simplex problem has no columns");
  if (options.ridge < 0.0) throw InvalidArgument("ridge must be non-negative");
  const std::size_t d = m.dim;
  SimplexSolution solution;
  std::vector<double> w(d, 1.0 / static_cast<double>(d));
  const double lipschitz = 2.0 * (spectral_bound(m) + options.ridge);
  if (d == 1 || lipschitz <= 0.0) {
    solution.weights = w;
    solution.converged = true;
    solution.objective = simplex_objective(m, w, options.ridge);
    return solution;
  }
  const double step = 1.0 / lipschitz;

  std::vector<double> y = w;
  std::vector<double> g(d);
  std::vector<double> trial(d);
  double t = 1.0;
  for (int it = 1; it <= options.max_iterations; ++it) {
    gradient(m, options.ridge, y, g);
    for (std::size_t i = 0; i < d; ++i) trial[i] = y[i] - step * g[i];
    std::vector<double> next = project_to_simplex(trial);

    // Gradient-based restart: drop momentum when it points uphill.
    double uphill = 0.0;
    for (std::size_t i = 0; i < d; ++i) uphill += (y[i] - next[i]) * (next[i] - w[i]);
    const double t_next = (1.0 + std::sqrt(1.0 + 4.0 * t * t)) / 2.0;
    if (uphill > 0.0) {
      t = 1.0;
      y = next;
    } else {
      const double beta = (t - 1.0) / t_next;
      for (std::size_t i = 0; i < d; ++i) y[i] = next[i] + beta * (next[i] - w[i]);
      t = t_next;
    }
    w = std::move(next);
    solution.iterations = it;

    // Stationarity: length of the projected-gradient step taken from w.
    gradient(m, options.ridge, w, g);
    for (std::size_t i = 0; i < d; ++i) trial[i] = w[i] - step * g[i];
    if (sup_distance(project_to_simplex(trial), w) <= options.tolerance) {
      solution.converged = true;
      break;
    }
  }
  solution.weights = std::move(w);
  solution.objective = simplex_objective(m, solution.weights, options.ridge);
  return solution;
}

}  // namespace hybridcrowd
