#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace flowhom {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

using ScalarField = std::function<double(const Vec&)>;

// Invalid input data (bad config, unregistered example, incompatible grid).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point handed to a manifold operation does not satisfy the constraint.
struct off_manifold_error : std::runtime_error {
  double distance;
  off_manifold_error(const std::string& what, double d)
      : std::runtime_error(what), distance(d) {}
};

// Shooting search found an unresolved cluster of near-duplicate solutions.
struct nontransversal_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A mod-2 count could not be certified within the search budget.
struct untrusted_count_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Tolerances {
  double point_tol = 1e-10;   // constraint residual after Newton projection
  double proj_tol = 1e-8;     // projector symmetry / idempotency
  double crit_tol = 1e-6;     // |grad f| at claimed critical points
  double fd_step = 1e-5;      // central-difference step
  double fd_tol = 1e-4;       // gradient directional-derivative residual
  double hess_zero_tol = 1e-4;  // eigenvalue magnitude counted as kernel
};

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& rng, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(rng);
}

inline Vec random_unit_vector(std::mt19937_64& rng, int dim) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec v(dim);
  do {
    for (int i = 0; i < dim; ++i) v[i] = gauss(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

// wrap into [0,1)
inline double wrap01(double x) { return x - std::floor(x); }

// signed distance on the unit circle, in (-1/2, 1/2]
inline double wrap_signed(double d) {
  d = d - std::floor(d);
  if (d > 0.5) d -= 1.0;
  return d;
}

}  // namespace flowhom
