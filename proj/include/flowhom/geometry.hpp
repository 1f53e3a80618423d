#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

#include "flowhom/common.hpp"

namespace flowhom {

// Embedded manifold: the zero set of a smooth constraint map R^D -> R^c
// (c = 0 means all of R^D). Points are kept on the constraint set by
// post-step Newton projection; the metric is the induced ambient one
// unless a perturbation field is installed.
struct ManifoldModel {
  int ambient_dim = 0;
  int codim = 0;
  std::function<Vec(const Vec&)> constraint;      // unused when codim == 0
  std::function<Mat(const Vec&)> metric;          // optional ambient metric field
  Tolerances tol;

  struct ChartSampler {
    std::string name;
    std::function<Vec(std::mt19937_64&)> draw;
  };
  std::vector<ChartSampler> chart_samplers;

  bool flat() const { return codim == 0; }

  Vec constraint_value(const Vec& x) const {
    if (flat()) return Vec::Zero(0);
    return constraint(x);
  }

  double constraint_norm(const Vec& x) const {
    return flat() ? 0.0 : constraint(x).norm();
  }

  // central-difference Jacobian of the constraint map
  Mat constraint_jacobian(const Vec& x) const {
    Mat J(codim, ambient_dim);
    const double h = tol.fd_step;
    Vec xp = x, xm = x;
    for (int i = 0; i < ambient_dim; ++i) {
      xp[i] = x[i] + h;
      xm[i] = x[i] - h;
      J.col(i) = (constraint(xp) - constraint(xm)) / (2 * h);
      xp[i] = x[i];
      xm[i] = x[i];
    }
    return J;
  }

  // Newton projection onto the constraint set, at most 5 iterations.
  // Rejects rank-deficient constraint Jacobians instead of regularizing.
  Vec project(Vec x) const { return project_to(std::move(x), tol.point_tol, 5); }

  Vec project_to(Vec x, double target, int iters) const {
    if (flat()) return x;
    for (int it = 0; it < iters; ++it) {
      Vec c = constraint(x);
      if (c.norm() < target) return x;
      Mat J = constraint_jacobian(x);
      Eigen::JacobiSVD<Mat> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
      if (svd.singularValues()(codim - 1) < 1e-8 * svd.singularValues()(0))
        throw std::runtime_error("degenerate constraint Jacobian (rank-deficient)");
      x -= svd.solve(c);
    }
    if (constraint(x).norm() >= std::max(target, tol.point_tol))
      throw off_manifold_error("Newton projection failed to converge",
                               constraint(x).norm());
    return x;
  }

  bool on_manifold(const Vec& x, double eps) const {
    return constraint_norm(x) < eps;
  }

  void require_on_manifold(const Vec& x) const {
    double d = constraint_norm(x);
    if (d >= 1e3 * tol.point_tol) {
      std::ostringstream os;
      os << "point off manifold, constraint residual " << d;
      throw off_manifold_error(os.str(), d);
    }
  }

  Mat metric_at(const Vec& x) const {
    if (metric) return metric(x);
    return Mat::Identity(ambient_dim, ambient_dim);
  }

  // Orthogonal projector (w.r.t. the ambient metric) onto ker d(constraint).
  // With the identity metric this is symmetric and idempotent.
  Mat tangent_projector(const Vec& x) const {
    Mat id = Mat::Identity(ambient_dim, ambient_dim);
    if (flat()) return id;
    Mat J = constraint_jacobian(x);
    if (!metric) {
      Mat JJt = J * J.transpose();
      return id - J.transpose() * JJt.ldlt().solve(J);
    }
    Mat Ginv = metric(x).ldlt().solve(id);
    Mat M = J * Ginv * J.transpose();
    return id - Ginv * J.transpose() * M.ldlt().solve(J);
  }

  // Orthonormal tangent basis (columns), from the spectral decomposition of
  // the Euclidean tangent projector.
  Mat tangent_basis(const Vec& x) const {
    if (flat()) return Mat::Identity(ambient_dim, ambient_dim);
    Mat J = constraint_jacobian(x);
    Mat JJt = J * J.transpose();
    Mat P = Mat::Identity(ambient_dim, ambient_dim) -
            J.transpose() * JJt.ldlt().solve(J);
    Eigen::SelfAdjointEigenSolver<Mat> es(P);
    int m = ambient_dim - codim;
    Mat T(ambient_dim, m);
    // eigenvalues ascending: tangent directions carry eigenvalue ~1
    for (int i = 0; i < m; ++i) T.col(i) = es.eigenvectors().col(ambient_dim - 1 - i);
    return T;
  }

  int dim() const { return ambient_dim - codim; }
};

namespace detail {

inline Vec fd_gradient(const ScalarField& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    xm[i] = x[i] - h;
    g[i] = (f(xp) - f(xm)) / (2 * h);
    xp[i] = x[i];
    xm[i] = x[i];
  }
  return g;
}

}  // namespace detail

// Gradient of f at x w.r.t. the induced metric: tangential part of the
// ambient finite-difference gradient. Falls back to Richardson extrapolation
// (steps 1e-4 and 1e-6) when the directional-derivative residual check fails.
inline Vec gradient(const ManifoldModel& M, const ScalarField& f, const Vec& x) {
  M.require_on_manifold(x);
  Mat P = M.tangent_projector(x);
  auto tangential = [&](const Vec& ambient_grad) -> Vec {
    if (!M.metric) return P * ambient_grad;
    return P * M.metric_at(x).ldlt().solve(ambient_grad);
  };
  Vec g = detail::fd_gradient(f, x, M.tol.fd_step);
  Vec v = tangential(g);
  // residual check: df(x)[v] should equal |v|_g^2
  double nv2 = M.metric ? double(v.transpose() * M.metric_at(x) * v) : v.squaredNorm();
  if (v.norm() > 1e-14) {
    double h = M.tol.fd_step;
    Vec u = v / v.norm();
    double dfv = (f(x + h * u) - f(x - h * u)) / (2 * h) * v.norm();
    if (std::abs(dfv - nv2) > M.tol.fd_tol * (1 + nv2)) {
      Vec g1 = detail::fd_gradient(f, x, 1e-4);
      Vec g2 = detail::fd_gradient(f, x, 1e-6);
      // error ~ c h^2: eliminate the leading term
      Vec gr = g2 + (g2 - g1) * (1e-6 * 1e-6) / (1e-4 * 1e-4 - 1e-6 * 1e-6);
      v = tangential(gr);
    }
  }
  return v;
}

// gradient without the constraint-residual precondition check (used inside
// integrators where the point is projected every step anyway)
inline Vec gradient_unchecked(const ManifoldModel& M, const ScalarField& f,
                              const Vec& x) {
  Mat P = M.tangent_projector(x);
  Vec g = detail::fd_gradient(f, x, M.tol.fd_step);
  if (!M.metric) return P * g;
  return P * M.metric_at(x).ldlt().solve(g);
}

struct HessianSpectrum {
  std::vector<double> eigenvalues;  // ascending
  Mat basis;                        // tangent directions used (columns)
  Mat matrix;                       // Hessian in that basis
  Mat directions;                   // ambient eigenvectors, columns sorted as eigenvalues
  bool trusted = true;              // false when x is not critical
  double grad_norm = 0.0;

  int count_negative(double zero_tol) const {
    int n = 0;
    for (double e : eigenvalues)
      if (e < -zero_tol) ++n;
    return n;
  }
  int count_kernel(double zero_tol) const {
    int n = 0;
    for (double e : eigenvalues)
      if (std::abs(e) <= zero_tol) ++n;
    return n;
  }
};

// Eigenvalues of the second derivative of f restricted to the tangent space,
// via mixed central differences along Newton-projected curves. Exact restricted
// Hessian at critical points of f|_M; flagged untrusted elsewhere.
inline HessianSpectrum hessian_spectrum(const ManifoldModel& M, const ScalarField& f,
                                        const Vec& x0) {
  HessianSpectrum out;
  // second differences divide by h^2, so the base point and the displaced
  // curve points all go through a machine-precision projection
  Vec x = M.flat() ? x0 : M.project_to(x0, 1e-14, 12);
  Vec g = gradient(M, f, x);
  out.grad_norm = g.norm();
  out.trusted = out.grad_norm < M.tol.crit_tol;
  Mat T = M.tangent_basis(x);
  int m = int(T.cols());
  out.basis = T;
  const double h = 1e-4;  // second differences lose more precision than first
  double f0 = f(x);
  auto along = [&](const Vec& v, double t) {
    return f(M.flat() ? Vec(x + t * v) : M.project_to(x + t * v, 1e-14, 12));
  };
  Mat H(m, m);
  for (int i = 0; i < m; ++i)
    H(i, i) = (along(T.col(i), h) - 2 * f0 + along(T.col(i), -h)) / (h * h);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) {
      Vec vw = T.col(i) + T.col(j);
      double dvw = (along(vw, h) - 2 * f0 + along(vw, -h)) / (h * h);
      H(i, j) = H(j, i) = 0.5 * (dvw - H(i, i) - H(j, j));
    }
  out.matrix = 0.5 * (H + H.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(out.matrix);
  out.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + m);
  out.directions = T * es.eigenvectors();  // already ascending
  return out;
}

// One connected component of crit(f), parameterized from a unit cube, with
// its own Morse function h and induced metric.
struct CriticalSubmanifold {
  int id = 0;
  std::string name;
  int dim = 0;  // 0 = point, 1 = curve
  int ind_f = 0;
  std::function<Vec(const Vec&)> param;     // [0,1)^dim -> ambient
  std::function<Vec(const Vec&)> to_param;  // ambient (near the set) -> chart
  std::vector<bool> periodic;               // per chart axis
  ScalarField h;                            // ambient field restricted to the set

  struct HCrit {
    std::string name;
    Vec u;  // chart coordinates
    int ind_h = 0;
  };
  std::vector<HCrit> crit_h;

  Vec point_of(const Vec& u) const { return param(u); }
  Vec crit_point(int i) const { return param(crit_h[i].u); }

  Vec wrap(Vec u) const {
    for (int i = 0; i < dim; ++i)
      if (periodic.empty() || periodic[i]) u[i] = wrap01(u[i]);
    return u;
  }

  double h_chart(const Vec& u) const { return h(param(u)); }

  // chart gradient of h w.r.t. the induced metric g0
  Vec h_grad_chart(const Vec& u, double fd = 1e-6) const {
    if (dim == 0) return Vec::Zero(0);
    Vec g(dim);
    Mat J(int(param(u).size()), dim);
    Vec up = u, um = u;
    for (int i = 0; i < dim; ++i) {
      up[i] = u[i] + fd;
      um[i] = u[i] - fd;
      g[i] = (h_chart(up) - h_chart(um)) / (2 * fd);
      J.col(i) = (param(up) - param(um)) / (2 * fd);
      up[i] = u[i];
      um[i] = u[i];
    }
    Mat G = J.transpose() * J;  // induced metric in the chart
    return G.ldlt().solve(g);
  }

  double dist_to(const Vec& ambient) const {
    return (ambient - param(to_param(ambient))).norm();
  }
};

struct MorseBottProblem {
  std::string name;
  ManifoldModel manifold;
  ScalarField f;
  std::vector<CriticalSubmanifold> submanifolds;
  bool nonconstant_flow = true;  // false when f is constant (no flow happens)

  const CriticalSubmanifold& sub(int id) const { return submanifolds.at(id); }

  int nearest_submanifold(const Vec& x, double* dist_out = nullptr) const {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& s : submanifolds) {
      double d = s.dist_to(x);
      if (d < best_d) {
        best_d = d;
        best = s.id;
      }
    }
    if (dist_out) *dist_out = best_d;
    return best;
  }
};

struct MorseBottReport {
  struct Row {
    int submanifold;
    std::string name;
    int samples;
    double max_grad_norm;
    int expected_kernel;
    int worst_kernel;
    int expected_ind_f;
    int worst_ind_f;
    bool h_crit_ok;  // listed crit_h points are nondegenerate critical points
    bool pass;
  };
  std::vector<Row> rows;
  bool pass = true;
};

// every listed h-critical point must have a vanishing chart gradient and a
// nondegenerate chart Hessian of h
inline bool check_h_critical_points(const CriticalSubmanifold& s,
                                    double grad_tol = 1e-6,
                                    double degen_tol = 1e-6) {
  if (s.dim == 0) return true;
  for (const auto& c : s.crit_h) {
    if (s.h_grad_chart(c.u).norm() >= grad_tol) return false;
    const double h = 1e-4;
    Vec up = c.u, um = c.u;
    up[0] += h;
    um[0] -= h;
    double second = (s.h_chart(s.wrap(up)) - 2 * s.h_chart(c.u) +
                     s.h_chart(s.wrap(um))) / (h * h);
    if (std::abs(second) < degen_tol) return false;
    if ((second < 0) != (c.ind_h == 1)) return false;  // index consistent
  }
  return true;
}

// Verify the Morse-Bott condition: at sampled points of every critical
// submanifold, |grad f| is small and dim ker(tangential Hessian) equals the
// submanifold dimension.
inline MorseBottReport check_morse_bott(const MorseBottProblem& pb,
                                        double zero_tol = 1e-4,
                                        int samples_per_dim = 12) {
  MorseBottReport rep;
  for (const auto& s : pb.submanifolds) {
    MorseBottReport::Row row{};
    row.submanifold = s.id;
    row.name = s.name;
    row.expected_kernel = s.dim;
    row.expected_ind_f = s.ind_f;
    row.worst_kernel = s.dim;
    row.worst_ind_f = s.ind_f;
    row.max_grad_norm = 0;
    int n = s.dim == 0 ? 1 : samples_per_dim;
    row.samples = n;
    row.h_crit_ok = check_h_critical_points(s);
    bool ok = row.h_crit_ok;
    for (int i = 0; i < n; ++i) {
      Vec u = s.dim == 0 ? Vec::Zero(0)
                         : Vec::Constant(1, (i + 0.31) / double(n));
      Vec x;
      try {
        x = pb.manifold.project(s.point_of(u));
      } catch (const std::exception&) {
        ok = false;  // parameterization leaves the manifold
        continue;
      }
      auto spec = hessian_spectrum(pb.manifold, pb.f, x);
      row.max_grad_norm = std::max(row.max_grad_norm, spec.grad_norm);
      int ker = spec.count_kernel(zero_tol);
      int neg = spec.count_negative(zero_tol);
      if (ker != s.dim) {
        ok = false;
        row.worst_kernel = ker;
      }
      if (neg != s.ind_f) {
        ok = false;
        row.worst_ind_f = neg;
      }
      if (spec.grad_norm >= pb.manifold.tol.crit_tol) ok = false;
    }
    row.pass = ok;
    rep.pass = rep.pass && ok;
    rep.rows.push_back(row);
  }
  return rep;
}

// Randomized sweep for critical points of f|_M not covered by the declared
// submanifolds: gradient descent on |grad f|^2 from chart-sampled seeds.
inline bool no_unlisted_critical_points(const MorseBottProblem& pb,
                                        std::mt19937_64& rng, int seeds = 24,
                                        double cover_tol = 1e-3) {
  if (pb.manifold.chart_samplers.empty()) return true;
  for (int s = 0; s < seeds; ++s) {
    const auto& sampler =
        pb.manifold.chart_samplers[s % pb.manifold.chart_samplers.size()];
    Vec x = pb.manifold.project(sampler.draw(rng));
    // crude descent on |grad|^2 with backtracking
    for (int it = 0; it < 400; ++it) {
      Vec g = gradient_unchecked(pb.manifold, pb.f, x);
      if (g.norm() < pb.manifold.tol.crit_tol) break;
      double step = 0.1;
      auto val = [&](const Vec& y) {
        return gradient_unchecked(pb.manifold, pb.f, y).squaredNorm();
      };
      double v0 = g.squaredNorm();
      while (step > 1e-12) {
        Vec y = pb.manifold.project(x - step * g);
        if (val(y) < v0) {
          x = y;
          break;
        }
        step *= 0.5;
      }
      if (step <= 1e-12) break;
    }
    if (gradient_unchecked(pb.manifold, pb.f, x).norm() < pb.manifold.tol.crit_tol) {
      double d;
      pb.nearest_submanifold(x, &d);
      if (d > cover_tol) return false;
    }
  }
  return true;
}

}  // namespace flowhom
