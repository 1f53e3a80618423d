#pragma once

#include <cmath>
#include <fstream>
#include <optional>

#include "flowhom/geometry.hpp"

namespace flowhom {

struct DecayFit {
  double c = 0;
  double delta = 0;
  double r2 = 0;
  int n_samples = 0;
  double s_begin = 0, s_end = 0;

  bool ok(double r2_threshold = 0.98) const {
    return delta > 0 && r2 >= r2_threshold;
  }
};

struct TrajectoryLimit {
  int submanifold = -1;
  Vec point;
  double distance = 0;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> points;
  std::vector<double> speeds;
  bool reached_stop = false;               // terminated by |grad| < stop_speed
  std::optional<TrajectoryLimit> limit;    // present when reached_stop
  std::optional<DecayFit> fit;             // log-linear speed fit, when a window exists
};

struct IntegratorOptions {
  double horizon = 1e3;
  double stop_speed = 1e-9;
  double error_tol = 1e-10;
  double h0 = 1e-3;
  double h_min = 1e-12;
  double fit_speed_window = 1e-2;  // samples below this qualify for the decay fit
  int fit_min_samples = 20;
  double fit_threshold = 0.98;     // R^2 gate
};

namespace detail {

// one classic RK4 step of y' = F(y)
template <class F>
Vec rk4_step(F&& rhs, const Vec& y, double h) {
  Vec k1 = rhs(y);
  Vec k2 = rhs(y + 0.5 * h * k1);
  Vec k3 = rhs(y + 0.5 * h * k2);
  Vec k4 = rhs(y + h * k3);
  return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
}

inline std::optional<DecayFit> fit_exponential(const std::vector<double>& s,
                                               const std::vector<double>& speed,
                                               const IntegratorOptions& opt) {
  std::vector<size_t> qual;
  for (size_t i = 0; i < speed.size(); ++i)
    if (speed[i] > 0 && speed[i] < opt.fit_speed_window) qual.push_back(i);
  if (qual.size() < 2 * size_t(opt.fit_min_samples)) return std::nullopt;
  qual.erase(qual.begin(), qual.begin() + qual.size() / 2);  // last 50%
  if (qual.size() < size_t(opt.fit_min_samples)) return std::nullopt;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i : qual) {
    double x = s[i], y = std::log(speed[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double n = double(qual.size());
  double denom = n * sxx - sx * sx;
  if (denom <= 0) return std::nullopt;
  double slope = (n * sxy - sx * sy) / denom;
  double icept = (sy - slope * sx) / n;
  double ss_res = 0, ss_tot = 0, ybar = sy / n;
  for (size_t i : qual) {
    double y = std::log(speed[i]);
    double p = icept + slope * s[i];
    ss_res += (y - p) * (y - p);
    ss_tot += (y - ybar) * (y - ybar);
  }
  DecayFit fit;
  fit.c = std::exp(icept);
  fit.delta = -slope;
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 0.0;
  fit.n_samples = int(qual.size());
  fit.s_begin = s[qual.front()];
  fit.s_end = s[qual.back()];
  return fit;
}

}  // namespace detail

// Integrate y' = -grad f(y) from x0 with adaptive step-doubled RK4 and
// post-step Newton projection. Terminates when |grad| < stop_speed or the
// horizon is exceeded; on convergence identifies the nearest critical
// submanifold and fits speed ~ c exp(-delta s) on the late window.
inline Trajectory integrate_flow(const MorseBottProblem& pb, Vec x0,
                                 const IntegratorOptions& opt = {}) {
  const auto& M = pb.manifold;
  M.require_on_manifold(x0);
  auto rhs = [&](const Vec& y) -> Vec { return -gradient_unchecked(M, pb.f, y); };

  Trajectory tr;
  double s = 0, h = opt.h0;
  Vec y = M.project(x0);
  tr.times.push_back(s);
  tr.points.push_back(y);
  tr.speeds.push_back(rhs(y).norm());

  while (s < opt.horizon) {
    double sp = rhs(y).norm();
    if (sp < opt.stop_speed) {
      tr.reached_stop = true;
      break;
    }
    double err = 0;
    Vec y_next;
    while (true) {
      Vec big = detail::rk4_step(rhs, y, h);
      Vec half = detail::rk4_step(rhs, detail::rk4_step(rhs, y, h / 2), h / 2);
      err = (big - half).norm();
      if (err < opt.error_tol * (1 + y.norm()) || h <= opt.h_min) {
        y_next = half + (half - big) / 15.0;  // local extrapolation
        break;
      }
      h *= 0.5;
    }
    y = M.project(y_next);
    s += h;
    tr.times.push_back(s);
    tr.points.push_back(y);
    tr.speeds.push_back(rhs(y).norm());
    if (err < opt.error_tol * (1 + y.norm()) / 32.0) h = std::min(h * 2, opt.horizon);
  }

  tr.fit = detail::fit_exponential(tr.times, tr.speeds, opt);
  if (tr.reached_stop) {
    TrajectoryLimit lim;
    lim.point = tr.points.back();
    lim.submanifold = pb.nearest_submanifold(lim.point, &lim.distance);
    tr.limit = lim;
  }
  return tr;
}

// Time-t image of p under the negative gradient flow of h on a critical
// submanifold, w.r.t. the induced metric, integrated in the chart.
inline Vec flow_on_critical_manifold(const CriticalSubmanifold& sub, const Vec& p,
                                     double t, double tol = 1e-10) {
  if (t < 0) throw std::invalid_argument("flow time must be nonnegative");
  if (sub.dist_to(p) > 1e-6)
    throw off_manifold_error("point not on the critical submanifold", sub.dist_to(p));
  if (sub.dim == 0 || t == 0) return sub.param(sub.to_param(p));
  Vec u = sub.to_param(p);
  auto rhs = [&](const Vec& w) -> Vec { return -sub.h_grad_chart(sub.wrap(w)); };
  double s = 0, h = std::min(1e-3, t);
  while (s < t) {
    h = std::min(h, t - s);
    double err;
    Vec u_next;
    while (true) {
      Vec big = detail::rk4_step(rhs, u, h);
      Vec half = detail::rk4_step(rhs, detail::rk4_step(rhs, u, h / 2), h / 2);
      err = (big - half).norm();
      if (err < tol || h <= 1e-12) {
        u_next = half + (half - big) / 15.0;
        break;
      }
      h *= 0.5;
    }
    u = sub.wrap(u_next);
    s += h;
    if (err < tol / 32.0) h *= 2;
  }
  return sub.param(u);
}

// Forward (sign=+1) or backward (sign=-1) h-flow limit in the chart.
// Returns the index into sub.crit_h of the matched critical point, or -1.
inline int h_flow_limit(const CriticalSubmanifold& sub, Vec u, int sign,
                        Vec* limit_out = nullptr, double horizon = 200.0,
                        double stop = 1e-10, double match_tol = 1e-5) {
  if (sub.dim == 0) {
    if (limit_out) *limit_out = u;
    return 0;
  }
  auto rhs = [&](const Vec& w) -> Vec {
    return -double(sign) * sub.h_grad_chart(sub.wrap(w));
  };
  double s = 0, h = 1e-3;
  while (s < horizon) {
    if (sub.h_grad_chart(u).norm() < stop) break;
    double err;
    Vec u_next;
    while (true) {
      Vec big = detail::rk4_step(rhs, u, h);
      Vec half = detail::rk4_step(rhs, detail::rk4_step(rhs, u, h / 2), h / 2);
      err = (big - half).norm();
      if (err < 1e-10 || h <= 1e-12) {
        u_next = half + (half - big) / 15.0;
        break;
      }
      h *= 0.5;
    }
    u = sub.wrap(u_next);
    s += h;
    if (err < 1e-10 / 32.0) h *= 2;
  }
  if (limit_out) *limit_out = u;
  for (size_t i = 0; i < sub.crit_h.size(); ++i) {
    Vec d = u - sub.crit_h[i].u;
    double dist = 0;
    for (int a = 0; a < sub.dim; ++a)
      dist += (sub.periodic.empty() || sub.periodic[a])
                  ? wrap_signed(d[a]) * wrap_signed(d[a])
                  : d[a] * d[a];
    if (std::sqrt(dist) < match_tol) return int(i);
  }
  return -1;
}

inline void write_trajectory_csv(const Trajectory& tr, std::ostream& os) {
  int D = tr.points.empty() ? 0 : int(tr.points.front().size());
  os << "s";
  for (int i = 0; i < D; ++i) os << ",x" << i;
  os << ",speed\n";
  for (size_t k = 0; k < tr.times.size(); ++k) {
    os << tr.times[k];
    for (int i = 0; i < D; ++i) os << "," << tr.points[k][i];
    os << "," << tr.speeds[k] << "\n";
  }
}

inline void write_trajectory_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  write_trajectory_csv(tr, os);
}

}  // namespace flowhom
