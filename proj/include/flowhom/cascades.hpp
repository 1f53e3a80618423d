#pragma once

#include <map>
#include <numbers>

#include "flowhom/flow.hpp"

namespace flowhom {

// A generator: critical point of h on one critical submanifold.
struct CritPoint {
  int sub = -1;
  int hidx = -1;
  std::string name;
  Vec u;       // chart coordinates on the submanifold
  Vec point;   // ambient
  int ind_f = 0;
  int ind_h = 0;
  double f_value = 0;

  int Ind() const { return ind_f + ind_h; }
};

inline std::vector<CritPoint> enumerate_generators(const MorseBottProblem& pb) {
  std::vector<CritPoint> out;
  for (const auto& s : pb.submanifolds)
    for (size_t i = 0; i < s.crit_h.size(); ++i) {
      CritPoint c;
      c.sub = s.id;
      c.hidx = int(i);
      c.name = s.name + (s.dim > 0 ? "/" + s.crit_h[i].name : "");
      c.u = s.crit_h[i].u;
      c.point = s.param(c.u);
      c.ind_f = s.ind_f;
      c.ind_h = s.crit_h[i].ind_h;
      c.f_value = pb.f(c.point);
      out.push_back(c);
    }
  return out;
}

inline int cascade_index(const CritPoint& c) { return c.ind_f + c.ind_h; }

inline int expected_moduli_dim(const CritPoint& c1, const CritPoint& c2) {
  return c1.Ind() - c2.Ind() - 1;
}

enum class PairClass { empty, zero_cascades_only, positive_cascades_only };

inline PairClass classify_pair(const CritPoint& c1, const CritPoint& c2,
                               double f_eq_tol = 1e-9) {
  if (c1.f_value < c2.f_value - f_eq_tol) return PairClass::empty;
  if (c1.f_value > c2.f_value + f_eq_tol) return PairClass::positive_cascades_only;
  return PairClass::zero_cascades_only;
}

inline const char* to_string(PairClass c) {
  switch (c) {
    case PairClass::empty: return "empty";
    case PairClass::zero_cascades_only: return "zero_cascades_only";
    default: return "positive_cascades_only";
  }
}

struct SearchParams {
  std::uint64_t seed = 0;
  int u_samples = 96;        // source-position grid on 1-d submanifolds
  int dir_samples = 96;      // angular grid on a 2-d unstable sphere
  int t_samples = 8;         // intermediate Morse-flow times (log grid plus 0)
  double t_max = 30.0;
  double eps_shoot = 1e-4;   // launch offset along the unstable sphere
  double match_tol = 1e-6;
  double dedup_radius = 1e-3;
  double refine_tol = 1e-10;
  int max_m = 3;
  long budget = 100000;      // shooting samples per pair
  double dwell_speed = 1e-3;   // interior dip below this ...
  double dwell_rise = 1e-1;    // ... followed by a rise above this => broken
  int metric_retries = 3;
  IntegratorOptions integ{.horizon = 300.0, .stop_speed = 1e-9, .error_tol = 1e-9};
};

struct CascadeFlowLine {
  int m = 0;
  std::vector<Trajectory> cascades;            // m trajectories
  std::vector<double> times;                   // t_k, length max(m-1, 0)
  Vec source_witness;                          // p in W^u_h(c1), ambient
  Vec target_witness;                          // q in W^s_h(c2), ambient
  std::vector<double> params;                  // shooting key, for dedup
  double residual = 0;                         // endpoint chaining residual
  bool broken = false;                         // interior dwell: treated as a
                                               // Floer-Gromov boundary point
  bool positive_dimensional = false;           // member of a sampled family
};

namespace detail {

inline bool has_interior_dwell(const Trajectory& tr, const SearchParams& sp) {
  // a cascade launches near one critical set and stops at another, so slow
  // stretches at both ends are expected; only a dip between two fast
  // stretches marks a near-broken configuration
  bool armed = false, dipped = false;
  for (double v : tr.speeds) {
    if (!armed) {
      armed = v > sp.dwell_rise;
      continue;
    }
    if (v < sp.dwell_speed) dipped = true;
    else if (dipped && v > sp.dwell_rise) return true;
  }
  return false;
}

struct ShotOutcome {
  Trajectory traj;
  bool landed = false;
  int land_sub = -1;
  Vec land_u;
  Vec land_point;
  bool dwell = false;
};

struct Engine {
  const MorseBottProblem& pb;
  const SearchParams& sp;
  mutable long shots = 0;

  void charge() const {
    if (++shots > sp.budget)
      throw untrusted_count_error("shooting budget exhausted");
  }

  ShotOutcome shoot(const Vec& x_from, const Vec& dir) const {
    charge();
    ShotOutcome o;
    Vec x0 = pb.manifold.project(x_from + sp.eps_shoot * dir);
    o.traj = integrate_flow(pb, x0, sp.integ);
    o.dwell = has_interior_dwell(o.traj, sp);
    if (o.traj.reached_stop && o.traj.limit) {
      o.landed = true;
      o.land_sub = o.traj.limit->submanifold;
      o.land_point = o.traj.limit->point;
      o.land_u = pb.sub(o.land_sub).to_param(o.land_point);
    }
    return o;
  }

  // orthonormal descending directions of f at an ambient critical point
  std::vector<Vec> unstable_frame(const Vec& x) const {
    auto spec = hessian_spectrum(pb.manifold, pb.f, x);
    std::vector<Vec> dirs;
    for (size_t i = 0; i < spec.eigenvalues.size(); ++i)
      if (spec.eigenvalues[i] < -pb.manifold.tol.hess_zero_tol)
        dirs.push_back(spec.directions.col(int(i)));
    return dirs;
  }

  bool in_unstable_set(const CritPoint& c1, const Vec& u) const {
    return h_flow_limit(pb.sub(c1.sub), u, -1) == c1.hidx;
  }

  // ---- target scoring -------------------------------------------------
  // Signed chart mismatch when the landing submanifold carries the target
  // and ind_h(c2) > 0; NaN when the shot cannot be scored continuously.
  double chart_mismatch(const ShotOutcome& o, const CritPoint& c2) const {
    if (!o.landed || o.land_sub != c2.sub) return std::nan("");
    return wrap_signed(o.land_u[0] - c2.u[0]);
  }

  bool boolean_accept(const ShotOutcome& o, const CritPoint& c2) const {
    if (!o.landed || o.land_sub != c2.sub) return false;
    return h_flow_limit(pb.sub(c2.sub), o.land_u, +1) == c2.hidx;
  }

  // distance of the trajectory to a point target (for saddle-type targets
  // the connection shows up as a zero of the closest approach)
  double min_dist_score(const ShotOutcome& o, const CritPoint& c2,
                        Vec* nearest = nullptr) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& x : o.traj.points) {
      double d = (x - c2.point).norm();
      if (d < best) {
        best = d;
        if (nearest) *nearest = x;
      }
    }
    return best;
  }

  double exit_side(const ShotOutcome& o, const CritPoint& c2, const Vec& wu) const {
    Vec near_pt;
    min_dist_score(o, c2, &near_pt);
    double s = (near_pt - c2.point).dot(wu);
    return s >= 0 ? 1.0 : -1.0;
  }
};

}  // namespace detail

// Zero-cascade lines: ordinary Morse flow lines of h on one submanifold.
inline std::vector<CascadeFlowLine> find_zero_cascade_lines(
    const MorseBottProblem& pb, const CritPoint& c1, const CritPoint& c2,
    const SearchParams& sp) {
  std::vector<CascadeFlowLine> out;
  if (c1.sub != c2.sub || c1.hidx == c2.hidx) return out;
  const auto& s = pb.sub(c1.sub);
  if (s.dim == 0 || c1.ind_h == 0) return out;  // nothing flows out of a minimum
  const double eps = 1e-6;
  for (double sgn : {+1.0, -1.0}) {
    Vec u0 = c1.u;
    u0[0] = wrap01(u0[0] + sgn * eps);
    Vec limit_u;
    int hit = h_flow_limit(s, u0, +1, &limit_u);
    if (hit == c2.hidx) {
      CascadeFlowLine line;
      line.m = 0;
      line.source_witness = s.param(c1.u);
      line.target_witness = s.param(limit_u);
      line.params = {sgn};
      line.residual = (s.param(limit_u) - c2.point).norm();
      out.push_back(line);
    }
  }
  return out;
}

namespace detail {

struct StageSample {
  double axis_value = 0;       // continuous parameter (chart u or angle alpha)
  std::vector<double> key;     // full discrete+continuous key for dedup
  ShotOutcome outcome;
};

// Search for m >= 1 cascade lines. The continuous axis (when present) is the
// last stage's launch parameter; roots are refined by bisection.
struct CascadeSearch {
  const MorseBottProblem& pb;
  const CritPoint c1, c2;
  const SearchParams& sp;
  Engine eng;
  std::vector<CascadeFlowLine> found;

  CascadeSearch(const MorseBottProblem& p, const CritPoint& a, const CritPoint& b,
                const SearchParams& s)
      : pb(p), c1(a), c2(b), sp(s), eng{p, s} {}

  // launch parameterizations -------------------------------------------
  struct Launch {
    Vec x;                     // ambient launch base point
    std::vector<Vec> frame;    // unstable frame at x
  };

  Vec direction(const Launch& L, int branch, double alpha) const {
    if (L.frame.size() == 1) return branch == 0 ? L.frame[0] : Vec(-L.frame[0]);
    return std::cos(alpha) * L.frame[0] + std::sin(alpha) * L.frame[1];
  }

  // final-stage acceptance over one continuous sweep ----------------------
  void sweep_final(const Launch& L, std::vector<double> key_prefix,
                   std::vector<Trajectory> prefix_trajs,
                   std::vector<double> prefix_times) {
    const auto& target_sub = pb.sub(c2.sub);
    bool target_cont = target_sub.dim > 0 && c2.ind_h > 0;
    bool target_saddle_pt =
        target_sub.dim == 0 && pb.sub(c2.sub).ind_f >= 1;

    auto shot_at = [&](int branch, double alpha) {
      return eng.shoot(L.x, direction(L, branch, alpha));
    };

    int nbranch = L.frame.size() == 1 ? 2 : 1;
    int nsamp = L.frame.size() == 1 ? 1 : sp.dir_samples;

    for (int b = 0; b < nbranch; ++b) {
      std::vector<StageSample> row;
      for (int i = 0; i < nsamp; ++i) {
        double alpha = 2.0 * std::numbers::pi * (i + 0.13) / nsamp;
        StageSample ss;
        ss.axis_value = alpha;
        ss.key = key_prefix;
        ss.key.push_back(double(b));
        ss.key.push_back(alpha);
        ss.outcome = shot_at(b, alpha);
        row.push_back(std::move(ss));
      }
      if (nsamp == 1) {
        // fully discrete configuration: direct acceptance
        auto& ss = row[0];
        if (eng.boolean_accept(ss.outcome, c2))
          accept(ss, L, prefix_trajs, prefix_times, 0.0);
        else if (target_saddle_pt)
          refine_point_target_discrete(ss, L, prefix_trajs, prefix_times);
      } else if (target_cont) {
        refine_mismatch_roots(row, [&](double a) { return shot_at(b, a); }, L,
                              key_prefix, b, prefix_trajs, prefix_times, true);
      } else if (target_saddle_pt) {
        refine_point_target(row, [&](double a) { return shot_at(b, a); }, L,
                            key_prefix, b, prefix_trajs, prefix_times, true);
      } else {
        accept_boolean_runs(row, L, prefix_trajs, prefix_times);
      }
    }
  }

  // a continuous source position on a 1-d submanifold, discrete direction
  void sweep_source_axis(std::vector<double> key_prefix) {
    const auto& src = pb.sub(c1.sub);
    const auto& target_sub = pb.sub(c2.sub);
    bool target_cont = target_sub.dim > 0 && c2.ind_h > 0;
    bool target_saddle_pt = target_sub.dim == 0 && target_sub.ind_f >= 1;

    for (int b = 0; b < 2; ++b) {
      double sgn = b == 0 ? 1.0 : -1.0;
      auto shot_at = [&](double uval) -> ShotOutcome {
        Vec u(1);
        u << wrap01(uval);
        if (!eng.in_unstable_set(c1, u)) {
          ShotOutcome dead;  // outside W^u(c1): unscored
          return dead;
        }
        Vec x = pb.manifold.project(src.param(u));
        auto frame = eng.unstable_frame(x);
        if (frame.empty()) return ShotOutcome{};
        return eng.shoot(x, sgn * frame[0]);
      };
      std::vector<StageSample> row;
      for (int i = 0; i < sp.u_samples; ++i) {
        StageSample ss;
        ss.axis_value = (i + 0.37) / double(sp.u_samples);
        ss.key = key_prefix;
        ss.key.push_back(double(b));
        ss.key.push_back(ss.axis_value);
        ss.outcome = shot_at(ss.axis_value);
        row.push_back(std::move(ss));
      }
      Launch dummy;  // witnesses rebuilt in accept via source chart value
      if (target_cont)
        refine_mismatch_roots(row, shot_at, dummy, key_prefix, b, {}, {}, false);
      else if (target_saddle_pt)
        refine_point_target(row, shot_at, dummy, key_prefix, b, {}, {}, false);
      else
        accept_boolean_runs(row, dummy, {}, {});
    }
  }

  // ---- root refinement -------------------------------------------------
  template <class ShotFn>
  void refine_mismatch_roots(std::vector<StageSample>& row, ShotFn&& shot_at,
                             const Launch& L, const std::vector<double>& key_prefix,
                             int branch, const std::vector<Trajectory>& ptr,
                             const std::vector<double>& ptimes, bool angular) {
    const double period = angular ? 2.0 * std::numbers::pi : 1.0;
    auto mis = [&](const StageSample& s) { return eng.chart_mismatch(s.outcome, c2); };
    int n = int(row.size());
    for (int i = 0; i < n; ++i) {
      const auto& a = row[i];
      const auto& b = row[(i + 1) % n];
      double ma = mis(a), mb = mis(b);
      if (std::isnan(ma) || std::isnan(mb)) continue;
      if (ma == 0.0) ma = 1e-300;
      if (ma * mb >= 0) continue;
      if (std::abs(ma - mb) > 0.25) continue;  // wrap jump, not a crossing
      double lo = a.axis_value;
      double hi = b.axis_value > lo ? b.axis_value : b.axis_value + period;
      double mlo = ma;
      ShotOutcome best;
      for (int it = 0; it < 64 && hi - lo > sp.refine_tol; ++it) {
        double mid = 0.5 * (lo + hi);
        ShotOutcome om = shot_at(std::fmod(mid, period));
        double mm = eng.chart_mismatch(om, c2);
        if (std::isnan(mm)) break;
        best = om;
        if (mm * mlo <= 0) hi = mid;
        else {
          lo = mid;
          mlo = mm;
        }
      }
      double root = 0.5 * (lo + hi);
      ShotOutcome o = shot_at(std::fmod(root, period));
      double m = eng.chart_mismatch(o, c2);
      if (!std::isnan(m) && std::abs(m) < sp.match_tol) {
        StageSample ss;
        ss.axis_value = root;
        ss.key = key_prefix;
        ss.key.push_back(double(branch));
        ss.key.push_back(root);
        ss.outcome = std::move(o);
        accept(ss, L, ptr, ptimes, std::abs(m));
      }
    }
  }

  template <class ShotFn>
  void refine_point_target(std::vector<StageSample>& row, ShotFn&& shot_at,
                           const Launch& L, const std::vector<double>& key_prefix,
                           int branch, const std::vector<Trajectory>& ptr,
                           const std::vector<double>& ptimes, bool angular) {
    auto frame2 = eng.unstable_frame(c2.point);
    if (frame2.empty()) return;  // nothing can flow into a sink through here
    bool use_side = frame2.size() == 1;
    const double period = angular ? 2.0 * std::numbers::pi : 1.0;
    const double window = 0.2;  // only chase approaches that get reasonably close
    auto score = [&](const StageSample& s) {
      if (s.outcome.traj.points.empty()) return std::numeric_limits<double>::infinity();
      return eng.min_dist_score(s.outcome, c2);
    };
    int n = int(row.size());
    for (int i = 0; i < n; ++i) {
      const auto& a = row[i];
      const auto& b = row[(i + 1) % n];
      if (score(a) > window && score(b) > window) continue;
      if (a.outcome.traj.points.empty() || b.outcome.traj.points.empty()) continue;
      double lo = a.axis_value;
      double hi = b.axis_value > lo ? b.axis_value : b.axis_value + period;
      ShotOutcome oa = a.outcome;
      if (use_side) {
        double sa = eng.exit_side(oa, c2, frame2[0]);
        double sb = eng.exit_side(b.outcome, c2, frame2[0]);
        if (sa == sb) continue;
        for (int it = 0; it < 80 && hi - lo > sp.refine_tol; ++it) {
          double mid = 0.5 * (lo + hi);
          ShotOutcome om = shot_at(std::fmod(mid, period));
          if (om.traj.points.empty()) break;
          if (eng.exit_side(om, c2, frame2[0]) == sa) lo = mid;
          else hi = mid;
        }
      } else {
        // golden-section descent on the closest approach
        double gr = (std::sqrt(5.0) - 1) / 2;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = eng.min_dist_score(shot_at(std::fmod(x1, period)), c2);
        double f2 = eng.min_dist_score(shot_at(std::fmod(x2, period)), c2);
        for (int it = 0; it < 80 && hi - lo > sp.refine_tol; ++it) {
          if (f1 < f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eng.min_dist_score(shot_at(std::fmod(x1, period)), c2);
          } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eng.min_dist_score(shot_at(std::fmod(x2, period)), c2);
          }
        }
      }
      double root = 0.5 * (lo + hi);
      ShotOutcome o = shot_at(std::fmod(root, period));
      double d = eng.min_dist_score(o, c2);
      if (d < sp.match_tol) {
        StageSample ss;
        ss.axis_value = root;
        ss.key = key_prefix;
        ss.key.push_back(double(branch));
        ss.key.push_back(root);
        ss.outcome = std::move(o);
        accept(ss, L, ptr, ptimes, d);
      }
    }
  }

  void refine_point_target_discrete(StageSample& ss, const Launch& L,
                                    const std::vector<Trajectory>& ptr,
                                    const std::vector<double>& ptimes) {
    double d = eng.min_dist_score(ss.outcome, c2);
    if (d < sp.match_tol) accept(ss, L, ptr, ptimes, d);
  }

  void accept_boolean_runs(std::vector<StageSample>& row, const Launch&,
                           const std::vector<Trajectory>& ptr,
                           const std::vector<double>& ptimes) {
    // open acceptance condition: a run of consecutive accepted samples is one
    // (possibly positive-dimensional) family; an isolated accept is one line
    int n = int(row.size());
    std::vector<bool> ok(n);
    for (int i = 0; i < n; ++i) ok[i] = eng.boolean_accept(row[i].outcome, c2);
    std::vector<int> run_id(n, -1);
    int runs = 0;
    for (int i = 0; i < n; ++i) {
      if (!ok[i]) continue;
      if (i > 0 && ok[i - 1])
        run_id[i] = run_id[i - 1];
      else
        run_id[i] = runs++;
    }
    if (n > 1 && ok[0] && ok[n - 1] && run_id[0] != run_id[n - 1]) {
      int merge = run_id[n - 1];
      for (int i = 0; i < n; ++i)
        if (run_id[i] == merge) run_id[i] = run_id[0];
      --runs;
    }
    std::map<int, int> rep;
    for (int i = 0; i < n; ++i)
      if (ok[i] && !rep.count(run_id[i])) rep[run_id[i]] = i;
    for (auto& [rid, i] : rep) {
      int len = 0;
      for (int j = 0; j < n; ++j)
        if (run_id[j] == rid) ++len;
      StageSample& ss = row[i];
      bool family = len > 2 && n > 2;
      accept(ss, Launch{}, ptr, ptimes, 0.0, family);
    }
  }

  void accept(const StageSample& ss, const Launch&,
              const std::vector<Trajectory>& prefix_trajs,
              const std::vector<double>& prefix_times, double residual,
              bool family = false) {
    CascadeFlowLine line;
    line.m = int(prefix_trajs.size()) + 1;
    line.cascades = prefix_trajs;
    line.cascades.push_back(ss.outcome.traj);
    line.times = prefix_times;
    line.params = ss.key;
    line.source_witness = line.cascades.front().points.front();
    line.target_witness = ss.outcome.landed ? ss.outcome.land_point
                                            : ss.outcome.traj.points.back();
    line.residual = residual;
    line.broken = false;
    for (const auto& t : line.cascades)
      if (has_interior_dwell(t, sp)) line.broken = true;
    line.positive_dimensional = family;
    found.push_back(std::move(line));
  }

  // ---- multi-cascade recursion ------------------------------------------
  void recurse(int from_sub, const Vec& from_u, int remaining,
               std::vector<double> key_prefix, std::vector<Trajectory> trajs,
               std::vector<double> times) {
    Vec x = pb.manifold.project(pb.sub(from_sub).param(from_u));
    Launch L{x, eng.unstable_frame(x)};
    if (L.frame.empty()) return;
    if (remaining == 1) {
      sweep_final(L, key_prefix, trajs, times);
      return;
    }
    int nbranch = L.frame.size() == 1 ? 2 : 1;
    int nsamp = L.frame.size() == 1 ? 1 : std::max(8, sp.dir_samples / 4);
    for (int b = 0; b < nbranch; ++b)
      for (int i = 0; i < nsamp; ++i) {
        double alpha = 2.0 * std::numbers::pi * (i + 0.29) / nsamp;
        auto o = eng.shoot(x, direction(L, b, alpha));
        if (!o.landed || o.dwell) continue;
        double f_here = pb.f(x), f_land = pb.f(o.land_point);
        if (f_land >= f_here - 1e-9) continue;  // cascades strictly descend
        if (f_land < c2.f_value - 1e-9) continue;
        for (int ti = 0; ti <= sp.t_samples; ++ti) {
          double t = ti == 0 ? 0.0
                             : sp.t_max * std::pow(10.0, -3.0 * (sp.t_samples - ti) /
                                                              double(sp.t_samples));
          Vec y = o.land_point;
          if (pb.sub(o.land_sub).dim > 0 && t > 0)
            y = flow_on_critical_manifold(pb.sub(o.land_sub), o.land_point, t);
          auto kp = key_prefix;
          kp.push_back(double(b));
          kp.push_back(alpha);
          kp.push_back(t);
          auto tr2 = trajs;
          tr2.push_back(o.traj);
          auto tm2 = times;
          tm2.push_back(t);
          recurse(o.land_sub, pb.sub(o.land_sub).to_param(y), remaining - 1, kp,
                  tr2, tm2);
        }
      }
  }

  void run(int m) {
    const auto& src = pb.sub(c1.sub);
    if (src.ind_f == 0) return;  // nothing descends from a normal minimum
    if (src.dim > 0 && c1.ind_h > 0) {
      if (m == 1) {
        sweep_source_axis({});
      } else {
        // sample the source unstable set, then recurse
        for (int i = 0; i < sp.u_samples / 4; ++i) {
          Vec u(1);
          u << (i + 0.37) / double(sp.u_samples / 4);
          if (!eng.in_unstable_set(c1, u)) continue;
          recurse(c1.sub, u, m, {double(i)}, {}, {});
        }
      }
    } else {
      recurse(c1.sub, c1.u, m, {}, {}, {});
    }
  }
};

inline Vec line_waypoint(const CascadeFlowLine& l) {
  const auto& pts = l.cascades.front().points;
  return pts[pts.size() / 2];
}

inline std::vector<CascadeFlowLine> dedup_lines(std::vector<CascadeFlowLine> lines,
                                                const SearchParams& sp) {
  // Coincident shooting parameters (within refinement precision), or
  // identical endpoints travelled along the same arc, are one geometric
  // line. Distinct refined solutions that still huddle inside dedup_radius
  // have not separated under refinement: a transversality failure.
  const double same_root = 1e3 * sp.refine_tol;
  std::vector<CascadeFlowLine> out;
  for (auto& l : lines) {
    bool dup = false;
    for (auto& o : out) {
      if (o.params.size() != l.params.size() || o.m != l.m) continue;
      double d = 0;
      for (size_t i = 0; i < l.params.size(); ++i)
        d = std::max(d, std::abs(l.params[i] - o.params[i]));
      double endpoint_gap = (o.target_witness - l.target_witness).norm() +
                            (o.source_witness - l.source_witness).norm();
      double waypoint_gap =
          l.cascades.empty() ? std::numeric_limits<double>::infinity()
                             : (line_waypoint(l) - line_waypoint(o)).norm();
      if (d < same_root) {
        dup = true;
        break;
      }
      if (d < sp.dedup_radius && !l.positive_dimensional && !o.positive_dimensional)
        throw nontransversal_error(
            "near-duplicate solutions did not converge under refinement");
      if (endpoint_gap < sp.dedup_radius && waypoint_gap < sp.dedup_radius) {
        dup = true;  // same geometric arc reached through another branch
        break;
      }
    }
    if (!dup) out.push_back(std::move(l));
  }
  return out;
}

}  // namespace detail

// Flow lines with m cascades from c1 to c2. Requests inconsistent with the
// f-level trichotomy return empty; set assume_lemma=false to search anyway
// (used by the trichotomy scan).
inline std::vector<CascadeFlowLine> find_cascades(const MorseBottProblem& pb,
                                                  const CritPoint& c1,
                                                  const CritPoint& c2, int m,
                                                  const SearchParams& sp,
                                                  bool assume_lemma = true) {
  if (c1.sub == c2.sub && c1.hidx == c2.hidx) return {};
  PairClass cls = classify_pair(c1, c2);
  if (assume_lemma) {
    if (cls == PairClass::empty) return {};
    if (cls == PairClass::zero_cascades_only && m > 0) return {};
    if (cls == PairClass::positive_cascades_only && m == 0) return {};
  }
  if (m == 0) return find_zero_cascade_lines(pb, c1, c2, sp);
  detail::CascadeSearch search(pb, c1, c2, sp);
  search.run(m);
  auto lines = detail::dedup_lines(std::move(search.found), sp);
  // corner configurations (some t_k ~ 0) belong to the stratum with fewer
  // cascades and are dropped here to avoid double counting
  if (m >= 2) {
    std::erase_if(lines, [](const CascadeFlowLine& l) {
      for (double t : l.times)
        if (t <= 1e-9) return true;
      return false;
    });
  }
  return lines;
}

// number of distinct critical f-levels in [f(c2), f(c1)] minus one
inline int cascade_level_bound(const MorseBottProblem& pb, const CritPoint& c1,
                               const CritPoint& c2) {
  std::vector<double> levels;
  for (const auto& s : pb.submanifolds) {
    double v = pb.f(s.param(s.dim == 0 ? Vec::Zero(0) : Vec::Constant(1, 0.0)));
    if (v > c2.f_value - 1e-9 && v < c1.f_value + 1e-9) {
      bool seen = false;
      for (double w : levels)
        if (std::abs(w - v) < 1e-9) seen = true;
      if (!seen) levels.push_back(v);
    }
  }
  return std::max(1, int(levels.size()) - 1);
}

namespace detail {

inline int count_all_m(const MorseBottProblem& pb, const CritPoint& c1,
                       const CritPoint& c2, const SearchParams& sp) {
  PairClass cls = classify_pair(c1, c2);
  if (cls == PairClass::empty) return 0;
  long total = 0;
  std::vector<CascadeFlowLine> all;
  if (cls == PairClass::zero_cascades_only) {
    all = find_cascades(pb, c1, c2, 0, sp);
  } else {
    int mmax = std::min(sp.max_m, cascade_level_bound(pb, c1, c2));
    for (int m = 1; m <= mmax; ++m) {
      auto lines = find_cascades(pb, c1, c2, m, sp);
      all.insert(all.end(), lines.begin(), lines.end());
    }
  }
  for (const auto& l : all) {
    if (l.positive_dimensional)
      throw nontransversal_error("positive-dimensional family in a 0-d count: " +
                                 c1.name + " -> " + c2.name);
    if (!l.broken) ++total;
  }
  return int(total % 2);
}

}  // namespace detail

// install a small random non-conformal metric perturbation (a conformal
// factor would leave gradient flow lines unchanged)
inline MorseBottProblem perturb_metric(const MorseBottProblem& pb,
                                       std::uint64_t seed, double eta = 1e-4) {
  MorseBottProblem out = pb;
  auto rng = make_rng(seed);
  int D = pb.manifold.ambient_dim;
  Mat B = Mat::Zero(D, D);
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j) B(i, j) = B(j, i) = uniform(rng, -1.0, 1.0);
  out.manifold.metric = [D, B, eta](const Vec& x) {
    double w = 1.0 + 0.1 * x.squaredNorm();
    return Mat(Mat::Identity(D, D) + (eta / w) * B);
  };
  return out;
}

// #M(c1,c2) mod 2 over all cascade counts. Requires Ind difference 1.
// Non-transversal clusters trigger a metric perturbation retry.
inline int count_mod2(const MorseBottProblem& pb, const CritPoint& c1,
                      const CritPoint& c2, const SearchParams& sp) {
  if (c1.Ind() - c2.Ind() != 1)
    throw std::invalid_argument("count_mod2 requires index difference 1");
  for (int attempt = 0;; ++attempt) {
    try {
      const MorseBottProblem* use = &pb;
      MorseBottProblem perturbed;
      if (attempt > 0) {
        perturbed = perturb_metric(pb, sp.seed + 77 * attempt);
        use = &perturbed;
      }
      return detail::count_all_m(*use, c1, c2, sp);
    } catch (const nontransversal_error&) {
      if (attempt >= sp.metric_retries) throw;
    }
  }
}

struct TrichotomyScan {
  struct Row {
    std::string from, to;
    PairClass cls;
    int zero_cascade_lines = 0;
    int positive_cascade_lines = 0;
    bool consistent = true;
  };
  std::vector<Row> rows;
  bool consistent = true;
};

// Search every ordered generator pair without assuming the trichotomy and
// confirm the findings obey it.
inline TrichotomyScan scan_trichotomy(const MorseBottProblem& pb,
                                      const SearchParams& sp) {
  TrichotomyScan scan;
  auto gens = enumerate_generators(pb);
  for (const auto& a : gens)
    for (const auto& b : gens) {
      if (a.sub == b.sub && a.hidx == b.hidx) continue;
      TrichotomyScan::Row row;
      row.from = a.name;
      row.to = b.name;
      row.cls = classify_pair(a, b);
      row.zero_cascade_lines =
          int(find_cascades(pb, a, b, 0, sp, /*assume_lemma=*/false).size());
      int mmax = std::min(2, std::min(sp.max_m, cascade_level_bound(pb, a, b)));
      for (int m = 1; m <= mmax; ++m)
        row.positive_cascade_lines +=
            int(find_cascades(pb, a, b, m, sp, /*assume_lemma=*/false).size());
      switch (row.cls) {
        case PairClass::empty:
          row.consistent =
              row.zero_cascade_lines == 0 && row.positive_cascade_lines == 0;
          break;
        case PairClass::zero_cascades_only:
          row.consistent = row.positive_cascade_lines == 0;
          break;
        case PairClass::positive_cascades_only:
          row.consistent = row.zero_cascade_lines == 0;
          break;
      }
      scan.consistent = scan.consistent && row.consistent;
      scan.rows.push_back(row);
    }
  return scan;
}

inline void write_cascade_csv(const CascadeFlowLine& line, std::ostream& os) {
  int D = 0;
  for (const auto& t : line.cascades)
    if (!t.points.empty()) D = int(t.points.front().size());
  os << "segment,s";
  for (int i = 0; i < D; ++i) os << ",x" << i;
  os << ",speed\n";
  for (size_t seg = 0; seg < line.cascades.size(); ++seg) {
    const auto& t = line.cascades[seg];
    for (size_t k = 0; k < t.times.size(); ++k) {
      os << seg << "," << t.times[k];
      for (int i = 0; i < D; ++i) os << "," << t.points[k][i];
      os << "," << t.speeds[k] << "\n";
    }
  }
}

}  // namespace flowhom
