#pragma once

#include <cmath>
#include <numbers>

#include "flowhom/geometry.hpp"

namespace flowhom {

// Built-in desk-scale problems. All manifolds are embedded with polynomial
// constraints; all h's are ambient coordinate functions restricted to the
// critical set, so every derivative a test needs is available in closed form.
namespace registry {

constexpr double tau_circ = 2.0 * std::numbers::pi;

inline Vec v3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}
inline Vec v4(double a, double b, double c, double d) {
  Vec v(4);
  v << a, b, c, d;
  return v;
}

inline ManifoldModel sphere2() {
  ManifoldModel M;
  M.ambient_dim = 3;
  M.codim = 1;
  M.constraint = [](const Vec& x) {
    Vec c(1);
    c << x.squaredNorm() - 1.0;
    return c;
  };
  M.chart_samplers.push_back({"uniform", [](std::mt19937_64& rng) {
                                Vec v = random_unit_vector(rng, 3);
                                return v;
                              }});
  return M;
}

inline ManifoldModel torus2() {
  // S^1 x S^1 in R^4; the induced metric is flat
  ManifoldModel M;
  M.ambient_dim = 4;
  M.codim = 2;
  M.constraint = [](const Vec& x) {
    Vec c(2);
    c << x[0] * x[0] + x[1] * x[1] - 1.0, x[2] * x[2] + x[3] * x[3] - 1.0;
    return c;
  };
  M.chart_samplers.push_back({"angles", [](std::mt19937_64& rng) {
                                double a = uniform(rng, 0, tau_circ);
                                double b = uniform(rng, 0, tau_circ);
                                return v4(std::cos(a), std::sin(a), std::cos(b),
                                          std::sin(b));
                              }});
  return M;
}

inline ManifoldModel circle1() {
  ManifoldModel M;
  M.ambient_dim = 2;
  M.codim = 1;
  M.constraint = [](const Vec& x) {
    Vec c(1);
    c << x.squaredNorm() - 1.0;
    return c;
  };
  M.chart_samplers.push_back({"uniform", [](std::mt19937_64& rng) {
                                double a = uniform(rng, 0, tau_circ);
                                Vec v(2);
                                v << std::cos(a), std::sin(a);
                                return v;
                              }});
  return M;
}

inline ManifoldModel euclidean(int dim, double box = 2.0) {
  ManifoldModel M;
  M.ambient_dim = dim;
  M.codim = 0;
  M.chart_samplers.push_back({"box", [dim, box](std::mt19937_64& rng) {
                                Vec v(dim);
                                for (int i = 0; i < dim; ++i)
                                  v[i] = uniform(rng, -box, box);
                                return v;
                              }});
  return M;
}

inline CriticalSubmanifold point_sub(int id, std::string name, Vec x, int ind_f) {
  CriticalSubmanifold s;
  s.id = id;
  s.name = std::move(name);
  s.dim = 0;
  s.ind_f = ind_f;
  s.param = [x](const Vec&) { return x; };
  s.to_param = [](const Vec&) { return Vec::Zero(0); };
  s.h = [](const Vec&) { return 0.0; };
  s.crit_h.push_back({s.name, Vec::Zero(0), 0});
  return s;
}

// circle obtained by rotating coordinates (i,j) of a template point
inline CriticalSubmanifold circle_sub(int id, std::string name, Vec base, int ci,
                                      int cj, int ind_f, int h_coord) {
  CriticalSubmanifold s;
  s.id = id;
  s.name = std::move(name);
  s.dim = 1;
  s.ind_f = ind_f;
  s.periodic = {true};
  s.param = [base, ci, cj](const Vec& u) {
    Vec x = base;
    x[ci] = std::cos(tau_circ * u[0]);
    x[cj] = std::sin(tau_circ * u[0]);
    return x;
  };
  s.to_param = [ci, cj](const Vec& x) {
    Vec u(1);
    u << wrap01(std::atan2(x[cj], x[ci]) / tau_circ);
    return u;
  };
  // h = ambient coordinate h_coord restricted to the circle; on the circle
  // this is cos(2 pi u) when h_coord == ci
  s.h = [h_coord](const Vec& x) { return x[h_coord]; };
  Vec umax(1), umin(1);
  umax << 0.0;
  umin << 0.5;
  s.crit_h.push_back({"max", umax, 1});
  s.crit_h.push_back({"min", umin, 0});
  return s;
}

inline MorseBottProblem s2_height() {
  MorseBottProblem pb;
  pb.name = "s2-height";
  pb.manifold = sphere2();
  pb.f = [](const Vec& x) { return x[2]; };
  pb.submanifolds.push_back(point_sub(0, "N", v3(0, 0, 1), 2));
  pb.submanifolds.push_back(point_sub(1, "S", v3(0, 0, -1), 0));
  return pb;
}

inline MorseBottProblem s2_z2() {
  MorseBottProblem pb;
  pb.name = "s2-z2";
  pb.manifold = sphere2();
  pb.f = [](const Vec& x) { return x[2] * x[2]; };
  pb.submanifolds.push_back(point_sub(0, "N", v3(0, 0, 1), 2));
  pb.submanifolds.push_back(point_sub(1, "S", v3(0, 0, -1), 2));
  // equator, h = x restricted: saddle at azimuth 0, minimum at 1/2
  pb.submanifolds.push_back(circle_sub(2, "equator", v3(0, 0, 0), 0, 1, 0, 0));
  return pb;
}

inline MorseBottProblem t2_cos() {
  MorseBottProblem pb;
  pb.name = "t2-cos";
  pb.manifold = torus2();
  pb.f = [](const Vec& x) { return x[0]; };  // cos(2 pi theta1) on the torus
  // critical circles {x1=+-1} carrying h = x2 = cos(2 pi theta2)
  pb.submanifolds.push_back(circle_sub(0, "top", v4(1, 0, 0, 0), 2, 3, 1, 2));
  pb.submanifolds.push_back(circle_sub(1, "bottom", v4(-1, 0, 0, 0), 2, 3, 0, 2));
  return pb;
}

inline MorseBottProblem t2_morse() {
  MorseBottProblem pb;
  pb.name = "t2-morse";
  pb.manifold = torus2();
  pb.f = [](const Vec& x) { return x[0] + 0.5 * x[2]; };
  pb.submanifolds.push_back(point_sub(0, "max", v4(1, 0, 1, 0), 2));
  pb.submanifolds.push_back(point_sub(1, "saddle-a", v4(1, 0, -1, 0), 1));
  pb.submanifolds.push_back(point_sub(2, "saddle-b", v4(-1, 0, 1, 0), 1));
  pb.submanifolds.push_back(point_sub(3, "min", v4(-1, 0, -1, 0), 0));
  return pb;
}

inline MorseBottProblem s1_flat() {
  MorseBottProblem pb;
  pb.name = "s1-flat";
  pb.manifold = circle1();
  pb.f = [](const Vec&) { return 0.0; };
  pb.nonconstant_flow = false;
  Vec base(2);
  base << 0, 0;
  pb.submanifolds.push_back(circle_sub(0, "circle", base, 0, 1, 0, 0));
  return pb;
}

inline MorseBottProblem model_x1sq_x2sq() {
  // f(x0,x1,x2) = x1^2 - x2^2 on R^3; crit(f) is the x0-axis
  MorseBottProblem pb;
  pb.name = "model-x1sq-x2sq";
  pb.manifold = euclidean(3);
  // seeds for decay runs stay in the stable slab x2 = 0 (the flow diverges
  // off it; the ambient space is noncompact)
  pb.manifold.chart_samplers.push_back(
      {"stable-slab", [](std::mt19937_64& rng) {
         return v3(uniform(rng, -2, 2), uniform(rng, -2, 2), 0.0);
       }});
  pb.f = [](const Vec& x) { return x[1] * x[1] - x[2] * x[2]; };
  CriticalSubmanifold s;
  s.id = 0;
  s.name = "axis";
  s.dim = 1;
  s.ind_f = 1;
  s.periodic = {false};
  s.param = [](const Vec& u) { return v3(10.0 * (u[0] - 0.5), 0, 0); };
  s.to_param = [](const Vec& x) {
    Vec u(1);
    u << std::clamp(x[0] / 10.0 + 0.5, 0.0, 1.0);
    return u;
  };
  s.h = [](const Vec& x) { return x[0] * x[0]; };
  Vec u0(1);
  u0 << 0.5;
  s.crit_h.push_back({"origin", u0, 0});
  pb.submanifolds.push_back(s);
  return pb;
}

inline MorseBottProblem r1_x4() {
  MorseBottProblem pb;
  pb.name = "r1-x4";
  pb.manifold = euclidean(1);
  pb.f = [](const Vec& x) { return x[0] * x[0] * x[0] * x[0]; };
  Vec origin(1);
  origin << 0.0;
  pb.submanifolds.push_back(point_sub(0, "origin", origin, 0));
  return pb;
}

}  // namespace registry

inline std::vector<std::string> registry_names() {
  return {"s2-height", "s2-z2",  "t2-cos",          "t2-morse",
          "s1-flat",   "r1-x4",  "model-x1sq-x2sq"};
}

inline MorseBottProblem load_example(const std::string& name) {
  if (name == "s2-height") return registry::s2_height();
  if (name == "s2-z2") return registry::s2_z2();
  if (name == "t2-cos") return registry::t2_cos();
  if (name == "t2-morse") return registry::t2_morse();
  if (name == "s1-flat") return registry::s1_flat();
  if (name == "r1-x4") return registry::r1_x4();
  if (name == "model-x1sq-x2sq") return registry::model_x1sq_x2sq();
  throw config_error("unknown example: " + name);
}

// examples whose Betti numbers the engine is expected to reproduce
inline std::vector<std::string> homology_examples() {
  return {"s2-z2", "s2-height", "t2-cos", "t2-morse", "s1-flat"};
}

// classical mod-2 Betti numbers of the underlying manifolds
inline std::vector<int> expected_betti(const std::string& name) {
  if (name == "s2-z2" || name == "s2-height") return {1, 0, 1};
  if (name == "t2-cos" || name == "t2-morse") return {1, 2, 1};
  if (name == "s1-flat") return {1, 1};
  throw config_error("no homology reference for " + name);
}

}  // namespace flowhom
