#pragma once

#include <fstream>
#include <json.hpp>

#include "flowhom/geometry.hpp"
#include "flowhom/momentmap.hpp"
#include "flowhom/novikov.hpp"
#include "flowhom/polynomial.hpp"

namespace flowhom {

// Declarative JSON configs. Polynomials are lists of terms
// {"c": coeff, "e": [exponents...]}; see samples/ for full documents.
namespace config {

inline nlohmann::json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("cannot open config file: " + path);
  try {
    return nlohmann::json::parse(is);
  } catch (const std::exception& e) {
    throw config_error(std::string("config parse error: ") + e.what());
  }
}

inline Polynomial parse_polynomial(const nlohmann::json& j, int dim) {
  Polynomial p;
  p.dim = dim;
  for (const auto& t : j) {
    Polynomial::Term term;
    term.coeff = t.at("c").get<double>();
    term.exponents = t.at("e").get<std::vector<int>>();
    if (int(term.exponents.size()) != dim)
      throw config_error("polynomial term has wrong exponent arity");
    p.terms.push_back(std::move(term));
  }
  return p;
}

// {"ambient_dim": D, "constraints": [poly...], "field": poly}
struct FieldProblem {
  ManifoldModel manifold;
  ScalarField f;
};

inline FieldProblem parse_field_problem(const nlohmann::json& j) {
  FieldProblem out;
  int D = j.at("ambient_dim").get<int>();
  out.manifold.ambient_dim = D;
  std::vector<Polynomial> cons;
  if (j.contains("constraints"))
    for (const auto& c : j.at("constraints")) cons.push_back(parse_polynomial(c, D));
  out.manifold.codim = int(cons.size());
  if (!cons.empty())
    out.manifold.constraint = [cons](const Vec& x) {
      Vec v(cons.size());
      for (size_t i = 0; i < cons.size(); ++i) v[int(i)] = cons[i](x);
      return v;
    };
  out.manifold.chart_samplers.push_back(
      {"box", [D](std::mt19937_64& rng) {
         Vec v(D);
         for (int i = 0; i < D; ++i) v[i] = uniform(rng, -2.0, 2.0);
         return v;
       }});
  out.f = as_field(parse_polynomial(j.at("field"), D));
  return out;
}

// {"rank": d, "degree": [..], "energy": [..]}
inline GammaGroup parse_gamma(const nlohmann::json& j) {
  GammaGroup g;
  g.rank = j.at("rank").get<int>();
  g.degree = j.at("degree").get<std::vector<long>>();
  g.energy = j.at("energy").get<std::vector<double>>();
  if (int(g.degree.size()) != g.rank || int(g.energy.size()) != g.rank)
    throw config_error("gamma group vectors must have length rank");
  return g;
}

// {"kind": "toric", "A": [[..]], "tau": [..]} |
// {"kind": "grassmann", "n": n, "k": k} |
// {"kind": "general", "generators": [{"re": [[..]], "im": [[..]]}], "tau": [..]}
inline LinearGroupAction parse_action(const nlohmann::json& j) {
  LinearGroupAction a;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "toric") {
    a.kind = LinearGroupAction::Kind::toric;
    auto rows = j.at("A").get<std::vector<std::vector<double>>>();
    a.A = Mat(rows.size(), rows.at(0).size());
    for (size_t r = 0; r < rows.size(); ++r)
      for (size_t c = 0; c < rows[r].size(); ++c) a.A(int(r), int(c)) = rows[r][c];
    auto tau = j.at("tau").get<std::vector<double>>();
    a.tau = Eigen::Map<const Vec>(tau.data(), tau.size());
  } else if (kind == "grassmann") {
    a.kind = LinearGroupAction::Kind::grassmann;
    a.gr_n = j.at("n").get<int>();
    a.gr_k = j.at("k").get<int>();
  } else if (kind == "general") {
    a.kind = LinearGroupAction::Kind::general;
    for (const auto& gj : j.at("generators")) {
      auto re = gj.at("re").get<std::vector<std::vector<double>>>();
      auto im = gj.at("im").get<std::vector<std::vector<double>>>();
      int n = int(re.size());
      CMat g(n, n);
      for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) g(r, c) = std::complex<double>(re[r][c], im[r][c]);
      a.generators.push_back(g);
    }
    if (j.contains("tau")) {
      auto tau = j.at("tau").get<std::vector<double>>();
      a.tau_general = Eigen::Map<const Vec>(tau.data(), tau.size());
    } else {
      a.tau_general = Vec::Zero(int(a.generators.size()));
    }
  } else {
    throw config_error("unknown action kind: " + kind);
  }
  return a;
}

}  // namespace config
}  // namespace flowhom
