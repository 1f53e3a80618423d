#pragma once

#include <json.hpp>

#include "flowhom/cascades.hpp"
#include "flowhom/gf2.hpp"

namespace flowhom {

// Graded mod-2 complex: generators grouped by total index, boundary matrices
// mapping degree k to degree k-1 (rows = degree k-1 generators).
struct ChainComplexGF2 {
  std::vector<std::vector<CritPoint>> generators;  // by degree
  std::vector<GF2Matrix> boundary;  // boundary[k]: deg k -> deg k-1 (k >= 1)

  int top_degree() const { return int(generators.size()) - 1; }
  int count(int k) const {
    return k >= 0 && k <= top_degree() ? int(generators[k].size()) : 0;
  }
  int euler() const {
    int chi = 0, sign = 1;
    for (const auto& g : generators) {
      chi += sign * int(g.size());
      sign = -sign;
    }
    return chi;
  }
};

// Compute every index-difference-1 mod-2 count and assemble the complex.
// Fails when the Morse-Bott check fails or when any count is untrusted.
inline ChainComplexGF2 build_complex(const MorseBottProblem& pb,
                                     const SearchParams& sp) {
  auto mb = check_morse_bott(pb);
  if (!mb.pass)
    throw config_error(pb.name + " is not Morse-Bott; complex not defined");
  auto gens = enumerate_generators(pb);
  int top = 0;
  for (const auto& g : gens) top = std::max(top, g.Ind());
  ChainComplexGF2 cx;
  cx.generators.resize(top + 1);
  for (const auto& g : gens) cx.generators[g.Ind()].push_back(g);
  cx.boundary.resize(top + 1);
  for (int k = 1; k <= top; ++k) {
    GF2Matrix d(cx.count(k - 1), cx.count(k));
    for (int j = 0; j < cx.count(k); ++j)
      for (int i = 0; i < cx.count(k - 1); ++i) {
        int n;
        try {
          n = count_mod2(pb, cx.generators[k][j], cx.generators[k - 1][i], sp);
        } catch (const std::exception& e) {
          throw untrusted_count_error("count failed for " +
                                      cx.generators[k][j].name + " -> " +
                                      cx.generators[k - 1][i].name + ": " +
                                      e.what());
        }
        if (n) d.set(i, j, true);
      }
    cx.boundary[k] = std::move(d);
  }
  return cx;
}

inline bool verify_d_squared(const ChainComplexGF2& cx) {
  for (int k = 2; k <= cx.top_degree(); ++k) {
    if (cx.count(k) == 0 || cx.count(k - 2) == 0) continue;
    if (!cx.boundary[k - 1].multiply(cx.boundary[k]).is_zero()) return false;
  }
  return true;
}

// dim ker(boundary_k) - rank(boundary_{k+1}) per degree, over GF(2)
inline std::vector<int> betti(const ChainComplexGF2& cx) {
  if (!verify_d_squared(cx))
    throw std::runtime_error("boundary does not square to zero");
  int top = cx.top_degree();
  std::vector<int> rank(top + 2, 0);
  for (int k = 1; k <= top; ++k)
    rank[k] = (cx.count(k) && cx.count(k - 1)) ? cx.boundary[k].rank() : 0;
  std::vector<int> b(top + 1);
  for (int k = 0; k <= top; ++k) b[k] = cx.count(k) - rank[k] - rank[k + 1];
  return b;
}

// the computable shadow of quadruple independence: equal Betti sequences
inline bool compare_quadruples(const MorseBottProblem& a, const MorseBottProblem& b,
                               const SearchParams& sp) {
  return betti(build_complex(a, sp)) == betti(build_complex(b, sp));
}

inline nlohmann::ordered_json complex_to_json(const ChainComplexGF2& cx) {
  nlohmann::ordered_json j;
  j["degrees"] = cx.top_degree() + 1;
  auto gens = nlohmann::ordered_json::array();
  for (int k = 0; k <= cx.top_degree(); ++k)
    for (const auto& g : cx.generators[k]) {
      nlohmann::ordered_json e;
      e["name"] = g.name;
      e["degree"] = k;
      e["ind_f"] = g.ind_f;
      e["ind_h"] = g.ind_h;
      gens.push_back(e);
    }
  j["generators"] = gens;
  auto bnd = nlohmann::ordered_json::array();
  for (int k = 1; k <= cx.top_degree(); ++k)
    for (int jcol = 0; jcol < cx.count(k); ++jcol)
      for (int irow = 0; irow < cx.count(k - 1); ++irow)
        if (cx.boundary[k].get(irow, jcol))
          bnd.push_back({{"degree", k},
                         {"from", cx.generators[k][jcol].name},
                         {"to", cx.generators[k - 1][irow].name}});
  j["boundary"] = bnd;
  j["betti"] = betti(cx);
  j["euler"] = cx.euler();
  j["d_squared_ok"] = verify_d_squared(cx);
  return j;
}

}  // namespace flowhom
