#pragma once

#include <json.hpp>
#include <set>
#include <vector>

#include "flowhom/common.hpp"

namespace flowhom {

// Gamma = Z^d with a degree homomorphism (integer-valued) and an energy
// homomorphism (real-valued) fixed on the generators.
struct GammaGroup {
  int rank = 0;
  std::vector<long> degree;    // I on generators
  std::vector<double> energy;  // E on generators

  bool operator==(const GammaGroup& o) const {
    return rank == o.rank && degree == o.degree && energy == o.energy;
  }

  long degree_of(const std::vector<long>& g) const {
    long d = 0;
    for (int i = 0; i < rank; ++i) d += degree[i] * g[i];
    return d;
  }
  double energy_of(const std::vector<long>& g) const {
    double e = 0;
    for (int i = 0; i < rank; ++i) e += energy[i] * double(g[i]);
    return e;
  }
  double max_abs_energy() const {
    double m = 0;
    for (double e : energy) m = std::max(m, std::abs(e));
    return m;
  }
};

constexpr long kMaxExponent = 1000000;  // runaway-series guard

// Formal GF(2) sum over Gamma, truncated below the energy cutoff kappa_min.
// A term is present iff its coefficient is 1.
struct NovikovElement {
  GammaGroup group;
  std::set<std::vector<long>> terms;
  double kappa_min = -std::numeric_limits<double>::infinity();
  bool truncated = false;

  bool is_zero() const { return terms.empty(); }

  long degree() const {  // defined for homogeneous nonzero elements
    if (terms.empty()) throw std::runtime_error("degree of zero element");
    long d = group.degree_of(*terms.begin());
    for (const auto& t : terms)
      if (group.degree_of(t) != d)
        throw std::runtime_error("element is not homogeneous");
    return d;
  }

  bool homogeneous() const {
    if (terms.empty()) return true;
    long d = group.degree_of(*terms.begin());
    for (const auto& t : terms)
      if (group.degree_of(t) != d) return false;
    return true;
  }

  double max_energy() const {
    double m = -std::numeric_limits<double>::infinity();
    for (const auto& t : terms) m = std::max(m, group.energy_of(t));
    return m;
  }
};

inline NovikovElement nv_zero(const GammaGroup& g) {
  NovikovElement e;
  e.group = g;
  return e;
}

inline NovikovElement nv_monomial(const GammaGroup& g, std::vector<long> exp) {
  for (long v : exp)
    if (std::abs(v) > kMaxExponent) throw std::runtime_error("exponent overflow");
  NovikovElement e;
  e.group = g;
  e.terms.insert(std::move(exp));
  return e;
}

inline NovikovElement nv_one(const GammaGroup& g) {
  return nv_monomial(g, std::vector<long>(g.rank, 0));
}

namespace detail {

inline void require_same_group(const NovikovElement& a, const NovikovElement& b) {
  if (!(a.group == b.group))
    throw std::invalid_argument("Novikov elements over different groups");
}

inline void truncate(NovikovElement& e) {
  for (auto it = e.terms.begin(); it != e.terms.end();) {
    if (e.group.energy_of(*it) < e.kappa_min) {
      it = e.terms.erase(it);
      e.truncated = true;
    } else {
      ++it;
    }
  }
}

}  // namespace detail

inline NovikovElement nv_add(const NovikovElement& a, const NovikovElement& b) {
  detail::require_same_group(a, b);
  NovikovElement out = a;
  out.kappa_min = std::max(a.kappa_min, b.kappa_min);
  out.truncated = a.truncated || b.truncated;
  for (const auto& t : b.terms) {
    auto it = out.terms.find(t);
    if (it == out.terms.end()) out.terms.insert(t);
    else out.terms.erase(it);  // characteristic 2
  }
  detail::truncate(out);
  return out;
}

inline NovikovElement nv_mul(const NovikovElement& a, const NovikovElement& b) {
  detail::require_same_group(a, b);
  NovikovElement out = nv_zero(a.group);
  out.kappa_min = std::max(a.kappa_min, b.kappa_min);
  out.truncated = a.truncated || b.truncated;
  for (const auto& s : a.terms)
    for (const auto& t : b.terms) {
      std::vector<long> g(a.group.rank);
      for (int i = 0; i < a.group.rank; ++i) {
        g[i] = s[i] + t[i];
        if (std::abs(g[i]) > kMaxExponent)
          throw std::runtime_error("exponent overflow in product");
      }
      if (out.group.energy_of(g) < out.kappa_min) {
        out.truncated = true;
        continue;
      }
      auto it = out.terms.find(g);
      if (it == out.terms.end()) out.terms.insert(std::move(g));
      else out.terms.erase(it);
    }
  return out;
}

// Leading term: the unique term of maximal energy. Energy ties are an error.
inline std::vector<long> nv_leading(const NovikovElement& a, double tie_tol = 0.0) {
  if (a.is_zero()) throw std::runtime_error("zero element has no leading term");
  const std::vector<long>* best = nullptr;
  double best_e = -std::numeric_limits<double>::infinity();
  bool tie = false;
  for (const auto& t : a.terms) {
    double e = a.group.energy_of(t);
    if (e > best_e + tie_tol) {
      best = &t;
      best_e = e;
      tie = false;
    } else if (e >= best_e - tie_tol) {
      tie = true;
    }
  }
  if (tie)
    throw std::runtime_error("tied maximal-energy terms: leading term ambiguous");
  return *best;
}

// Invert a = gamma0 (1 + x), every term of x of strictly negative relative
// energy, as gamma0^{-1} sum x^k down to the cutoff. The product with a
// equals 1 up to terms below kappa_min.
inline NovikovElement nv_invert(const NovikovElement& a) {
  if (a.is_zero()) throw std::runtime_error("cannot invert zero");
  auto g0 = nv_leading(a);
  NovikovElement inv_g0 = nv_zero(a.group);
  {
    std::vector<long> neg(g0.size());
    for (size_t i = 0; i < g0.size(); ++i) neg[i] = -g0[i];
    inv_g0 = nv_monomial(a.group, std::move(neg));
  }
  double e0 = a.group.energy_of(g0);
  double kappa = a.kappa_min;
  if (!std::isfinite(kappa)) kappa = e0 - 20.0 * a.group.max_abs_energy();

  // gamma0^{-1} a = 1 + x with every term of x of negative energy. The series
  // is accumulated at energies shifted by -e0 and later shifted back, so it
  // has to be carried |e0| deeper than the requested cutoff.
  double rel_cut = kappa - std::abs(e0);
  NovikovElement x = nv_mul(inv_g0, a);
  x.kappa_min = rel_cut;
  detail::truncate(x);
  {
    auto one = nv_one(a.group);
    x = nv_add(x, one);  // subtract 1 (char 2)
  }
  double xe = x.is_zero() ? -1.0 : x.max_energy();
  if (xe >= 0)
    throw std::runtime_error("leading term not strictly dominant");

  NovikovElement acc = nv_one(a.group);
  acc.kappa_min = rel_cut;
  NovikovElement pw = nv_one(a.group);
  pw.kappa_min = rel_cut;
  // x^k dies once k * xe < rel_cut
  long kmax = x.is_zero() ? 0 : std::max(0L, long(std::ceil(rel_cut / xe)) + 1);
  for (long k = 1; k <= kmax; ++k) {
    pw = nv_mul(pw, x);
    if (pw.is_zero()) break;
    acc = nv_add(acc, pw);
  }
  // multiplying back by a (terms up to energy e0) must still cancel down to
  // kappa, so the inverse keeps terms max(e0, 0) deeper than the cutoff
  double out_cut = kappa - std::max(e0, 0.0);
  acc.kappa_min = out_cut;
  NovikovElement ig = inv_g0;
  ig.kappa_min = out_cut;
  NovikovElement out = nv_mul(ig, acc);
  out.kappa_min = out_cut;
  detail::truncate(out);
  out.truncated = true;  // an inverse is a truncated series by construction
  return out;
}

// a * b == 1 up to terms below the cutoff
inline bool nv_is_one_above_cutoff(const NovikovElement& p) {
  auto one = nv_one(p.group);
  auto diff = nv_add(p, one);
  for (const auto& t : diff.terms)
    if (p.group.energy_of(t) >= p.kappa_min) return false;
  return true;
}

inline nlohmann::ordered_json novikov_to_json(const NovikovElement& e) {
  nlohmann::ordered_json j;
  j["rank"] = e.group.rank;
  auto terms = nlohmann::ordered_json::array();
  for (const auto& t : e.terms) terms.push_back({{"exp", t}, {"coeff", 1}});
  j["terms"] = terms;
  if (std::isfinite(e.kappa_min)) j["kappa_min"] = e.kappa_min;
  j["truncated"] = e.truncated;
  return j;
}

}  // namespace flowhom
