#pragma once

#include <json.hpp>
#include <map>

#include "flowhom/common.hpp"

namespace flowhom {

// Dyadic midpoint discretization of sections over a path: N samples at
// t_j = (j + 1/2)/N, values in C^n stored as R^{2n} blocks (real part, then
// imaginary part). Reflection t -> 1-t and every shift by 1/2^{k+1} + j/2^k
// permute the grid exactly when 2^{k+1} divides N, so the operator identities
// hold without any interpolation error.
struct PathGrid {
  int N = 64;
  int n = 1;

  PathGrid(int N_, int n_) : N(N_), n(n_) {
    // N = 1 is admitted only as the bottom of the halving recursion
    if (N < 1 || (N & (N - 1)) != 0)
      throw config_error("grid size must be a power of two");
    if (n < 1) throw config_error("complex dimension must be positive");
  }

  int size() const { return 2 * n * N; }
  double sample(int j) const { return (j + 0.5) / N; }
  bool admits_shift_level(int k) const { return N % (1 << (k + 1)) == 0; }
};

struct PathOperator {
  Mat matrix;
  std::string label;
  enum class Domain { full, minus, plus } domain = Domain::full;
};

namespace pathop {

// block acting on one sample's value in R^{2n}
inline Mat conj_block(int n) {
  Mat C = Mat::Identity(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) C(n + i, n + i) = -1;
  return C;
}

inline Mat j_block(int n) {  // multiplication by i
  Mat J = Mat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    J(i, n + i) = -1;
    J(n + i, i) = 1;
  }
  return J;
}

inline Mat kron_time(const Mat& T, const Mat& B) {
  int N = int(T.rows()), M = int(T.cols()), b = int(B.rows());
  Mat out = Mat::Zero(N * b, M * b);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < M; ++j)
      if (T(i, j) != 0) out.block(i * b, j * b, b, b) = T(i, j) * B;
  return out;
}

// shift of the antiperiodic extension by num/den (xi(t+1) = -xi(t))
inline Mat shift_time(int N, long num, long den) {
  if ((long(N) * num) % den != 0)
    throw config_error("shift does not preserve the sample grid");
  long a = (long(N) * num) / den;
  Mat T = Mat::Zero(N, N);
  for (int j = 0; j < N; ++j) {
    long jj = j + a;
    double sign = 1.0;
    while (jj >= N) {
      jj -= N;
      sign = -sign;
    }
    while (jj < 0) {
      jj += N;
      sign = -sign;
    }
    T(j, int(jj)) = sign;
  }
  return T;
}

inline Mat reflect_time(int N) {
  Mat T = Mat::Zero(N, N);
  for (int j = 0; j < N; ++j) T(j, N - 1 - j) = 1.0;
  return T;
}

// orthonormal basis (columns) of the -1 eigenspace of I1:
// conj(xi(1-t)) = -xi(t); dimension n*N
inline Mat minus_basis(const PathGrid& g) {
  const double r = 1.0 / std::sqrt(2.0);
  Mat Q = Mat::Zero(g.size(), g.n * g.N);
  int col = 0;
  for (int j = 0; j < g.N / 2; ++j)
    for (int c = 0; c < g.n; ++c) {
      Q(j * 2 * g.n + c, col) = r;                          // Re at j
      Q((g.N - 1 - j) * 2 * g.n + c, col) = -r;             // Re reflected
      ++col;
      Q(j * 2 * g.n + g.n + c, col) = r;                    // Im at j
      Q((g.N - 1 - j) * 2 * g.n + g.n + c, col) = r;        // Im reflected
      ++col;
    }
  return Q;
}

}  // namespace pathop

// I1 xi(t) = conj(xi(1-t))
inline PathOperator build_I1(const PathGrid& g) {
  return {pathop::kron_time(pathop::reflect_time(g.N), pathop::conj_block(g.n)),
          "I1", PathOperator::Domain::full};
}

inline std::pair<PathOperator, PathOperator> eigenprojections(const PathOperator& I1) {
  Mat id = Mat::Identity(I1.matrix.rows(), I1.matrix.cols());
  return {{0.5 * (id + I1.matrix), "pi+", PathOperator::Domain::full},
          {0.5 * (id - I1.matrix), "pi-", PathOperator::Domain::full}};
}

// L_k = sum_j (-1)^{floor(j/2^{k-1})} S_{1/2^{k+1} + j/2^k}; well defined on
// the -1 eigenspace of I1
inline PathOperator build_Lk(const PathGrid& g, int k) {
  if (k < 1) throw config_error("L_k needs k >= 1");
  if (!g.admits_shift_level(k))
    throw config_error("grid too coarse: 2^{k+1} must divide N");
  Mat T = Mat::Zero(g.N, g.N);
  long twok = 1L << k;
  for (long j = 0; j < twok; ++j) {
    double sgn = (j / (twok / 2)) % 2 == 0 ? 1.0 : -1.0;
    T += sgn * pathop::shift_time(g.N, 1 + 2 * j, 2 * twok);
  }
  return {pathop::kron_time(T, Mat::Identity(2 * g.n, 2 * g.n)),
          "L" + std::to_string(k), PathOperator::Domain::minus};
}

// I2 on the -1 eigenspace: (-1)^{floor(t+1/2)} J xi(t + 1/2 mod 1)
inline PathOperator build_I2_minus(const PathGrid& g) {
  Mat T = pathop::shift_time(g.N, 1, 2);
  return {pathop::kron_time(T, pathop::j_block(g.n)), "I2-",
          PathOperator::Domain::minus};
}

// distinct eigenvalues (ascending) of L_k^2 restricted to the -1 eigenspace
inline std::vector<double> spectrum_Lk_sq_minus(const PathGrid& g, int k,
                                                double rel_dedup = 1e-7) {
  Mat L = build_Lk(g, k).matrix;
  Mat Q = pathop::minus_basis(g);
  Mat A = Q.transpose() * (L * L) * Q;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  std::vector<double> uniq;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double e = es.eigenvalues()[i];
    if (uniq.empty() || std::abs(e - uniq.back()) > rel_dedup * std::max(1.0, std::abs(e)))
      uniq.push_back(e);
  }
  return uniq;
}

// I_k on the -1 eigenspace for k >= 3: spectral normalization
// sum_lambda lambda^{-1/2} L_{k-2} Pi_{k-2,lambda}, i.e. the sign of L_{k-2}
inline PathOperator build_Ik_minus(const PathGrid& g, int k) {
  if (k == 2) return build_I2_minus(g);
  if (k < 3) throw config_error("spectral extension needs k >= 3");
  Mat L = build_Lk(g, k - 2).matrix;
  Mat Q = pathop::minus_basis(g);
  Mat A = Q.transpose() * L * Q;
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (A + A.transpose()));
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (std::abs(es.eigenvalues()[i]) < 1e-10)
      throw std::runtime_error(
          "eigenvalue of L^2 not positive: spectral normalization undefined");
  Vec sgn(es.eigenvalues().size());
  for (int i = 0; i < sgn.size(); ++i) sgn[i] = es.eigenvalues()[i] >= 0 ? 1.0 : -1.0;
  Mat S = es.eigenvectors() * sgn.asDiagonal() * es.eigenvectors().transpose();
  return {Mat(Q * S * Q.transpose()), "I" + std::to_string(k) + "-",
          PathOperator::Domain::minus};
}

// H: sections on grid N -> grid N/2 (xi(t) -> xi(t/2), the first half);
// D: grid N/2 -> grid N (first half xi(2t), second half conj xi(2-2t))
inline std::pair<Mat, Mat> build_HD(const PathGrid& g) {
  if (g.N % 2 != 0) throw config_error("grid halving needs even N");
  int M = g.N / 2, b = 2 * g.n;
  Mat H = Mat::Zero(M * b, g.N * b);
  for (int j = 0; j < M; ++j)
    H.block(j * b, j * b, b, b) = Mat::Identity(b, b);
  Mat C = pathop::conj_block(g.n);
  Mat D = Mat::Zero(g.N * b, M * b);
  for (int j = 0; j < g.N; ++j) {
    if (j < M)
      D.block(j * b, j * b, b, b) = Mat::Identity(b, b);
    else
      D.block(j * b, (g.N - 1 - j) * b, b, b) = C;
  }
  return {H, D};
}

// Full involution tower: I_k as a matrix on the whole section space, acting
// as the minus-branch on the -1 eigenspace of I1 and as D I_{k-1} H (one grid
// halving down) on the +1 eigenspace.
inline Mat build_full_involution(const PathGrid& g, int k) {
  if (k == 1) return build_I1(g).matrix;
  PathGrid half(g.N / 2, g.n);
  Mat Ik1 = build_full_involution(half, k - 1);
  auto [H, D] = build_HD(g);
  Mat I1 = build_I1(g).matrix;
  Mat id = Mat::Identity(g.size(), g.size());
  Mat pip = 0.5 * (id + I1);
  Mat pim = 0.5 * (id - I1);
  Mat minus = build_Ik_minus(g, k).matrix;
  return minus * pim + D * Ik1 * H * pip;
}

inline PathOperator build_Ik_plus(const PathGrid& g, int k) {
  if (k < 2) throw config_error("the recursion branch starts at k = 2");
  PathGrid half(g.N / 2, g.n);
  auto [H, D] = build_HD(g);
  return {Mat(D * build_full_involution(half, k - 1) * H),
          "I" + std::to_string(k) + "+", PathOperator::Domain::plus};
}

// injectivity certificate of the proof: |det A(t)| for the 2^k x 2^k sign
// matrix relating L_k samples on the offset grid
inline double det_A(int k, double t) {
  int m = 1 << k;
  auto ifloor = [](double x) { return std::floor(x); };
  Mat A(m, m);
  for (int i = 0; i < m; ++i)
    for (int l = 0; l < m; ++l) {
      double e = ifloor(double(l - i) / double(m / 2)) +
                 ifloor(double(l - i) / double(m)) +
                 ifloor(t + 1.0 / (2.0 * m) + double(l) / double(m));
      A(i, l) = std::pow(-1.0, e);
    }
  return std::abs(A.fullPivLu().determinant());
}

struct LemmaReport {
  int kmax = 0;
  // residuals, all expected at machine precision on an admissible grid
  std::map<std::string, double> residuals;
  std::map<int, std::vector<double>> spectra;       // eigenvalues of L_k^2 on E_-1
  std::map<int, double> smallest_singular_value;    // injectivity, L_k on E_-1
  std::map<int, std::vector<double>> det_table;     // |det A(t)| at probe points
  bool spectra_match_closed_forms = true;
  bool all_residuals_small = true;

  double worst_residual() const {
    double w = 0;
    for (const auto& [k, v] : residuals) w = std::max(w, v);
    return w;
  }
};

// closed-form eigenvalues of L_k^2 for k = 1, 2, 3
inline std::vector<double> closed_form_spectrum(int k) {
  const double s2 = std::sqrt(2.0);
  if (k == 1) return {2.0};
  if (k == 2) return {4 - 2 * s2, 4 + 2 * s2};
  if (k == 3) {
    std::vector<double> v = {
        2 * (4 + 2 * s2 + std::sqrt(4 + 2 * s2) * (1 + s2)),
        2 * (4 - 2 * s2 + std::sqrt(4 - 2 * s2) * (1 - s2)),
        2 * (4 + 2 * s2 - std::sqrt(4 + 2 * s2) * (1 + s2)),
        2 * (4 - 2 * s2 - std::sqrt(4 - 2 * s2) * (1 - s2))};
    std::sort(v.begin(), v.end());
    return v;
  }
  return {};
}

inline LemmaReport verify_lemma(const PathGrid& g, int kmax,
                                std::uint64_t seed = 12345,
                                double residual_gate = 1e-9) {
  if (kmax < 1) throw config_error("kmax must be >= 1");
  if (!g.admits_shift_level(kmax))
    throw config_error("grid too coarse for kmax: need 2^{kmax+1} | N");
  LemmaReport rep;
  rep.kmax = kmax;
  Mat id = Mat::Identity(g.size(), g.size());
  Mat I1 = build_I1(g).matrix;
  Mat pim = 0.5 * (id - I1);
  Mat Q = pathop::minus_basis(g);

  std::vector<Mat> L(kmax + 1);
  L[0] = id;
  for (int k = 1; k <= kmax; ++k) L[k] = build_Lk(g, k).matrix;

  auto put = [&](const std::string& key, double v) {
    rep.residuals[key] = v;
    if (v > residual_gate) rep.all_residuals_small = false;
  };

  // well-definedness: I1 L_k = -L_k on E_-1
  for (int k = 1; k <= kmax; ++k)
    put("welldef_L" + std::to_string(k),
        ((I1 * L[k] + L[k]) * pim).cwiseAbs().maxCoeff());

  // pairwise commutativity and commutation with I2 on E_-1
  Mat I2m = build_I2_minus(g).matrix;
  double comm = 0, commI2 = 0;
  for (int k = 1; k <= kmax; ++k) {
    for (int l = k + 1; l <= kmax; ++l)
      comm = std::max(comm, (L[k] * L[l] - L[l] * L[k]).cwiseAbs().maxCoeff());
    commI2 = std::max(commI2,
                      ((L[k] * I2m - I2m * L[k]) * pim).cwiseAbs().maxCoeff());
  }
  put("commute_L_pairs", comm);
  put("commute_L_I2_minus", commI2);

  // square recursion L_{k+1}^2 = 2 (L_k^2 + L_k sum_{i<k} L_i), L_0 = id
  for (int k = 0; k + 1 <= kmax; ++k) {
    Mat S = Mat::Zero(g.size(), g.size());
    for (int i = 0; i < k; ++i) S += L[i];
    Mat R = L[k + 1] * L[k + 1] - 2.0 * (L[k] * L[k] + L[k] * S);
    put("square_recursion_k" + std::to_string(k), R.cwiseAbs().maxCoeff());
  }

  // self-adjointness in the discrete L^2 inner product (uniform weight:
  // matrix symmetry), plus a sampled random-vector check
  auto rng = make_rng(seed);
  for (int k = 1; k <= kmax; ++k) {
    put("selfadjoint_L" + std::to_string(k),
        (L[k] - L[k].transpose()).cwiseAbs().maxCoeff());
    double worst = 0;
    for (int trial = 0; trial < 4; ++trial) {
      Vec xi = Q * (Q.transpose() * random_unit_vector(rng, g.size()));
      Vec eta = Q * (Q.transpose() * random_unit_vector(rng, g.size()));
      double a = (L[k] * xi).dot(eta) / g.N;
      double b = xi.dot(L[k] * eta) / g.N;
      worst = std::max(worst, std::abs(a - b));
    }
    put("selfadjoint_L" + std::to_string(k) + "_sampled", worst);
  }

  // injectivity: smallest singular value on E_-1 and the determinant table
  for (int k = 1; k <= kmax; ++k) {
    Mat A = Q.transpose() * L[k] * Q;
    Eigen::JacobiSVD<Mat> svd(A);
    rep.smallest_singular_value[k] =
        svd.singularValues()(svd.singularValues().size() - 1);
    if (k <= 3) {
      std::vector<double> dets;
      for (double frac : {0.1, 0.23, 0.37, 0.61, 0.83})
        dets.push_back(det_A(k, frac / double(1 << k)));
      rep.det_table[k] = dets;
    }
  }

  // spectra vs closed forms (k <= 3 have printed values)
  for (int k = 1; k <= kmax; ++k) {
    auto spec = spectrum_Lk_sq_minus(g, k);
    rep.spectra[k] = spec;
    auto expect = closed_form_spectrum(k);
    if (!expect.empty()) {
      if (spec.size() != expect.size()) rep.spectra_match_closed_forms = false;
      else
        for (size_t i = 0; i < spec.size(); ++i)
          if (std::abs(spec[i] - expect[i]) > 1e-8)
            rep.spectra_match_closed_forms = false;
    }
    for (double e : spec)
      if (e <= 0) rep.spectra_match_closed_forms = false;  // positivity claim
  }

  // involution tower: involutivity and cross-commutation
  int tower_max = std::min(kmax, 4);
  std::vector<Mat> tower(tower_max + 1);
  for (int k = 1; k <= tower_max; ++k) tower[k] = build_full_involution(g, k);
  for (int k = 1; k <= tower_max; ++k)
    put("involution_I" + std::to_string(k),
        (tower[k] * tower[k] - id).cwiseAbs().maxCoeff());
  for (int k = 1; k <= tower_max; ++k)
    for (int l = k + 1; l <= tower_max; ++l)
      put("commute_I" + std::to_string(k) + "_I" + std::to_string(l),
          (tower[k] * tower[l] - tower[l] * tower[k]).cwiseAbs().maxCoeff());

  auto [H, D] = build_HD(g);
  put("H_after_D_identity",
      (H * D - Mat::Identity(g.size() / 2, g.size() / 2)).cwiseAbs().maxCoeff());

  return rep;
}

struct FixedChainReport {
  std::vector<int> dims;  // dim of the joint fixed space of I_1..I_k
  bool constants_only = false;  // final space = real constant sections
};

// The ladder of fixed subspaces: the joint fixed space of the tower shrinks
// to the real constant sections, so the last involution has no nonconstant
// fixed section.
inline FixedChainReport fixed_chain(const PathGrid& g) {
  int kmax = 1;
  while ((1 << kmax) <= g.N) ++kmax;  // k with 2^{k-1} | N
  FixedChainReport rep;
  Mat acc;  // stacked (I_k - id)
  Mat id = Mat::Identity(g.size(), g.size());
  Mat kernel_basis;
  for (int k = 1; k <= kmax; ++k) {
    Mat block = build_full_involution(g, k) - id;
    if (acc.size() == 0) acc = block;
    else {
      Mat next(acc.rows() + block.rows(), acc.cols());
      next << acc, block;
      acc = next;
    }
    Eigen::JacobiSVD<Mat> svd(acc, Eigen::ComputeThinV);
    int null_dim = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
      if (svd.singularValues()(i) < 1e-8) ++null_dim;
    rep.dims.push_back(null_dim);
    if (k == kmax) {
      kernel_basis = svd.matrixV().rightCols(null_dim);
    }
  }
  // final space should be the real constants: dimension n, and every basis
  // vector constant across samples
  rep.constants_only = rep.dims.back() == g.n;
  for (int c = 0; c < kernel_basis.cols() && rep.constants_only; ++c) {
    Vec v = kernel_basis.col(c);
    for (int j = 1; j < g.N; ++j)
      for (int b = 0; b < 2 * g.n; ++b)
        if (std::abs(v[j * 2 * g.n + b] - v[b]) > 1e-8) rep.constants_only = false;
  }
  return rep;
}

inline nlohmann::ordered_json lemma_report_to_json(const LemmaReport& rep) {
  nlohmann::ordered_json j;
  j["kmax"] = rep.kmax;
  nlohmann::ordered_json res;
  for (const auto& [k, v] : rep.residuals) res[k] = v;
  j["residuals"] = res;
  nlohmann::ordered_json spectra;
  for (const auto& [k, v] : rep.spectra) spectra["L" + std::to_string(k)] = v;
  j["spectra_L_squared"] = spectra;
  nlohmann::ordered_json sv;
  for (const auto& [k, v] : rep.smallest_singular_value)
    sv["L" + std::to_string(k)] = v;
  j["smallest_singular_value"] = sv;
  nlohmann::ordered_json dets;
  for (const auto& [k, v] : rep.det_table) dets["k" + std::to_string(k)] = v;
  j["det_table"] = dets;
  j["spectra_match_closed_forms"] = rep.spectra_match_closed_forms;
  j["all_residuals_small"] = rep.all_residuals_small;
  return j;
}

}  // namespace flowhom
