#include <catch2/catch_amalgamated.hpp>

#include "flowhom/momentmap.hpp"

using namespace flowhom;
using Catch::Approx;
using namespace std::complex_literals;

namespace {

LinearGroupAction s1_on_c2(double tau = 0.5) {
  LinearGroupAction a;
  a.kind = LinearGroupAction::Kind::toric;
  a.A = Mat::Ones(1, 2);
  a.tau = Vec::Constant(1, tau);
  return a;
}

LinearGroupAction toric_rank2() {
  LinearGroupAction a;
  a.kind = LinearGroupAction::Kind::toric;
  a.A = Mat(2, 3);
  a.A << 1, 1, 0, 0, 1, 1;
  a.tau = Vec::Constant(2, 0.5);
  return a;
}

LinearGroupAction grassmann21() {
  LinearGroupAction a;
  a.kind = LinearGroupAction::Kind::grassmann;
  a.gr_n = 2;
  a.gr_k = 1;
  return a;
}

CVec random_z(std::mt19937_64& rng, int n) {
  CVec z(n);
  for (int j = 0; j < n; ++j)
    z[j] = std::complex<double>(uniform(rng, -1.5, 1.5), uniform(rng, -1.5, 1.5));
  return z;
}

}  // namespace

TEST_CASE("circle moment map on C^2", "[momentmap]") {
  auto a = s1_on_c2();
  SECTION("formula and zero level") {
    CVec z(2);
    z << 0.3 + 0.4i, 0.1 - 0.2i;
    Vec mu = moment_toric(a, z);
    CHECK(mu[0] == Approx(0.5 * (std::norm(z[0]) + std::norm(z[1])) - 0.5));
    CVec on_sphere(2);
    on_sphere << 1.0, 0.0;  // |z| = 1
    CHECK(moment_toric(a, on_sphere)[0] == Approx(0).margin(1e-15));
  }
  SECTION("origin with zero shift") {
    auto a0 = s1_on_c2(0.0);
    CHECK(moment_toric(a0, CVec::Zero(2))[0] == Approx(0).margin(1e-15));
  }
  SECTION("invariance under the torus action") {
    auto rng = make_rng(3);
    CVec z = random_z(rng, 2);
    CVec rz = z * std::exp(0.7i);
    CHECK((moment_toric(a, rz) - moment_toric(a, z)).norm() < 1e-14);
  }
  SECTION("rank-deficient A is rejected") {
    LinearGroupAction bad;
    bad.kind = LinearGroupAction::Kind::toric;
    bad.A = Mat(2, 2);
    bad.A << 1, 1, 1, 1;
    bad.tau = Vec::Zero(2);
    CHECK_THROWS_AS(moment_toric(bad, CVec::Zero(2)), config_error);
  }
}

TEST_CASE("frame moment map", "[momentmap]") {
  SECTION("orthonormal frames sit on the zero level") {
    CMat B(2, 1);
    B << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    CHECK(moment_grassmann(B).cwiseAbs().maxCoeff() < 1e-15);
  }
  SECTION("scaling") {
    CMat B(2, 1);
    B << 2.0, 0.0;  // twice an orthonormal frame
    auto mu = moment_grassmann(B);
    CHECK(mu(0, 0).real() == Approx(0).margin(1e-15));
    CHECK(mu(0, 0).imag() == Approx(-1.5));  // 3/(2i)
  }
  SECTION("left unitary invariance") {
    auto rng = make_rng(5);
    CMat B(3, 2);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 2; ++c)
        B(r, c) = std::complex<double>(uniform(rng, -1, 1), uniform(rng, -1, 1));
    // a 3x3 unitary from the QR of a random complex matrix
    CMat X(3, 3);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        X(r, c) = std::complex<double>(uniform(rng, -1, 1), uniform(rng, -1, 1));
    Eigen::HouseholderQR<CMat> qr(X);
    CMat U = qr.householderQ();
    CHECK((moment_grassmann(U * B) - moment_grassmann(B)).cwiseAbs().maxCoeff() <
          1e-12);
  }
}

TEST_CASE("general moment map against the toric one", "[momentmap]") {
  // diagonal torus generators for A = [1 1], orthonormalized
  LinearGroupAction gen;
  gen.kind = LinearGroupAction::Kind::general;
  CMat g0 = CMat::Zero(2, 2);
  g0(0, 0) = 1.0i / std::sqrt(2.0);
  g0(1, 1) = 1.0i / std::sqrt(2.0);
  gen.generators = {g0};
  gen.tau_general = Vec::Zero(1);

  auto toric = s1_on_c2(0.0);
  auto rng = make_rng(7);
  for (int t = 0; t < 5; ++t) {
    CVec z = random_z(rng, 2);
    // the generator is rho(e_1)/sqrt(2); pairings agree after rescaling
    double general = moment_general(gen, z)[0];
    double viatoric = moment_toric(toric, z)[0] / std::sqrt(2.0);
    CHECK(general == Approx(viatoric).margin(1e-12));
  }
  SECTION("z = 0 with zero shift") {
    CHECK(moment_general(gen, CVec::Zero(2))[0] == Approx(0).margin(1e-15));
  }
  SECTION("non-orthonormal generators are rejected") {
    LinearGroupAction bad = gen;
    bad.generators[0] *= 2.0;
    CHECK_THROWS_AS(moment_general(bad, CVec::Zero(2)), config_error);
  }
  SECTION("non-skew generators are rejected") {
    LinearGroupAction bad = gen;
    bad.generators[0](0, 1) = 1.0;
    CHECK_THROWS_AS(moment_general(bad, CVec::Zero(2)), config_error);
  }
}

TEST_CASE("moment identity residuals", "[momentmap]") {
  auto rng = make_rng(11);
  SECTION("circle action, unit generator") {
    auto a = s1_on_c2();
    for (int t = 0; t < 5; ++t) {
      CVec z = random_z(rng, 2);
      Vec xi = Vec::Constant(1, 1.0);
      CHECK(verify_moment_identity(a, z, xi) < 1e-6);
    }
  }
  SECTION("zero Lie algebra element gives zero residual") {
    auto a = s1_on_c2();
    CVec z = random_z(rng, 2);
    CHECK(verify_moment_identity(a, z, Vec::Zero(1)) < 1e-15);
  }
  SECTION("rank-2 toric and frames") {
    auto a2 = toric_rank2();
    auto ag = grassmann21();
    for (int t = 0; t < 5; ++t) {
      CVec z = random_z(rng, 3);
      Vec xi(2);
      xi << uniform(rng, -1, 1), uniform(rng, -1, 1);
      CHECK(verify_moment_identity(a2, z, xi) < 1e-6);
      CVec b = random_z(rng, 2);
      Vec eta = Vec::Constant(1, uniform(rng, -1, 1));
      CHECK(verify_moment_identity(ag, b, eta) < 1e-6);
    }
  }
  SECTION("residual stays inside the O(h^2) envelope at two steps") {
    // the moment pairing is quadratic, so central differences are exact and
    // both residuals sit at rounding level, well under C h^2
    LinearGroupAction twisted = toric_rank2();
    CVec z = random_z(rng, 3);
    Vec xi(2);
    xi << 0.7, -0.3;
    double r1 = verify_moment_identity(twisted, z, xi, 1e-3);
    double r2 = verify_moment_identity(twisted, z, xi, 1e-5);
    CHECK(r1 <= 1e-6);   // C = 1 at h = 1e-3
    CHECK(r2 <= 1e-8);   // rounding floor dominates below C h^2 = 1e-10
  }
}

TEST_CASE("H2 sampling", "[momentmap]") {
  SECTION("circle action with the half shift is regular and free") {
    auto rep = check_H2(s1_on_c2(0.5), 16, 42);
    CHECK(rep.samples_found > 0);
    CHECK(rep.regular_value);
    CHECK(rep.free_action);
    CHECK(rep.quotient_dim == 2);
    CHECK(rep.pass());
  }
  SECTION("zero shift pins the origin with full stabilizer") {
    auto rep = check_H2(s1_on_c2(0.0), 16, 42);
    CHECK_FALSE(rep.pass());
  }
  SECTION("frames give the expected quotient dimension") {
    auto rep = check_H2(grassmann21(), 12, 42);
    CHECK(rep.samples_found > 0);
    CHECK(rep.pass());
    CHECK(rep.quotient_dim == 2);
  }
}
