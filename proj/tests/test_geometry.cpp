#include <catch2/catch_amalgamated.hpp>

#include "flowhom/registry.hpp"

using namespace flowhom;
using Catch::Approx;

TEST_CASE("gradient on registry fields", "[geometry]") {
  SECTION("vertical field at an equator point of the sphere") {
    auto pb = registry::s2_height();
    Vec x = registry::v3(1, 0, 0);
    Vec g = gradient(pb.manifold, pb.f, x);
    CHECK(g[0] == Approx(0).margin(1e-8));
    CHECK(g[1] == Approx(0).margin(1e-8));
    CHECK(g[2] == Approx(1).margin(1e-8));
  }
  SECTION("flat model field") {
    auto pb = registry::model_x1sq_x2sq();
    Vec g = gradient(pb.manifold, pb.f, registry::v3(5, 1, 2));
    CHECK(g[0] == Approx(0).margin(1e-8));
    CHECK(g[1] == Approx(2).margin(1e-7));
    CHECK(g[2] == Approx(-4).margin(1e-7));
  }
  SECTION("identity gradient of the half square norm") {
    auto M = registry::euclidean(2);
    ScalarField f = [](const Vec& x) { return 0.5 * x.squaredNorm(); };
    Vec x(2);
    x << 3, 4;
    Vec g = gradient(M, f, x);
    CHECK((g - x).norm() < 1e-7);
  }
  SECTION("rejects off-manifold points with a distance report") {
    auto pb = registry::s2_height();
    Vec x = registry::v3(2, 0, 0);
    try {
      gradient(pb.manifold, pb.f, x);
      FAIL("expected off_manifold_error");
    } catch (const off_manifold_error& e) {
      CHECK(e.distance > 1.0);
    }
  }
}

TEST_CASE("gradient directional-derivative property", "[geometry]") {
  auto names = {"s2-height", "s2-z2", "t2-cos", "model-x1sq-x2sq"};
  auto rng = make_rng(7);
  for (const auto& name : names) {
    auto pb = load_example(name);
    for (int trial = 0; trial < 6; ++trial) {
      Vec x = pb.manifold.project(pb.manifold.chart_samplers[0].draw(rng));
      Vec v = gradient(pb.manifold, pb.f, x);
      if (v.norm() < 1e-10) continue;
      double h = 1e-6;
      Vec u = v / v.norm();
      double dfv = (pb.f(pb.manifold.project(x + h * u)) -
                    pb.f(pb.manifold.project(x - h * u))) /
                   (2 * h) * v.norm();
      double n2 = v.squaredNorm();
      CHECK(std::abs(dfv - n2) < 1e-4 * (1 + n2));
    }
  }
}

TEST_CASE("tangent projector invariants", "[geometry]") {
  auto rng = make_rng(11);
  for (const auto& name : {"s2-height", "t2-cos"}) {
    auto pb = load_example(name);
    for (int trial = 0; trial < 4; ++trial) {
      Vec x = pb.manifold.project(pb.manifold.chart_samplers[0].draw(rng));
      Mat P = pb.manifold.tangent_projector(x);
      CHECK((P - P.transpose()).cwiseAbs().maxCoeff() < 1e-8);
      CHECK((P * P - P).cwiseAbs().maxCoeff() < 1e-8);
      CHECK(int(std::round(P.trace())) == pb.manifold.dim());
    }
  }
}

TEST_CASE("tangential Hessian spectra", "[geometry]") {
  SECTION("model quadratic at the origin") {
    auto pb = registry::model_x1sq_x2sq();
    auto spec = hessian_spectrum(pb.manifold, pb.f, registry::v3(0, 0, 0));
    REQUIRE(spec.eigenvalues.size() == 3);
    CHECK(spec.eigenvalues[0] == Approx(-2).margin(1e-4));
    CHECK(spec.eigenvalues[1] == Approx(0).margin(1e-4));
    CHECK(spec.eigenvalues[2] == Approx(2).margin(1e-4));
    CHECK(spec.trusted);
  }
  SECTION("quartic on the line: flat direction at an isolated critical point") {
    auto pb = registry::r1_x4();
    Vec zero(1);
    zero << 0.0;
    auto spec = hessian_spectrum(pb.manifold, pb.f, zero);
    REQUIRE(spec.eigenvalues.size() == 1);
    CHECK(std::abs(spec.eigenvalues[0]) < 1e-4);
  }
  SECTION("restricted Hessian of z^2 on the equator") {
    auto pb = registry::s2_z2();
    auto spec = hessian_spectrum(pb.manifold, pb.f, registry::v3(1, 0, 0));
    REQUIRE(spec.eigenvalues.size() == 2);
    // symbolic restriction: along the equator 0, along the meridian 2
    CHECK(std::abs(spec.eigenvalues[0]) < 1e-4);
    CHECK(spec.eigenvalues[1] == Approx(2).margin(1e-3));
  }
  SECTION("non-critical points are flagged") {
    auto pb = registry::s2_height();
    auto spec = hessian_spectrum(pb.manifold, pb.f, registry::v3(1, 0, 0));
    CHECK_FALSE(spec.trusted);
  }
}

TEST_CASE("Hessian inertia is chart independent", "[geometry]") {
  // same point of the equator reached through two different parameterizations
  auto pb = registry::s2_z2();
  Vec p1 = registry::v3(std::cos(0.4), std::sin(0.4), 0.0);
  auto s1 = hessian_spectrum(pb.manifold, pb.f, p1);
  Vec p2 = pb.manifold.project(registry::v3(std::cos(0.4) + 1e-13, std::sin(0.4), 0.0));
  auto s2 = hessian_spectrum(pb.manifold, pb.f, p2);
  auto inertia = [](const HessianSpectrum& s) {
    int neg = s.count_negative(1e-4), ker = s.count_kernel(1e-4);
    return std::pair<int, int>(neg, ker);
  };
  CHECK(inertia(s1) == inertia(s2));
}

TEST_CASE("Morse-Bott verdicts over the registry", "[geometry]") {
  CHECK(check_morse_bott(registry::s2_height()).pass);
  CHECK(check_morse_bott(registry::s2_z2()).pass);
  CHECK(check_morse_bott(registry::t2_cos()).pass);
  CHECK(check_morse_bott(registry::t2_morse()).pass);
  CHECK(check_morse_bott(registry::s1_flat()).pass);
  CHECK(check_morse_bott(registry::model_x1sq_x2sq()).pass);
  auto rep = check_morse_bott(registry::r1_x4());
  CHECK_FALSE(rep.pass);
  REQUIRE(rep.rows.size() == 1);
  CHECK(rep.rows[0].worst_kernel == 1);  // kernel exceeds the point dimension
}

TEST_CASE("listed h-critical points must be nondegenerate", "[geometry]") {
  auto pb = registry::s2_z2();
  CHECK(check_h_critical_points(pb.sub(2)));
  auto bogus = pb.sub(2);
  bogus.crit_h[0].u = Vec::Constant(1, 0.1);  // not a critical point of h
  CHECK_FALSE(check_h_critical_points(bogus));
  auto wrong_index = pb.sub(2);
  wrong_index.crit_h[0].ind_h = 0;  // the maximum mislabelled as a minimum
  CHECK_FALSE(check_h_critical_points(wrong_index));
}

TEST_CASE("no unlisted critical points at search resolution", "[geometry]") {
  auto rng = make_rng(23);
  for (const auto& name : {"s2-height", "s2-z2", "t2-cos", "model-x1sq-x2sq"}) {
    auto pb = load_example(name);
    CHECK(no_unlisted_critical_points(pb, rng));
  }
}

TEST_CASE("Newton projection controls drift", "[geometry]") {
  auto pb = registry::t2_cos();
  Vec x = registry::v4(1.1, 0.05, 0.2, 1.3);
  Vec p = pb.manifold.project(x);
  CHECK(pb.manifold.constraint_norm(p) < 1e-10);
}

TEST_CASE("degenerate constraint Jacobians are rejected", "[geometry]") {
  // squared circle equation: the Jacobian vanishes on the zero set
  ManifoldModel M;
  M.ambient_dim = 2;
  M.codim = 1;
  M.constraint = [](const Vec& x) {
    double c = x.squaredNorm() - 1.0;
    Vec v(1);
    v << c * c;
    return v;
  };
  Vec near(2);
  near << 1.01, 0.0;
  CHECK_THROWS_AS(M.project(near), std::runtime_error);
}
