#include <catch2/catch_amalgamated.hpp>
#include <sstream>

#include "flowhom/flow.hpp"
#include "flowhom/registry.hpp"

using namespace flowhom;
using Catch::Approx;

TEST_CASE("flow from near the top of the sphere", "[flow]") {
  auto pb = registry::s2_height();
  double eps = 0.1;
  Vec x0 = registry::v3(std::sin(eps), 0, std::cos(eps));
  auto tr = integrate_flow(pb, x0);
  REQUIRE(tr.reached_stop);
  REQUIRE(tr.limit.has_value());
  CHECK(pb.sub(tr.limit->submanifold).name == "S");
  REQUIRE(tr.fit.has_value());
  // decay rate against the smallest tangential Hessian eigenvalue at the pole
  auto spec = hessian_spectrum(pb.manifold, pb.f, registry::v3(0, 0, -1));
  double lambda_min = std::numeric_limits<double>::infinity();
  for (double e : spec.eigenvalues)
    if (std::abs(e) > 1e-4) lambda_min = std::min(lambda_min, std::abs(e));
  CHECK(tr.fit->ok());
  CHECK(std::abs(tr.fit->delta - lambda_min) <= 0.2 * lambda_min);
}

TEST_CASE("fitted envelope bounds the speed on the window", "[flow]") {
  auto pb = registry::s2_height();
  auto tr = integrate_flow(pb, registry::v3(std::sin(0.2), 0, std::cos(0.2)));
  REQUIRE(tr.fit.has_value());
  const auto& fit = *tr.fit;
  for (size_t i = 0; i < tr.times.size(); ++i) {
    if (tr.times[i] < fit.s_begin || tr.speeds[i] <= 0) continue;
    CHECK(tr.speeds[i] <= 2.0 * fit.c * std::exp(-fit.delta * tr.times[i]));
  }
}

TEST_CASE("quartic counterexample: no exponential decay", "[flow]") {
  auto pb = registry::r1_x4();
  Vec x0(1);
  x0 << 1.0;
  auto tr = integrate_flow(pb, x0);
  CHECK_FALSE(tr.reached_stop);  // horizon exceeded, limit absent
  CHECK_FALSE(tr.limit.has_value());
  REQUIRE(tr.fit.has_value());
  CHECK(tr.fit->r2 < 0.98);
}

TEST_CASE("critical start gives a constant trajectory", "[flow]") {
  auto pb = registry::s2_height();
  auto tr = integrate_flow(pb, registry::v3(0, 0, -1));
  CHECK(tr.reached_stop);
  CHECK(tr.times.size() == 1);
  CHECK_FALSE(tr.fit.has_value());
  REQUIRE(tr.limit.has_value());
  CHECK((tr.limit->point - registry::v3(0, 0, -1)).norm() < 1e-9);
}

TEST_CASE("energy monotone and limits critical", "[flow]") {
  auto rng = make_rng(5);
  for (const auto& name : {"s2-height", "s2-z2", "t2-cos", "t2-morse"}) {
    auto pb = load_example(name);
    for (int trial = 0; trial < 3; ++trial) {
      Vec x0 = pb.manifold.project(pb.manifold.chart_samplers[0].draw(rng));
      auto tr = integrate_flow(pb, x0);
      for (size_t i = 1; i < tr.points.size(); ++i)
        CHECK(pb.f(tr.points[i]) <= pb.f(tr.points[i - 1]) + 1e-8);
      REQUIRE(tr.limit.has_value());
      CHECK(gradient(pb.manifold, pb.f, tr.limit->point).norm() < 1e-6);
    }
  }
}

TEST_CASE("decay dichotomy across the registry", "[flow]") {
  auto rng = make_rng(31);
  for (const auto& name : {"s2-height", "s2-z2", "t2-cos", "t2-morse"}) {
    auto pb = load_example(name);
    Vec x0 = pb.manifold.project(pb.manifold.chart_samplers[0].draw(rng));
    auto tr = integrate_flow(pb, x0);
    REQUIRE(tr.fit.has_value());
    CHECK(tr.fit->ok());
  }
}

TEST_CASE("flow on a critical circle", "[flow]") {
  auto pb = registry::s2_z2();
  const auto& eq = pb.sub(2);
  SECTION("zero time is the identity") {
    Vec p = eq.param(Vec::Constant(1, 0.3));
    CHECK((flow_on_critical_manifold(eq, p, 0.0) - p).norm() < 1e-12);
  }
  SECTION("quarter turn flows to the minimum") {
    Vec p = eq.param(Vec::Constant(1, 0.25));
    Vec q = flow_on_critical_manifold(eq, p, 60.0);
    CHECK((q - eq.param(Vec::Constant(1, 0.5))).norm() < 1e-6);
  }
  SECTION("matches a brute-force chart integration") {
    // independent oracle: fixed-step Euler on the chart ODE
    Vec u(1);
    u << 0.2;
    double t = 1.7, dt = 2e-6;
    Vec w = u;
    for (double s = 0; s < t; s += dt) {
      Vec g = eq.h_grad_chart(w);
      w[0] = wrap01(w[0] - dt * g[0]);
    }
    Vec q = flow_on_critical_manifold(eq, eq.param(u), t);
    CHECK((q - eq.param(w)).norm() < 1e-4);
  }
  SECTION("off-submanifold points are rejected") {
    CHECK_THROWS_AS(flow_on_critical_manifold(eq, registry::v3(0, 0, 1), 1.0),
                    off_manifold_error);
  }
  SECTION("negative time is rejected") {
    Vec p = eq.param(Vec::Constant(1, 0.3));
    CHECK_THROWS_AS(flow_on_critical_manifold(eq, p, -1.0), std::invalid_argument);
  }
}

TEST_CASE("h-flow limits identify basins", "[flow]") {
  auto pb = registry::s2_z2();
  const auto& eq = pb.sub(2);
  Vec u(1);
  u << 0.2;
  CHECK(h_flow_limit(eq, u, +1) == 1);  // forward to the minimum
  CHECK(h_flow_limit(eq, u, -1) == 0);  // backward to the maximum
  Vec at_max(1);
  at_max << 0.0;
  CHECK(h_flow_limit(eq, at_max, +1) == 0);  // critical starts stay put
}

TEST_CASE("trajectory CSV export", "[flow]") {
  auto pb = registry::s2_height();
  auto tr = integrate_flow(pb, registry::v3(std::sin(0.3), 0, std::cos(0.3)));
  std::ostringstream os;
  write_trajectory_csv(tr, os);
  std::string csv = os.str();
  CHECK(csv.rfind("s,x0,x1,x2,speed\n", 0) == 0);
  size_t lines = std::count(csv.begin(), csv.end(), '\n');
  CHECK(lines == tr.times.size() + 1);
}
