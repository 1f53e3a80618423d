#include <catch2/catch_amalgamated.hpp>

#include "flowhom/homology.hpp"
#include "flowhom/registry.hpp"

using namespace flowhom;

namespace {

SearchParams quick_params() {
  SearchParams sp;
  sp.u_samples = 48;
  sp.dir_samples = 64;
  return sp;
}

}  // namespace

TEST_CASE("GF2 matrix basics", "[homology]") {
  GF2Matrix a(2, 3);
  a.set(0, 0, true);
  a.set(0, 2, true);
  a.set(1, 2, true);
  CHECK(a.rank() == 2);
  GF2Matrix b(3, 2);
  b.set(0, 0, true);
  b.set(2, 0, true);
  b.set(2, 1, true);
  auto c = a.multiply(b);  // over GF(2): cancellation happens
  CHECK(c.rows() == 2);
  CHECK(c.cols() == 2);
  CHECK(c.get(0, 0) == false);  // 1*1 + 0*0 + 1*1 = 0
  CHECK(c.get(0, 1) == true);
  CHECK(c.get(1, 0) == true);
  CHECK(c.get(1, 1) == true);
  GF2Matrix z(4, 70);  // spans two words
  z.flip(3, 69);
  CHECK(z.get(3, 69));
  CHECK(z.rank() == 1);
}

TEST_CASE("sphere complex from cascade counts", "[homology]") {
  auto pb = registry::s2_z2();
  auto cx = build_complex(pb, quick_params());
  REQUIRE(cx.top_degree() == 2);
  CHECK(cx.count(0) == 1);
  CHECK(cx.count(1) == 1);
  CHECK(cx.count(2) == 2);
  // boundary: both poles map to the saddle, the saddle maps to zero
  CHECK(cx.boundary[2].get(0, 0));
  CHECK(cx.boundary[2].get(0, 1));
  CHECK_FALSE(cx.boundary[1].get(0, 0));
  CHECK(verify_d_squared(cx));
  CHECK(betti(cx) == std::vector<int>{1, 0, 1});
  CHECK(cx.euler() == 2);
}

TEST_CASE("pure Morse sphere has a trivial boundary", "[homology]") {
  auto cx = build_complex(registry::s2_height(), quick_params());
  for (int k = 1; k <= cx.top_degree(); ++k)
    CHECK(cx.boundary[k].is_zero());
  CHECK(betti(cx) == std::vector<int>{1, 0, 1});
}

TEST_CASE("circle with vanishing f: arcs cancel mod 2", "[homology]") {
  auto cx = build_complex(registry::s1_flat(), quick_params());
  CHECK(cx.count(0) == 1);
  CHECK(cx.count(1) == 1);
  CHECK(cx.boundary[1].is_zero());
  CHECK(betti(cx) == std::vector<int>{1, 1});
  CHECK(cx.euler() == 0);
}

TEST_CASE("torus Betti numbers", "[homology]") {
  auto cx = build_complex(registry::t2_cos(), quick_params());
  CHECK(betti(cx) == std::vector<int>{1, 2, 1});
  CHECK(cx.euler() == 0);
}

TEST_CASE("d squared detectors", "[homology]") {
  SECTION("corrupted entry is caught") {
    auto cx = build_complex(registry::s2_z2(), quick_params());
    cx.boundary[1].flip(0, 0);  // force d(saddle) = min
    CHECK_FALSE(verify_d_squared(cx));
    CHECK_THROWS(betti(cx));
  }
  SECTION("empty complex is vacuously fine") {
    ChainComplexGF2 cx;
    CHECK(verify_d_squared(cx));
    CHECK(betti(cx).empty());
  }
}

TEST_CASE("Betti numbers ignore generator ordering", "[homology]") {
  auto pb = registry::s2_z2();
  auto cx = build_complex(pb, quick_params());
  // permute the two degree-2 generators and the boundary columns to match
  ChainComplexGF2 permuted = cx;
  std::swap(permuted.generators[2][0], permuted.generators[2][1]);
  GF2Matrix d(cx.boundary[2].rows(), cx.boundary[2].cols());
  for (int r = 0; r < d.rows(); ++r) {
    d.set(r, 0, cx.boundary[2].get(r, 1));
    d.set(r, 1, cx.boundary[2].get(r, 0));
  }
  permuted.boundary[2] = d;
  CHECK(betti(permuted) == betti(cx));
}

TEST_CASE("non Morse-Bott input refuses to build", "[homology]") {
  CHECK_THROWS_AS(build_complex(registry::r1_x4(), quick_params()), config_error);
}

TEST_CASE("quadruple independence shadow", "[homology]") {
  auto sp = quick_params();
  CHECK(compare_quadruples(registry::s2_z2(), registry::s2_height(), sp));
  CHECK(compare_quadruples(registry::s2_z2(), registry::s2_z2(), sp));
}

TEST_CASE("Betti numbers survive a metric change", "[homology]") {
  // the same function data over a perturbed ambient metric is another valid
  // quadruple on the same manifold
  auto sp = quick_params();
  auto perturbed = perturb_metric(registry::s2_z2(), 4242);
  CHECK(betti(build_complex(perturbed, sp)) == std::vector<int>{1, 0, 1});
}

TEST_CASE("Euler characteristic from generators", "[homology]") {
  auto sp = quick_params();
  CHECK(build_complex(registry::s2_z2(), sp).euler() == 2);
  CHECK(build_complex(registry::t2_morse(), sp).euler() == 0);
}

TEST_CASE("complex serialization", "[homology]") {
  auto cx = build_complex(registry::s2_z2(), quick_params());
  auto j = complex_to_json(cx);
  CHECK(j["betti"] == std::vector<int>{1, 0, 1});
  CHECK(j["euler"] == 2);
  CHECK(j["d_squared_ok"] == true);
  CHECK(j["boundary"].size() == 2);  // dN = s and dS = s
}
