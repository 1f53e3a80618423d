#include <catch2/catch_amalgamated.hpp>
#include <map>

#include "flowhom/cascades.hpp"
#include "flowhom/registry.hpp"

using namespace flowhom;

namespace {

std::map<std::string, CritPoint> generators_by_name(const MorseBottProblem& pb) {
  std::map<std::string, CritPoint> out;
  for (auto& g : enumerate_generators(pb)) out[g.name] = g;
  return out;
}

SearchParams quick_params() {
  SearchParams sp;
  sp.u_samples = 48;
  sp.dir_samples = 64;
  return sp;
}

}  // namespace

TEST_CASE("total index and moduli dimension", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  CHECK(g.at("N").Ind() == 2);
  CHECK(g.at("equator/max").Ind() == 1);  // the saddle generator
  CHECK(g.at("equator/min").Ind() == 0);
  CHECK(expected_moduli_dim(g.at("N"), g.at("equator/max")) == 0);
  CHECK(expected_moduli_dim(g.at("equator/max"), g.at("equator/min")) == 0);
  CHECK(expected_moduli_dim(g.at("N"), g.at("equator/min")) == 1);
}

TEST_CASE("trichotomy classification", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  CHECK(classify_pair(g.at("equator/max"), g.at("N")) == PairClass::empty);
  CHECK(classify_pair(g.at("equator/max"), g.at("equator/min")) ==
        PairClass::zero_cascades_only);
  CHECK(classify_pair(g.at("N"), g.at("equator/max")) ==
        PairClass::positive_cascades_only);
}

TEST_CASE("one cascade from the pole to the saddle", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  auto sp = quick_params();
  auto lines = find_cascades(pb, g.at("N"), g.at("equator/max"), 1, sp);
  REQUIRE(lines.size() == 1);
  const auto& l = lines[0];
  CHECK(l.m == 1);
  CHECK(l.residual < sp.match_tol);
  CHECK_FALSE(l.broken);
  // the cascade leaves the pole and lands at the saddle azimuth
  CHECK((l.source_witness - g.at("N").point).norm() < 1e-2);
  CHECK((l.target_witness - g.at("equator/max").point).norm() < 1e-3);
}

TEST_CASE("two Morse arcs on a circle", "[cascades]") {
  auto pb = registry::s1_flat();
  auto g = generators_by_name(pb);
  auto lines =
      find_cascades(pb, g.at("circle/max"), g.at("circle/min"), 0, quick_params());
  CHECK(lines.size() == 2);
}

TEST_CASE("upward pairs are empty", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  for (int m = 0; m <= 2; ++m)
    CHECK(find_cascades(pb, g.at("equator/max"), g.at("N"), m, quick_params()).empty());
}

TEST_CASE("no solutions below the dimension bound", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  // saddle -> S: expected dimension 1 - 2 - 1 = -2
  CHECK(expected_moduli_dim(g.at("equator/max"), g.at("S")) < 0);
  auto lines = find_cascades(pb, g.at("equator/max"), g.at("S"), 1, quick_params());
  CHECK(lines.empty());
}

TEST_CASE("mod-2 counts on the sphere", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  auto sp = quick_params();
  CHECK(count_mod2(pb, g.at("N"), g.at("equator/max"), sp) == 1);
  CHECK(count_mod2(pb, g.at("S"), g.at("equator/max"), sp) == 1);
  CHECK(count_mod2(pb, g.at("equator/max"), g.at("equator/min"), sp) == 0);
}

TEST_CASE("mod-2 counts on the torus pair up", "[cascades]") {
  auto pb = registry::t2_cos();
  auto g = generators_by_name(pb);
  auto sp = quick_params();
  CHECK(count_mod2(pb, g.at("top/max"), g.at("top/min"), sp) == 0);
  CHECK(count_mod2(pb, g.at("top/max"), g.at("bottom/max"), sp) == 0);
  CHECK(count_mod2(pb, g.at("top/min"), g.at("bottom/min"), sp) == 0);
  CHECK(count_mod2(pb, g.at("bottom/max"), g.at("bottom/min"), sp) == 0);
}

TEST_CASE("count requires unit index gap", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  CHECK_THROWS_AS(count_mod2(pb, g.at("N"), g.at("equator/min"), quick_params()),
                  std::invalid_argument);
}

TEST_CASE("counts are stable under integration-origin shifts", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  auto sp = quick_params();
  int base = count_mod2(pb, g.at("N"), g.at("equator/max"), sp);
  sp.eps_shoot = 4e-4;  // shifts every cascade's origin along itself
  CHECK(count_mod2(pb, g.at("N"), g.at("equator/max"), sp) == base);
}

TEST_CASE("dedup semantics", "[cascades]") {
  SearchParams sp;
  auto mk = [](double p) {
    CascadeFlowLine l;
    l.m = 1;
    l.params = {0.0, p};
    l.source_witness = Vec::Zero(2);
    l.target_witness = Vec::Zero(2);
    Trajectory t;
    t.points = {Vec::Zero(2), Vec::Constant(2, p), Vec::Zero(2)};
    t.times = {0, 1, 2};
    t.speeds = {1, 1, 0};
    l.cascades = {t};
    return l;
  };
  SECTION("roots coincident at refinement precision merge") {
    auto out = detail::dedup_lines({mk(0.5), mk(0.5 + 1e-11)}, sp);
    CHECK(out.size() == 1);
  }
  SECTION("well-separated solutions survive") {
    auto out = detail::dedup_lines({mk(0.1), mk(0.7)}, sp);
    CHECK(out.size() == 2);
  }
  SECTION("unresolved near-duplicates raise the transversality error") {
    CHECK_THROWS_AS(detail::dedup_lines({mk(0.5), mk(0.5 + 1e-5)}, sp),
                    nontransversal_error);
  }
}

TEST_CASE("counts survive a small metric perturbation", "[cascades]") {
  auto pb = registry::s2_z2();
  auto perturbed = perturb_metric(pb, 12345);
  REQUIRE(perturbed.manifold.metric);
  auto g = generators_by_name(perturbed);
  auto sp = quick_params();
  CHECK(count_mod2(perturbed, g.at("N"), g.at("equator/max"), sp) == 1);
  CHECK(count_mod2(perturbed, g.at("equator/max"), g.at("equator/min"), sp) == 0);
}

TEST_CASE("interior dwell detector", "[cascades]") {
  SearchParams sp;
  Trajectory tr;
  auto push = [&](double s, double v) {
    tr.times.push_back(s);
    tr.points.push_back(Vec::Zero(2));
    tr.speeds.push_back(v);
  };
  SECTION("monotone approach is clean") {
    for (int i = 0; i < 40; ++i) push(i, std::exp(-double(i)));
    CHECK_FALSE(detail::has_interior_dwell(tr, sp));
  }
  SECTION("dip and recovery is flagged") {
    for (int i = 0; i < 10; ++i) push(i, 0.5);
    push(10, 1e-5);
    push(11, 1e-5);
    for (int i = 12; i < 20; ++i) push(i, 0.5);
    CHECK(detail::has_interior_dwell(tr, sp));
  }
}

TEST_CASE("trichotomy scan finds no violations", "[cascades]") {
  SearchParams sp = quick_params();
  sp.u_samples = 24;
  sp.dir_samples = 32;
  for (const auto& name : {"s2-z2", "s1-flat", "t2-cos"}) {
    auto scan = scan_trichotomy(load_example(name), sp);
    CHECK(scan.consistent);
  }
}

TEST_CASE("cascade CSV export", "[cascades]") {
  auto pb = registry::s2_z2();
  auto g = generators_by_name(pb);
  auto lines = find_cascades(pb, g.at("N"), g.at("equator/max"), 1, quick_params());
  REQUIRE_FALSE(lines.empty());
  std::ostringstream os;
  write_cascade_csv(lines[0], os);
  CHECK(os.str().rfind("segment,s,", 0) == 0);
}
