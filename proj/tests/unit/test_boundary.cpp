#include "chamberwalk/boundary.hpp"
#include "doctest.h"

using namespace chamberwalk;
using namespace chamberwalk::boundary;
using coxeter::IntVector;

namespace {

Coweight cw(long a, long b) { return Coweight(IntVector{a, b}); }

const A2Ball& ball23() {
  static const A2Ball b = A2Ball::build(2, 3);
  return b;
}

}  // namespace

TEST_CASE("cylinder measures") {
  TreeBuilding t(2);
  CHECK(nu_cylinder(t, "e", "e") == 1);
  CHECK(nu_cylinder(t, "e", "0") == rational(1, 3));
  CHECK(nu_cylinder(t, "01", "0") == rational(1, 3));
  for (unsigned k = 0; k <= 6; ++k) CHECK(partition_sum(t, "e", k) == 1);
  CHECK(partition_sum(t, "012", 4) == 1);

  const auto& b = ball23();
  const auto v1 = b.v_lambda(b.base(), cw(1, 0));
  CHECK(nu_cylinder(b, b.base(), v1.front()) == rational(1, 7));
  CHECK(nu_cylinder(b, b.base(), b.base()) == 1);
  for (long a = 0; a <= 3; ++a)
    for (long c = 0; c <= 3; ++c) CHECK(partition_sum(b, b.base(), cw(a, c)) == 1);
  CHECK(partition_sum(b, v1.front(), cw(1, 1)) == 1);
}

TEST_CASE("refinement consistency") {
  for (int q : {2, 3}) {
    TreeBuilding t(q);
    const auto r = refinement_check(t, "e", 5);
    CHECK(r.verdict);
    CHECK(r.defect == 0);
    CHECK(r.checked > 0);
  }
  TreeBuilding t(2);
  CHECK(refinement_check(t, "0", 1).verdict);
  const auto r = refinement_check(ball23());
  CHECK(r.verdict);
  CHECK(r.checked > 1000);
  const auto r3 = refinement_check(A2Ball::build(3, 2));
  CHECK(r3.verdict);
}

TEST_CASE("Radon-Nikodym derivative on trees") {
  for (int q : {2, 3}) {
    TreeBuilding t(q);
    const unsigned depth = q == 2 ? 6 : 5;
    for (const auto& y : {std::string("e"), std::string("0"), std::string("01"), std::string("12"), std::string("010")}) {
      const auto r = radon_nikodym_check(t, "e", y, depth);
      CHECK(r.verdict);
      CHECK(r.defect == 0);
    }
  }
  // y one step toward the cylinder: ratio q.
  TreeBuilding t2(2);
  CHECK(nu_cylinder(t2, "0", "01") / nu_cylinder(t2, "e", "01") == 2);
  TreeBuilding t3(3);
  CHECK(nu_cylinder(t3, "01", "012") / nu_cylinder(t3, "e", "012") == 9);
}

TEST_CASE("m-measure is basepoint independent and invariant") {
  TreeBuilding t(2);
  for (const auto& [x, y] : std::vector<std::pair<std::string, std::string>>{{"e", "e"}, {"e", "0"}, {"e", "01"}, {"2", "01"}}) {
    const auto r = m_measure_checks(t, x, y, 3, "12");
    CHECK(r.verdict);
    CHECK(r.defect == 0);
  }
  // beta agrees with the geodesic construction.
  const auto g = t.geodesic("010", "121");
  CHECK(buildings::beta(t, "2", g) == 2);
  CHECK(m_measure(t, "2", "010", "121") == Rational(4) * nu_cylinder(t, "2", "010") * nu_cylinder(t, "2", "121"));
  CHECK_THROWS_AS(m_measure(t, "e", "0", "01"), std::invalid_argument);
  TreeBuilding t3(3);
  CHECK(m_measure_checks(t3, "e", "1", 3, "20").verdict);
}

TEST_CASE("isotropic kernels") {
  const auto& b = ball23();
  const auto k = IsotropicKernel::a2_uniform();
  const auto& w = *b.type_data().group;
  CHECK(k.symmetric(w));
  CHECK(k.row_sum(b, b.base()) == 1);
  const auto v = b.v_lambda(b.base(), cw(1, 1)).front();
  CHECK(k.row_sum(b, v) == 1);
  CHECK(k.transition(b, b.base(), b.v_lambda(b.base(), cw(0, 1)).front()) == rational(1, 14));
  CHECK(k.transition(b, b.base(), v) == 0);

  const IsotropicKernel skew({{cw(1, 0), rational(1, 3)}, {cw(0, 1), rational(2, 3)}});
  CHECK_FALSE(skew.symmetric(w));
  CHECK(skew.symmetrized(w).symmetric(w));
  CHECK_THROWS(IsotropicKernel({{cw(1, 0), rational(1, 3)}}));
  CHECK_THROWS(IsotropicKernel({{cw(0, 0), Rational(1)}}));

  TreeBuilding t(2);
  const auto srw = IsotropicKernel::tree_srw();
  CHECK(srw.transition(t, "e", "1") == rational(1, 3));
  CHECK(srw.transition(t, "e", "12") == 0);
  const IsotropicKernel two({{Coweight(IntVector{2}), Rational(1)}});
  RngStream rng(1, 0);
  for (int i = 0; i < 50; ++i) CHECK(t.distance("e", two.step(t, "01", rng)) % 2 == 0);
}

TEST_CASE("tree boundary hitting is uniform") {
  TreeBuilding t(2);
  const auto srw = IsotropicKernel::tree_srw();
  for (unsigned lvl : {1u, 2u, 3u}) {
    const auto h = boundary_hitting_mc(t, srw, lvl, 20000, 11, 2);
    CHECK(h.cylinders.size() == (lvl == 1 ? 3u : lvl == 2 ? 6u : 12u));
    CHECK(h.unresolved == 0);
    CHECK_FALSE(h.flagged);
    CHECK(h.chi.passes());
    std::uint64_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == h.samples);
  }
  const auto a = boundary_hitting_mc(t, srw, 2, 5000, 3, 1);
  const auto c = boundary_hitting_mc(t, srw, 2, 5000, 3, 4);
  CHECK(a.counts == c.counts);
  CHECK(a.to_csv().rfind("cylinder,count,expected\n", 0) == 0);
}

TEST_CASE("ball boundary hitting within sigma classes") {
  const auto& b = ball23();
  const auto h = boundary_hitting_mc(b, IsotropicKernel::a2_uniform(), 2, 20000, 5, 2);
  CHECK(h.label == "statistical, truncation-limited");
  CHECK(h.cylinders.size() == 28u + 168u + 672u + 28u + 168u);
  CHECK(h.chi.passes());
  CHECK(h.unresolved == 0);
  CHECK_THROWS_AS(boundary_hitting_mc(b, IsotropicKernel::a2_uniform(), 3, 10, 5, 1), buildings::InsufficientDepth);
}

TEST_CASE("special subgroup detector") {
  buildings::SphericalA2 s(2);
  RngStream rng(21, 0);
  const std::vector<std::set<int>> js{{}, {1}, {2}, {1, 2}};
  for (const auto& j : js)
    for (int trial = 0; trial < 20; ++trial) {
      const auto pi = random_labelling(s, j, rng);
      const auto r = special_subgroup_detect(s, pi);
      CHECK(r.j == j);
      CHECK(r.verdict);
      CHECK(r.equals_parabolic);
      CHECK(r.splitting_closed);
    }
  // A labelling by the point of the flag is constant on {2}-residues.
  std::vector<int> by_point(s.num_chambers());
  for (std::size_t c = 0; c < s.num_chambers(); ++c) by_point[c] = s.flag(c).first == 0 ? 1 : 0;
  const auto r = special_subgroup_detect(s, by_point);
  CHECK(r.j == std::set<int>{2});
  CHECK(r.e.size() == 2);
  CHECK(r.to_json()["E"].size() == 2);
  CHECK_THROWS(special_subgroup_detect(s, {0, 1}));
}
