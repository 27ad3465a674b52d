#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "chamberwalk/coxeter.hpp"
#include "doctest.h"

using namespace chamberwalk;
using namespace chamberwalk::coxeter;

namespace {

std::multiset<int> lengths(const WeylGroup& g) {
  std::multiset<int> out;
  for (const auto& w : g.elements()) out.insert(w.length());
  return out;
}

// Brute-force oracle: closure of permutation generators, BFS depth = word length.
std::multiset<int> permutation_closure_lengths(const std::vector<std::vector<int>>& gens) {
  const std::size_t n = gens.front().size();
  std::vector<int> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::map<std::vector<int>, int> depth{{id, 0}};
  std::vector<std::vector<int>> frontier{id};
  int d = 0;
  while (!frontier.empty()) {
    ++d;
    std::vector<std::vector<int>> next;
    for (const auto& p : frontier)
      for (const auto& g : gens) {
        std::vector<int> q(n);
        for (std::size_t i = 0; i < n; ++i) q[i] = g[static_cast<std::size_t>(p[i])];
        if (depth.emplace(q, d).second) next.push_back(q);
      }
    frontier = std::move(next);
  }
  std::multiset<int> out;
  for (const auto& [p, l] : depth) out.insert(l);
  return out;
}

}  // namespace

TEST_CASE("root system data") {
  for (const char* label : {"A1", "A2", "A3", "B2", "C2", "G2"}) {
    const auto rs = RootSystem::from_type(label);
    const WeylGroup g(rs);
    CAPTURE(label);
    // <lambda_i, alpha_j> = delta_ij
    const auto simple = rs.simple_roots();
    for (int i = 0; i < rs.rank(); ++i)
      for (int j = 0; j < rs.rank(); ++j)
        CHECK(rs.inner(rs.fundamental_coweights()[i], simple[j]) == (i == j ? 1 : 0));
    CHECK(static_cast<int>(rs.positive_roots().size()) == g.longest().length());
    for (const auto& beta : rs.positive_roots())
      for (std::size_t k = 0; k < beta.size(); ++k) CHECK(rs.highest_root()[k] - beta[k] >= 0);
    // Short roots have squared length 2.
    Rational shortest = rs.gram()[0][0];
    for (int i = 0; i < rs.rank(); ++i) shortest = std::min(shortest, rs.gram()[i][i]);
    CHECK(shortest == 2);
  }
  CHECK_THROWS_AS(RootSystem::from_type("E8"), UnsupportedType);
  CHECK_THROWS_AS(RootSystem::from_cartan("bad", {{2, -2}, {-2, 2}}), UnsupportedType);
}

TEST_CASE("B2 and C2 conventions are fixed by the Gram matrix") {
  const auto b2 = RootSystem::from_type("B2");
  const auto c2 = RootSystem::from_type("C2");
  CHECK(b2.gram()[0][0] == 4);
  CHECK(b2.gram()[1][1] == 2);
  CHECK(c2.gram()[0][0] == 2);
  CHECK(c2.gram()[1][1] == 4);
  CHECK(b2.highest_root() == IntVector{1, 2});
  CHECK(c2.highest_root() == IntVector{2, 1});
}

TEST_CASE("enumerate_weyl") {
  const auto a1 = RootSystem::from_type("A1");
  CHECK(lengths(WeylGroup(a1)) == std::multiset<int>{0, 1});

  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g2a(a2);
  // S3 generated by the transpositions (01) and (12).
  const auto s3 = permutation_closure_lengths({{1, 0, 2}, {0, 2, 1}});
  CHECK(s3 == std::multiset<int>{0, 1, 1, 2, 2, 3});
  CHECK(lengths(g2a) == s3);

  const auto g2 = RootSystem::from_type("G2");
  const WeylGroup gg(g2);
  // Dihedral group of the hexagon generated by two adjacent reflections.
  std::vector<int> r1(6), r2(6);
  for (int i = 0; i < 6; ++i) {
    r1[static_cast<std::size_t>(i)] = (6 - i) % 6;
    r2[static_cast<std::size_t>(i)] = (7 - i) % 6;
  }
  const auto d6 = permutation_closure_lengths({r1, r2});
  CHECK(d6.size() == 12);
  CHECK(*d6.rbegin() == 6);
  CHECK(lengths(gg) == d6);

  for (const char* label : {"A1", "A2", "A3", "B2", "C2", "G2"}) {
    const auto rs = RootSystem::from_type(label);
    const WeylGroup g(rs);
    for (const auto& w : g.elements()) {
      CHECK(g.inversion_count(w) == w.length());
      CHECK(g.from_word(w.word()) == w);
    }
  }
  CHECK(WeylGroup(RootSystem::from_type("A3")).order() == 24);
}

TEST_CASE("reduced_word") {
  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g(a2);
  CHECK(g.reduced_word(g.identity()).empty());
  CHECK(g.reduced_word(g.generator(1)) == Word{1});
  const Word w0 = g.reduced_word(g.longest());
  CHECK(w0.size() == 3);
  CHECK((w0 == Word{1, 2, 1} || w0 == Word{2, 1, 2}));
  for (const auto& w : g.elements()) {
    const Word rw = g.reduced_word(w);
    CHECK(static_cast<int>(rw.size()) == g.inversion_count(w));
    CHECK(g.from_word(rw) == w);
  }
}

TEST_CASE("poincare_sum") {
  const auto a1 = RootSystem::from_type("A1");
  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g1(a1), g2(a2);
  const auto q1 = ThicknessVector::uniform(a1, 2);
  const auto q2 = ThicknessVector::uniform(a2, 2);
  CHECK(poincare_sum({g2.identity()}, q2) == 1);
  CHECK(poincare_sum(g1.elements(), q1) == rational(3, 2));
  CHECK(poincare_sum(g2.elements(), q2) == rational(21, 8));
}

TEST_CASE("q_w does not depend on the reduced word") {
  for (const char* label : {"A1", "A2", "A3", "B2", "C2", "G2"}) {
    const auto rs = RootSystem::from_type(label);
    const WeylGroup g(rs);
    // Non-uniform thickness where the diagram allows it.
    const auto classes = affine_reflection_classes(rs);
    std::vector<long> q(classes.size());
    for (std::size_t i = 0; i < q.size(); ++i) q[i] = 2 + classes[i];
    const ThicknessVector t(rs, q);
    for (const auto& w : g.elements()) {
      const auto words = g.all_reduced_words(w);
      REQUIRE(!words.empty());
      for (const auto& word : words) CHECK(t.for_word(word) == t.for_word(words.front()));
    }
    CHECK(g.all_reduced_words(g.longest()).size() >= (rs.rank() > 1 ? 2u : 1u));
  }
}

TEST_CASE("thickness validation") {
  const auto a2 = RootSystem::from_type("A2");
  CHECK_THROWS(ThicknessVector(a2, {2, 2, 3}));
  CHECK_THROWS(ThicknessVector(a2, {2, 2}));
  const auto a1 = RootSystem::from_type("A1");
  // The infinite dihedral group has two classes of reflections.
  CHECK_NOTHROW(ThicknessVector(a1, {2, 3}));
  // Affine C2: the two end nodes are not joined by an odd bond.
  const auto cls = affine_reflection_classes(RootSystem::from_type("B2"));
  CHECK(std::set<int>(cls.begin(), cls.end()).size() == 3);
  // Affine G2: alpha_0 is conjugate to the long simple root alpha_2.
  const auto g2 = affine_reflection_classes(RootSystem::from_type("G2"));
  CHECK(g2[0] == g2[2]);
  CHECK(g2[0] != g2[1]);
}

TEST_CASE("chi") {
  const auto a1 = RootSystem::from_type("A1");
  const auto a2 = RootSystem::from_type("A2");
  const auto q1 = ThicknessVector::uniform(a1, 2);
  const auto q2 = ThicknessVector::uniform(a2, 2);
  CHECK(chi(Coweight::zero(2), a2, q2) == 1);
  CHECK(chi(Coweight({3}), a1, q1) == 8);
  // Pairings of lambda_1 with alpha_1, alpha_2, alpha_1 + alpha_2 are 1, 0, 1.
  CHECK(chi(Coweight({1, 0}), a2, q2) == 4);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<long> coord(-4, 4);
  for (const char* label : {"A2", "B2", "G2"}) {
    const auto rs = RootSystem::from_type(label);
    const auto q = ThicknessVector::uniform(rs, 3);
    for (int trial = 0; trial < 50; ++trial) {
      const Coweight l({coord(rng), coord(rng)}), m({coord(rng), coord(rng)});
      CHECK(chi(l + m, rs, q) == chi(l, rs, q) * chi(m, rs, q));
    }
  }
}

TEST_CASE("n_lambda") {
  const auto a1 = RootSystem::from_type("A1");
  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g1(a1), g2(a2);
  CHECK(n_lambda(Coweight::zero(2), g2, ThicknessVector::uniform(a2, 2)) == 1);
  for (long q : {2L, 3L, 5L})
    for (long k = 1; k <= 8; ++k) {
      // Sphere of radius k in the (q+1)-regular tree.
      long sphere = q + 1;
      for (long j = 1; j < k; ++j) sphere *= q;
      CHECK(n_lambda(Coweight({k}), g1, ThicknessVector::uniform(a1, q)) == sphere);
    }
  CHECK(n_lambda(Coweight({2}), g1, ThicknessVector::uniform(a1, 2)) == 6);
  CHECK(n_lambda(Coweight({1, 0}), g2, ThicknessVector::uniform(a2, 2)) == 7);
  CHECK(n_lambda(Coweight({1, 1}), g2, ThicknessVector::uniform(a2, 2)) == 42);
  CHECK(n_lambda(Coweight({1, 0}), g2, ThicknessVector::uniform(a2, 3)) == 13);
  CHECK_THROWS_AS(n_lambda(Coweight({1, -1}), g2, ThicknessVector::uniform(a2, 2)), NotDominant);

  for (const char* label : {"A2", "B2", "C2", "G2", "A3"}) {
    const auto rs = RootSystem::from_type(label);
    const WeylGroup g(rs);
    const auto q = ThicknessVector::uniform(rs, 2);
    std::vector<long> c(static_cast<std::size_t>(rs.rank()), 0);
    for (int trial = 0; trial < 27; ++trial) {
      int t = trial;
      for (auto& x : c) {
        x = t % 3;
        t /= 3;
      }
      const Coweight lambda(c);
      const Rational n = n_lambda(lambda, g, q);
      CHECK(n.get_den() == 1);
      CHECK(n == n_lambda(g.iota(lambda), g, q));
    }
  }
}

TEST_CASE("stabilizer and parabolic subgroups") {
  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g(a2);
  CHECK(stabilizer_subgroup(Coweight::zero(2), g).size() == 6);
  const auto st = stabilizer_subgroup(Coweight({1, 0}), g);
  REQUIRE(st.size() == 2);
  CHECK(st[0].length() == 0);
  CHECK(st[1] == g.generator(2));
  CHECK(g.act(g.generator(2), Coweight({1, 0})) == Coweight({1, 0}));
  CHECK(stabilizer_subgroup(Coweight({1, 1}), g).size() == 1);

  CHECK(g.parabolic({}).size() == 1);
  CHECK(g.longest_element({}) == g.identity());
  const auto p1 = g.parabolic({1});
  CHECK(p1.size() == 2);
  CHECK(g.longest_element({1}) == g.generator(1));
  CHECK(g.parabolic({1, 2}).size() == 6);
  CHECK(g.longest_element({1, 2}).length() == 3);
}

TEST_CASE("iota and coweight types") {
  const auto a2 = RootSystem::from_type("A2");
  const WeylGroup g(a2);
  CHECK(g.iota(Coweight({1, 0})) == Coweight({0, 1}));
  CHECK(g.iota(Coweight({2, 5})) == Coweight({5, 2}));
  const auto b2 = RootSystem::from_type("B2");
  const WeylGroup gb(b2);
  CHECK(gb.iota(Coweight({1, 3})) == Coweight({1, 3}));

  const CoweightTypes types(a2);
  CHECK(types.count() == 3);
  for (long m1 = -3; m1 <= 3; ++m1)
    for (long m2 = -3; m2 <= 3; ++m2) {
      const long expected = (((m1 + 2 * m2) % 3) + 3) % 3;
      CHECK(types.type_of(Coweight({m1, m2})) == expected);
    }
  CHECK(types.in_coroot_lattice(Coweight({2, -1})));
  CHECK(CoweightTypes(RootSystem::from_type("G2")).count() == 1);
}

TEST_CASE("dominance order") {
  const auto a2 = RootSystem::from_type("A2");
  const auto below = dominated_dominant(Coweight({2, 1}), a2);
  CHECK(below == std::vector<Coweight>{Coweight({0, 2}), Coweight({1, 0}), Coweight({2, 1})});
  CHECK(dominated_dominant(Coweight({1, 1}), a2) == std::vector<Coweight>{Coweight({0, 0}), Coweight({1, 1})});
}

TEST_CASE("cartan spec document") {
  const auto spec = parse_cartan_spec(R"({"type":"A2","rank":2,"q":[3,3,3]})");
  CHECK(spec.type == "A2");
  CHECK(spec.q.size() == 3);
  CHECK_THROWS(parse_cartan_spec(R"({"type":"A2","rank":2,"q":[3,3]})"));
}
