#include <cmath>
#include <random>

#include "chamberwalk/discretize.hpp"
#include "doctest.h"

using namespace chamberwalk;
using namespace chamberwalk::discretize;
using netwalk::FiniteNetwork;
using netwalk::MarkovKernel;

namespace {

FiniteNetwork path(std::size_t n) {
  FiniteNetwork net(n);
  for (std::size_t i = 0; i + 1 < n; ++i) net.add_edge(i, i + 1, 1);
  return net;
}

// Connected network with small integer conductances: a random spanning tree plus extra edges.
FiniteNetwork random_network(std::mt19937_64& gen, std::size_t n) {
  FiniteNetwork net(n);
  std::uniform_int_distribution<int> weight(1, 4);
  for (std::size_t x = 1; x < n; ++x) net.add_edge(x, gen() % x, weight(gen));
  const std::size_t extra = gen() % (n + 1);
  for (std::size_t e = 0; e < extra; ++e) net.add_edge(gen() % n, gen() % n, weight(gen));
  return net;
}

// Symmetric (doubly stochastic) kernel: P = W/M + diag(1 - rowsum/M).
MarkovKernel random_symmetric_kernel(std::mt19937_64& gen, std::size_t n) {
  const auto net = random_network(gen, n);
  Rational top = 0;
  for (std::size_t x = 0; x < n; ++x) top = std::max<Rational>(top, net.total_conductance(x));
  RationalMatrix p(n, RationalVector(n, 0));
  for (std::size_t x = 0; x < n; ++x) {
    for (const auto& [y, a] : net.neighbors(x)) p[x][y] += a / top;
    p[x][x] += 1 - net.total_conductance(x) / top;
  }
  return MarkovKernel::from_dense(p);
}

std::set<std::size_t> random_subset(std::mt19937_64& gen, std::size_t n, std::size_t min_size = 1) {
  std::set<std::size_t> y;
  while (y.size() < min_size || gen() % 3 != 0) {
    y.insert(gen() % n);
    if (y.size() == n) break;
  }
  return y;
}

}  // namespace

TEST_CASE("stopping times") {
  const std::vector<int> traj{1, 0, 1, 2};
  const auto st = stopping_times<int>(traj, [](const int& x) { return x == 0 || x == 2; });
  CHECK(st.tau == std::vector<std::uint64_t>{1, 3});
  CHECK(st.states == std::vector<int>{0, 2});
  const auto all = stopping_times<int>(traj, [](const int&) { return true; });
  CHECK(all.tau == std::vector<std::uint64_t>{0, 1, 2, 3});
  const auto few = stopping_times<int>(traj, [](const int& x) { return x == 2; }, 3);
  CHECK(few.truncated);

  // SRW on Z watched on 2Z from an even start: tau_0 = 0 and every gap is 2.
  const action::IntegerLine z;
  const netwalk::NetworkKernel walk(z);
  bool parity_ok = true;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    RngStream rng(77, s);
    const auto t = netwalk::simulate(walk, "4", 20, rng);
    const auto st2 =
        stopping_times<std::string>(t.nodes, [](const std::string& x) { return std::stol(x) % 2 == 0; });
    if (st2.tau.front() != 0) parity_ok = false;
    for (std::size_t i = 1; i < st2.tau.size(); ++i)
      if (st2.tau[i] - st2.tau[i - 1] != 2) parity_ok = false;
  }
  CHECK(parity_ok);
}

TEST_CASE("induced kernels") {
  const auto k4 = netwalk::kernel_from_network(path(4));
  const auto whole = induced_kernel_exact(k4, {0, 1, 2, 3});
  CHECK(whole.kernel.dense() == k4.dense());

  const auto k3 = netwalk::kernel_from_network(path(3));
  const auto ends = induced_kernel_exact(k3, {0, 2});
  CHECK(ends.kernel.prob(0, 0) == Rational(1, 2));
  CHECK(ends.kernel.prob(0, 1) == Rational(1, 2));

  FiniteNetwork c4(4);
  for (std::size_t i = 0; i < 4; ++i) c4.add_edge(i, (i + 1) % 4, 1);
  const auto opposite = induced_kernel_exact(netwalk::kernel_from_network(c4), {0, 2});
  CHECK(opposite.kernel.prob(0, 0) == Rational(1, 2));
  CHECK(opposite.kernel.prob(0, 1) == Rational(1, 2));
  CHECK(opposite.kernel.symmetric());

  CHECK_THROWS(induced_kernel_exact(k3, {}));
  const auto trap = MarkovKernel::from_dense({{0, 1, 0}, {0, 0, 1}, {0, 0, 1}});
  CHECK_THROWS(induced_kernel_exact(trap, {0}));

  // Monte Carlo rows agree with the exact solve within 4 sigma.
  FiniteNetwork net(6);
  net.add_edge(0, 1, 1);
  net.add_edge(1, 2, 2);
  net.add_edge(2, 3, 1);
  net.add_edge(3, 4, 3);
  net.add_edge(4, 5, 1);
  net.add_edge(5, 0, 2);
  net.add_edge(1, 4, 1);
  const auto k = netwalk::kernel_from_network(net);
  const std::set<std::size_t> y{0, 3, 5};
  const auto exact = induced_kernel_exact(k, y);
  const auto est = induced_row_mc(k, y, 0, 100000, 5, 2);
  CHECK(est.unresolved == 0);
  for (std::size_t j = 0; j < 3; ++j) {
    const double p = exact.kernel.prob(0, j).get_d();
    const double freq = static_cast<double>(est.counts[j]) / 100000.0;
    CHECK(std::fabs(freq - p) <= 4 * std::sqrt(p * (1 - p) / 100000.0) + 1e-12);
  }
}

TEST_CASE("harmonic transfer") {
  const auto k5 = netwalk::kernel_from_network(path(5));
  const auto c = harmonic_transfer_check(k5, {0, 4}, {Rational(3), Rational(3)});
  CHECK(c.defect_everywhere == 0);
  for (const auto& v : c.extension) CHECK(v == 3);

  const auto d = harmonic_transfer_check(k5, {0, 4}, {Rational(0), Rational(1)});
  for (std::size_t x = 0; x < 5; ++x) CHECK(d.extension[x] == rational(static_cast<long>(x), 4));
  CHECK(d.defect_off_y == 0);
  CHECK(d.defect_on_y == 0);
  CHECK(d.transfer_defect == 0);
}

TEST_CASE("induced-walk properties on random reversible chains") {
  std::mt19937_64 gen(20240607);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 3 + gen() % 18;
    CAPTURE(trial);
    CAPTURE(n);
    const bool symmetric_case = trial % 2 == 0;
    const auto net = random_network(gen, n);
    const auto k = symmetric_case ? random_symmetric_kernel(gen, n) : netwalk::kernel_from_network(net);
    const auto y = random_subset(gen, n, 2);
    const auto q = induced_kernel_exact(k, y);
    for (std::size_t i = 0; i < q.subset.size(); ++i) {
      Rational total = 0;
      for (const auto& [j, p] : q.kernel.row(i)) total += p;
      CHECK(total == 1);
    }
    if (symmetric_case) CHECK(q.kernel.symmetric());
    else {
      // Reversibility with respect to m restricted to Y.
      RationalVector m;
      for (auto x : q.subset) m.push_back(k.reversing_measure()[x]);
      CHECK(q.kernel.reversibility_defect(m) == 0);
    }

    RationalVector f;
    for (std::size_t i = 0; i < y.size(); ++i) f.push_back(rational(static_cast<long>(gen() % 19) - 9, static_cast<long>(1 + gen() % 5)));
    const auto t = harmonic_transfer_check(k, y, f);
    CHECK(t.defect_on_y == 0);
    CHECK(t.defect_off_y == 0);
    CHECK(t.transfer_defect == 0);

    // Tower property.
    std::set<std::size_t> inner_positions;
    std::set<std::size_t> inner;
    for (std::size_t i = 0; i < q.subset.size(); ++i)
      if (i == 0 || gen() % 2 == 0) {
        inner_positions.insert(i);
        inner.insert(q.subset[i]);
      }
    CHECK(induced_kernel_exact(q.kernel, inner_positions).kernel.dense() ==
          induced_kernel_exact(k, inner).kernel.dense());

    // Hitting distributions on Z inside Y agree between (X, P) and (Y, Q).
    for (std::size_t i = 0; i < q.subset.size(); ++i) {
      const auto from_x = netwalk::hitting_distribution(k, inner, q.subset[i]);
      const auto from_y = netwalk::hitting_distribution(q.kernel, inner_positions, i);
      CHECK(from_x.exact == from_y.exact);
    }
  }
}

TEST_CASE("discretization of transitive actions") {
  const auto tree = action::CayleyTree::free2();
  const action::LeftMultiplication lm(tree.alphabet());
  const auto mu = discretize_lattice(tree, lm, "e");
  CHECK(mu.provenance == "transitive-fast-path");
  CHECK(mu.entries.size() == 4);
  for (const auto& g : {"a", "A", "b", "B"}) CHECK(mu.find(g)->exact == Rational(1, 4));
  CHECK(mu.symmetric);
  CHECK(mu.admissibility == action::Generation::generates);
  CHECK(moment(mu, tree, lm, "first").exact == 1);

  DiscretizeOptions general;
  general.allow_fast_path = false;
  const auto slow = discretize_lattice(tree, lm, "e", general);
  CHECK(slow.provenance == "exact-solve");
  REQUIRE(slow.entries.size() == mu.entries.size());
  for (std::size_t i = 0; i < mu.entries.size(); ++i) {
    CHECK(slow.entries[i].element == mu.entries[i].element);
    CHECK(slow.entries[i].exact == mu.entries[i].exact);
  }

  const action::IntegerLine z;
  const action::TranslationAction t1(1);
  const auto zmu = discretize_lattice(z, t1, "0");
  CHECK(zmu.find("1")->exact == Rational(1, 2));
  CHECK(zmu.find("-1")->exact == Rational(1, 2));
}

TEST_CASE("discretization of 2Z acting on Z") {
  const action::IntegerLine z;
  const action::TranslationAction t2(2);
  const auto mu = discretize_lattice(z, t2, "0");
  CHECK(mu.provenance == "exact-solve");
  CHECK(mu.find("0")->exact == Rational(1, 2));
  CHECK(mu.find("2")->exact == Rational(1, 4));
  CHECK(mu.find("-2")->exact == Rational(1, 4));
  CHECK(mu.symmetric);
  CHECK(mu.admissibility == action::Generation::generates);
  CHECK(moment(mu, z, t2, "first").exact == 1);
  CHECK(moment(mu, z, t2, "exponential", 0.0).value == doctest::Approx(1.0));
  CHECK(moment(mu, z, t2, "exponential", 0.5).value == doctest::Approx(0.5 + 0.5 * std::exp(1.0)));

  // Oracle: absorption solve on {-2, ..., 2} with the orbit points absorbing.
  FiniteNetwork segment(std::vector<std::string>{"-2", "-1", "0", "1", "2"});
  for (std::size_t i = 0; i + 1 < 5; ++i) segment.add_edge(i, i + 1, 1);
  auto rows = netwalk::kernel_from_network(segment).dense();
  const auto k = MarkovKernel::from_dense(rows);
  const auto from_minus = netwalk::hitting_distribution(k, {0, 2, 4}, 1);
  const auto from_plus = netwalk::hitting_distribution(k, {0, 2, 4}, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    const Rational oracle = (from_minus.exact[j] + from_plus.exact[j]) / 2;
    const std::string word = j == 0 ? "-2" : j == 1 ? "0" : "2";
    CHECK(mu.find(word)->exact == oracle);
  }

  DiscretizeOptions mc;
  mc.region_limit = 0;
  mc.mc_samples = 100000;
  mc.seed = 4;
  mc.workers = 2;
  const auto est = discretize_lattice(z, t2, "0", mc);
  CHECK(est.provenance == "monte-carlo");
  CHECK(!est.symmetry_checked);
  const double p0 = est.find("0")->prob;
  CHECK(std::fabs(p0 - 0.5) <= 4 * std::sqrt(0.25 / 100000.0));
  CHECK(est.to_json()["samples"] == 100000);
}

TEST_CASE("discretization with nontrivial stabilizers") {
  const action::IntegerLine z;
  const action::DihedralAction d2(2);
  const auto mu = discretize_lattice(z, d2, "0");
  CHECK(mu.stabilizer_order == 2);
  CHECK(mu.find("0")->exact == Rational(1, 4));
  CHECK(mu.find("refl:0")->exact == Rational(1, 4));
  CHECK(mu.find("2")->exact == Rational(1, 8));
  CHECK(mu.find("refl:-2")->exact == Rational(1, 8));
  CHECK(mu.total_mass() == doctest::Approx(1.0));
  CHECK(mu.symmetric);
  CHECK(mu.admissibility == action::Generation::generates);
  const auto doc = mu.to_json();
  CHECK(doc["measure"].size() == 6);
}
