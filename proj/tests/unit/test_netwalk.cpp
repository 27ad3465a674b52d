#include <cmath>

#include "chamberwalk/netwalk.hpp"
#include "chamberwalk/stats.hpp"
#include "doctest.h"

using namespace chamberwalk;
using namespace chamberwalk::netwalk;

namespace {

FiniteNetwork path(std::size_t n) {
  FiniteNetwork net(n);
  for (std::size_t i = 0; i + 1 < n; ++i) net.add_edge(i, i + 1, 1);
  return net;
}

}  // namespace

TEST_CASE("kernel from network") {
  FiniteNetwork edge(2);
  edge.add_edge(0, 1, 1);
  const auto k1 = kernel_from_network(edge);
  CHECK(k1.prob(0, 1) == 1);
  CHECK(k1.prob(1, 0) == 1);

  const auto k2 = kernel_from_network(path(3));
  CHECK(k2.prob(1, 0) == Rational(1, 2));
  CHECK(k2.prob(1, 2) == Rational(1, 2));
  CHECK(k2.reversible());
  CHECK(k2.reversibility_defect(k2.reversing_measure()) == 0);

  FiniteNetwork star(4);
  const std::vector<Rational> w{Rational(1), Rational(5, 2), Rational(3)};
  for (std::size_t i = 0; i < 3; ++i) star.add_edge(0, i + 1, w[i]);
  const auto k3 = kernel_from_network(star);
  for (std::size_t i = 0; i < 3; ++i) CHECK(k3.prob(0, i + 1) == w[i] / Rational(13, 2));

  FiniteNetwork isolated(2);
  CHECK_THROWS_AS(kernel_from_network(isolated), InvalidNetwork);
  CHECK_THROWS_AS(MarkovKernel::from_dense({{Rational(1, 2), Rational(1, 3)}, {0, 1}}), InvalidNetwork);
}

TEST_CASE("network JSON round trip") {
  const auto doc = nlohmann::json::parse(R"({"nodes":["a","b","c"],"edges":[["a","b",1],["b","c","3/2"],["c","c",0.5]]})");
  const auto net = FiniteNetwork::from_json(doc);
  CHECK(net.conductance(1, 2) == Rational(3, 2));
  CHECK(net.total_conductance(2) == 2);
  const auto again = FiniteNetwork::from_json(net.to_json());
  for (std::size_t x = 0; x < 3; ++x)
    for (std::size_t y = 0; y < 3; ++y) CHECK(again.conductance(x, y) == net.conductance(x, y));
  CHECK_THROWS_AS(FiniteNetwork::from_json(nlohmann::json::parse(R"({"nodes":["a"],"edges":[["a","z",1]]})")),
                  InvalidNetwork);
}

TEST_CASE("simulation") {
  const auto k = kernel_from_network(path(3));
  RngStream rng(1, 0);
  CHECK(simulate(k, 1, 0, rng).nodes == std::vector<std::size_t>{1});

  const auto cycle = MarkovKernel::from_dense({{0, 1}, {1, 0}});
  RngStream r2(5, 3);
  CHECK(simulate(cycle, 0, 4, r2).nodes == std::vector<std::size_t>{0, 1, 0, 1, 0});

  RngStream a(42, 7), b(42, 7);
  const auto t1 = simulate(k, 0, 200, a);
  const auto t2 = simulate(k, 0, 200, b);
  CHECK(t1.nodes == t2.nodes);
  for (std::size_t i = 0; i + 1 < t1.nodes.size(); ++i) CHECK(k.prob(t1.nodes[i], t1.nodes[i + 1]) > 0);

  // 10^5 one-step trajectories from the middle of the path: split (1/2, 1/2) within 3 sigma.
  const std::uint64_t n = 100000;
  auto parts = run_chunks<std::uint64_t>(n, 11, 2, [&](RngStream& r, std::uint64_t, std::uint64_t count) {
    std::uint64_t left = 0;
    for (std::uint64_t i = 0; i < count; ++i) left += k.sample_next(1, r) == 0;
    return left;
  });
  std::uint64_t left = 0;
  for (auto p : parts) left += p;
  const double sigma = std::sqrt(0.25 / static_cast<double>(n));
  CHECK(std::fabs(static_cast<double>(left) / static_cast<double>(n) - 0.5) <= 3 * sigma);
}

TEST_CASE("chunked runs do not depend on the worker count") {
  auto run = [](unsigned workers) {
    return run_chunks<std::uint64_t>(10000, 99, workers, [](RngStream& r, std::uint64_t, std::uint64_t count) {
      std::uint64_t acc = 0;
      for (std::uint64_t i = 0; i < count; ++i) acc ^= r.next() + i;
      return acc;
    });
  };
  CHECK(run(1) == run(4));
  CHECK(run(1) == run(8));
}

TEST_CASE("lazy simulation over a finite network") {
  const auto net = path(5);
  FiniteAsLazy lazy(net);
  NetworkKernel k(lazy);
  RngStream rng(3, 0);
  const auto t = simulate(k, "2", 50, rng);
  CHECK(t.nodes.size() == 51);
  for (std::size_t i = 0; i + 1 < t.nodes.size(); ++i)
    CHECK(std::abs(std::stoi(t.nodes[i]) - std::stoi(t.nodes[i + 1])) == 1);
  CHECK(graph_distance(lazy, "0", "4", 10) == 4u);
  CHECK(!graph_distance(lazy, "0", "4", 3).has_value());
}

TEST_CASE("harmonic defect") {
  const auto k = kernel_from_network(path(5));
  CHECK(harmonic_defect(k, RationalVector(5, Rational(7))) == 0);
  const auto k2 = MarkovKernel::from_dense({{0, 1}, {1, 0}});
  CHECK(harmonic_defect(k2, RationalVector{1, 0}) == 1);

  // Dirichlet problem on the interior of the path with boundary values 0 and 1.
  const auto h = absorption(k, {0, 4});
  std::vector<double> f(5);
  for (std::size_t x = 0; x < 5; ++x) f[x] = h.approx[x][1];
  for (std::size_t x = 1; x < 4; ++x) {
    double pf = 0;
    for (const auto& [y, p] : k.row(x)) pf += p.get_d() * f[y];
    CHECK(std::fabs(pf - f[x]) <= 1e-10);
  }
}

TEST_CASE("hitting distributions") {
  const auto k3 = kernel_from_network(path(3));
  const auto point = hitting_distribution(k3, {0, 2}, 2);
  CHECK(point.exact == RationalVector{0, 1});
  const auto half = hitting_distribution(k3, {0, 2}, 1);
  CHECK(half.exact == RationalVector{Rational(1, 2), Rational(1, 2)});

  const auto k5 = kernel_from_network(path(5));
  const auto ruin = hitting_distribution(k5, {0, 4}, 1);
  CHECK(ruin.exact == RationalVector{Rational(3, 4), Rational(1, 4)});
  CHECK(!ruin.substochastic);

  // Float path on a long path agrees with gambler's ruin.
  const auto k300 = kernel_from_network(path(300));
  const auto far = absorption(k300, {0, 299});
  CHECK(!far.exact_path);
  CHECK(far.approx[100][1] == doctest::Approx(100.0 / 299.0).epsilon(1e-12));
  CHECK(far.residual < 1e-10);

  // State 2 is a trap: absorbing set unreachable from it.
  const auto trap = MarkovKernel::from_dense({{1, 0, 0}, {Rational(1, 2), 0, Rational(1, 2)}, {0, 0, 1}});
  const auto sub = absorption(trap, {0});
  CHECK(sub.unreachable == std::vector<std::size_t>{2});
  CHECK(sub.substochastic);
  CHECK(sub.exact[1][0] == Rational(1, 2));
}

TEST_CASE("irreducibility and stationarity") {
  CHECK(is_irreducible(kernel_from_network(path(2))));
  const auto loops = MarkovKernel::from_dense({{1, 0}, {0, 1}});
  CHECK(!is_irreducible(loops));
  const auto tri = MarkovKernel::from_dense({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}});
  CHECK(is_irreducible(tri));
  const auto chain = MarkovKernel::from_dense({{0, 1, 0}, {0, 0, 1}, {0, 0, 1}});
  CHECK(!is_irreducible(chain));

  const auto k = kernel_from_network(path(4));
  CHECK(check_stationary(k, k.reversing_measure()) == 0);
  CHECK(check_stationary(tri, RationalVector(3, Rational(1, 3))) == 0);
  CHECK(check_stationary(k, RationalVector(4, Rational(1))) > 0);
}

TEST_CASE("occupation frequencies converge to the stationary measure") {
  FiniteNetwork net(5);
  net.add_edge(0, 1, 1);
  net.add_edge(1, 2, 2);
  net.add_edge(2, 3, 1);
  net.add_edge(3, 4, 3);
  net.add_edge(4, 0, 1);
  net.add_edge(2, 2, 1);
  const auto k = kernel_from_network(net);
  CHECK(k.symmetric() == false);
  RngStream rng(2024, 0);
  const auto t = simulate(k, 0, 1000000, rng);
  // Thin the chain so that counts are close to independent.
  std::vector<std::uint64_t> counts(5, 0);
  for (std::size_t i = 0; i < t.nodes.size(); i += 20) ++counts[t.nodes[i]];
  Rational total = 0;
  for (const auto& m : k.reversing_measure()) total += m;
  std::vector<double> probs;
  for (const auto& m : k.reversing_measure()) probs.push_back(Rational(m / total).get_d());
  CHECK(stats::goodness_of_fit(counts, probs).passes());
  CHECK(occupation_csv(t).rfind("node,count,frequency\n", 0) == 0);
}
