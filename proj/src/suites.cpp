#include "chamberwalk/suites.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "chamberwalk/action.hpp"
#include "chamberwalk/boundary.hpp"
#include "chamberwalk/buildings.hpp"
#include "chamberwalk/discretize.hpp"
#include "chamberwalk/netwalk.hpp"
#include "chamberwalk/rng.hpp"

namespace chamberwalk::suites {

using nlohmann::json;
using netwalk::FiniteNetwork;
using netwalk::MarkovKernel;
using coxeter::Coweight;
using coxeter::IntVector;

json Check::to_json() const {
  json doc{{"check", name}, {"kind", kind}, {"inputs", inputs}};
  if (defect) doc["defect"] = defect->get_str();
  if (p_value) doc["p_value"] = *p_value;
  doc["verdict"] = verdict;
  if (!detail.is_null()) doc["detail"] = detail;
  return doc;
}

bool SuiteReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.verdict; });
}

json SuiteReport::to_json() const {
  auto list = json::array();
  for (const auto& c : checks) list.push_back(c.to_json());
  return {{"suite", suite}, {"parameters", parameters}, {"checks", list}, {"verdict", passed()}};
}

std::string SuiteReport::to_csv(bool header) const {
  std::ostringstream os;
  os.precision(17);
  if (header) os << "suite,check,kind,verdict,defect,p_value\n";
  for (const auto& c : checks) {
    os << suite << ',' << '"' << c.name << '"' << ',' << '"' << c.kind << '"' << ',' << (c.verdict ? "true" : "false")
       << ',' << (c.defect ? c.defect->get_str() : "") << ',';
    if (c.p_value) os << *c.p_value;
    os << '\n';
  }
  return os.str();
}

namespace {

/// Reads suite parameters with defaults and rejects anything left over.
class Params {
 public:
  Params(const json& doc, json& record) : doc_(doc), record_(record) {
    if (!doc_.is_object()) throw SuiteError("suite parameters must be an object");
  }

  long integer(const std::string& key, long fallback, long lo, long hi) {
    long v = fallback;
    if (doc_.contains(key)) {
      const auto& j = doc_.at(key);
      if (!j.is_number_integer()) throw SuiteError("parameter '" + key + "' must be an integer");
      v = j.get<long>();
    }
    if (v < lo || v > hi)
      throw SuiteError("parameter '" + key + "' out of range [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    used_.insert(key);
    record_[key] = v;
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!used_.count(key)) throw SuiteError("unknown parameter '" + key + "'");
  }

 private:
  const json& doc_;
  json& record_;
  std::set<std::string> used_;
};

Coweight cw(long a, long b) { return Coweight(IntVector{a, b}); }

Check exact_check(std::string name, json inputs, const Rational& defect) {
  Check c;
  c.name = std::move(name);
  c.inputs = std::move(inputs);
  c.defect = defect;
  c.verdict = defect == 0;
  return c;
}

Check from_report(const boundary::CheckReport& r) {
  Check c;
  c.name = r.check;
  c.inputs = r.inputs;
  c.defect = r.defect;
  c.verdict = r.verdict;
  c.detail = {{"identities", r.checked}};
  return c;
}

Check statistical(std::string name, json inputs, const stats::ChiSquare& chi, std::string kind = "statistical") {
  Check c;
  c.name = std::move(name);
  c.kind = std::move(kind);
  c.inputs = std::move(inputs);
  c.p_value = chi.p_value;
  c.verdict = chi.passes();
  c.detail = {{"statistic", chi.statistic}, {"degrees_of_freedom", chi.degrees_of_freedom}};
  return c;
}

Rational max_abs(const Rational& a, const Rational& b) { return std::max<Rational>(a, abs(b)); }

// ---------------------------------------------------------------------------

SuiteReport tree_nlambda(Params& params) {
  SuiteReport r;
  const long q = params.integer("q", 2, 1, 6);
  const long max_k = params.integer("max_k", 8, 0, 12);
  params.finish();
  buildings::TreeBuilding t(static_cast<int>(q));
  for (long k = 1; k <= max_k; ++k) {
    const auto sphere = t.v_lambda("e", static_cast<unsigned>(k));
    const Rational formula = t.type_data().n_lambda(Coweight(IntVector{k}));
    const Rational count(static_cast<long>(sphere.size()));
    auto c = exact_check("N_lambda = |V_lambda(o)|", {{"q", q}, {"k", k}}, formula - count);
    c.defect = abs(*c.defect);
    c.detail = {{"formula", formula.get_str()}, {"count", sphere.size()}};
    r.checks.push_back(std::move(c));
  }
  return r;
}

SuiteReport a2_nlambda(Params& params) {
  SuiteReport r;
  const long p = params.integer("p", 2, 2, 3);
  const long radius = params.integer("radius", 3, 1, 3);
  const long max_coord = params.integer("max_coord", std::min<long>(2, radius), 0, radius);
  params.finish();
  buildings::BallOptions opts;
  opts.store_adjacency = false;
  const auto ball = buildings::A2Ball::build(static_cast<int>(p), static_cast<int>(radius), opts);
  const Rational predicted = buildings::A2Ball::predicted_size(static_cast<int>(p), static_cast<int>(radius));
  auto size = exact_check("ball size equals the sum of N_lambda over the box", {{"p", p}, {"radius", radius}},
                          abs(predicted - Rational(static_cast<long>(ball.size()))));
  size.detail = {{"vertices", ball.size()}};
  r.checks.push_back(std::move(size));
  std::map<std::pair<long, long>, std::size_t> counts;
  for (long a = 0; a <= max_coord; ++a)
    for (long b = 0; b <= max_coord; ++b) {
      const auto sphere = ball.v_lambda(ball.base(), cw(a, b));
      counts[{a, b}] = sphere.size();
      const Rational formula = ball.type_data().n_lambda(cw(a, b));
      auto c = exact_check("N_lambda = |V_lambda(o)|", {{"p", p}, {"lambda", {a, b}}},
                           abs(formula - Rational(static_cast<long>(sphere.size()))));
      c.detail = {{"formula", formula.get_str()}, {"count", sphere.size()}};
      r.checks.push_back(std::move(c));
    }
  if (p == 2 && max_coord >= 1) {
    r.checks.push_back(exact_check("N_{lambda_1} = 7", {{"p", 2}},
                                   abs(Rational(7) - Rational(static_cast<long>(counts.at({1, 0}))))));
    r.checks.push_back(exact_check("N_{lambda_1 + lambda_2} = 42", {{"p", 2}},
                                   abs(Rational(42) - Rational(static_cast<long>(counts.at({1, 1}))))));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Random finite reversible chains.

FiniteNetwork random_network(RngStream& rng, std::size_t n) {
  FiniteNetwork net(n);
  for (std::size_t x = 1; x < n; ++x) net.add_edge(x, rng.below(x), static_cast<long>(1 + rng.below(4)));
  const std::size_t extra = rng.below(n + 1);
  for (std::size_t e = 0; e < extra; ++e) net.add_edge(rng.below(n), rng.below(n), static_cast<long>(1 + rng.below(4)));
  return net;
}

MarkovKernel random_symmetric_kernel(RngStream& rng, std::size_t n) {
  const auto net = random_network(rng, n);
  Rational top = 0;
  for (std::size_t x = 0; x < n; ++x) top = std::max<Rational>(top, net.total_conductance(x));
  RationalMatrix p(n, RationalVector(n, 0));
  for (std::size_t x = 0; x < n; ++x) {
    for (const auto& [y, a] : net.neighbors(x)) p[x][y] += a / top;
    p[x][x] += 1 - net.total_conductance(x) / top;
  }
  return MarkovKernel::from_dense(p);
}

std::set<std::size_t> random_subset(RngStream& rng, std::size_t n, std::size_t min_size) {
  std::set<std::size_t> y;
  while (y.size() < min_size || rng.below(3) != 0) {
    y.insert(rng.below(n));
    if (y.size() == n) break;
  }
  return y;
}

SuiteReport induced_random(Params& params, std::uint64_t seed) {
  SuiteReport r;
  const long chains = params.integer("chains", 50, 1, 10000);
  const long max_n = params.integer("max_n", 30, 3, 60);
  params.finish();
  RngStream rng(seed, 0);
  Rational rows = 0, symmetry = 0, transfer = 0, tower = 0, hitting = 0;
  long symmetric_chains = 0, largest = 0;
  for (long trial = 0; trial < chains; ++trial) {
    const std::size_t n = 3 + rng.below(static_cast<std::uint64_t>(max_n - 2));
    largest = std::max(largest, static_cast<long>(n));
    const bool symmetric_case = trial % 2 == 0;
    const auto k = symmetric_case ? random_symmetric_kernel(rng, n) : netwalk::kernel_from_network(random_network(rng, n));
    const auto y = random_subset(rng, n, 2);
    const auto q = discretize::induced_kernel_exact(k, y);
    for (std::size_t i = 0; i < q.subset.size(); ++i) {
      Rational total = 0;
      for (const auto& [j, p] : q.kernel.row(i)) total += p;
      rows = max_abs(rows, total - 1);
    }
    if (symmetric_case) {
      ++symmetric_chains;
      for (std::size_t i = 0; i < q.subset.size(); ++i)
        for (std::size_t j = 0; j < q.subset.size(); ++j)
          symmetry = max_abs(symmetry, q.kernel.prob(i, j) - q.kernel.prob(j, i));
    }

    RationalVector f;
    for (std::size_t i = 0; i < y.size(); ++i)
      f.push_back(rational(static_cast<long>(rng.below(19)) - 9, static_cast<long>(1 + rng.below(5))));
    const auto t = discretize::harmonic_transfer_check(k, y, f);
    transfer = max_abs(transfer, t.defect_on_y);
    transfer = max_abs(transfer, t.defect_off_y);
    transfer = max_abs(transfer, t.transfer_defect);

    std::set<std::size_t> inner_positions, inner;
    for (std::size_t i = 0; i < q.subset.size(); ++i)
      if (i == 0 || rng.below(2) == 0) {
        inner_positions.insert(i);
        inner.insert(q.subset[i]);
      }
    const auto nested = discretize::induced_kernel_exact(q.kernel, inner_positions).kernel.dense();
    const auto direct = discretize::induced_kernel_exact(k, inner).kernel.dense();
    for (std::size_t i = 0; i < nested.size(); ++i)
      for (std::size_t j = 0; j < nested.size(); ++j) tower = max_abs(tower, nested[i][j] - direct[i][j]);

    for (std::size_t i = 0; i < q.subset.size(); ++i) {
      const auto from_x = netwalk::hitting_distribution(k, inner, q.subset[i]);
      const auto from_y = netwalk::hitting_distribution(q.kernel, inner_positions, i);
      for (std::size_t j = 0; j < from_x.exact.size(); ++j) hitting = max_abs(hitting, from_x.exact[j] - from_y.exact[j]);
    }
  }
  const json inputs{{"chains", chains}, {"largest_n", largest}};
  r.checks.push_back(exact_check("rows of Q sum to one", inputs, rows));
  r.checks.push_back(exact_check("Q symmetric when P is symmetric", {{"symmetric_chains", symmetric_chains}}, symmetry));
  r.checks.push_back(exact_check("harmonic transfer defects", inputs, transfer));
  r.checks.push_back(exact_check("tower property", inputs, tower));
  r.checks.push_back(exact_check("hitting distributions agree on Z inside Y", inputs, hitting));
  return r;
}

// ---------------------------------------------------------------------------
// Quotients and return times.

FiniteNetwork cycle(std::size_t n) {
  FiniteNetwork net(n);
  for (std::size_t i = 0; i < n; ++i) net.add_edge(i, (i + 1) % n, 1);
  return net;
}

std::vector<std::size_t> rotation(std::size_t n, std::size_t by) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (i + by) % n;
  return p;
}

std::vector<std::size_t> reflection(std::size_t n) {
  std::vector<std::size_t> p(n);
  for (std::size_t i = 0; i < n; ++i) p[i] = (n - i) % n;
  return p;
}

void quotient_identities(SuiteReport& r, const std::string& example, const netwalk::LazyNetwork& net,
                         const action::GroupAction& act, RngStream& rng) {
  const auto q = action::quotient_network(net, act);
  const json inputs{{"example", example}};
  r.checks.push_back(exact_check("quotient conductance symmetry", inputs, q.symmetry_defect()));
  r.checks.push_back(exact_check("m' = m / |Gamma_x|", inputs, q.measure_defect()));
  r.checks.push_back(
      exact_check("m' stationary for the quotient kernel", inputs, netwalk::check_stationary(q.kernel(), q.total_conductance())));
  r.checks.push_back(exact_check("a' independent of the lift", inputs, action::second_lift_defect(net, act, q, 20, rng)));
}

SuiteReport quotient_suite(Params& params, std::uint64_t seed, std::uint64_t samples, unsigned workers) {
  SuiteReport r;
  const long steps = params.integer("steps", 5, 0, 1000);
  params.finish();
  RngStream rng(seed, 0);

  const action::IntegerLine z;
  const action::TranslationAction t2(2);
  const auto c6 = cycle(6);
  const netwalk::FiniteAsLazy c6_lazy(c6);
  const action::PermutationAction rot2(c6, {rotation(6, 2)});
  const action::PermutationAction rot3(c6, {rotation(6, 3)});
  const action::PermutationAction dihedral6(c6, {rotation(6, 1), reflection(6)});
  const auto tree = action::CayleyTree::regular(2);
  const action::LeftMultiplication tree_auts(tree.alphabet());
  const auto free2 = action::CayleyTree::free2();
  const action::LeftMultiplication free2_auts(free2.alphabet());
  const action::DihedralAction dinf2(2), dinf3(3);

  struct Example {
    std::string name;
    const netwalk::LazyNetwork* net;
    const action::GroupAction* act;
  };
  const std::vector<Example> examples{{"z-line/2Z", &z, &t2},
                                      {"c6/rotation-2", &c6_lazy, &rot2},
                                      {"c6/rotation-3", &c6_lazy, &rot3},
                                      {"c6/dihedral", &c6_lazy, &dihedral6},
                                      {"tree-3/left-multiplication", &tree, &tree_auts},
                                      {"free2-tree/left-multiplication", &free2, &free2_auts},
                                      {"z-line/dihedral-2", &z, &dinf2},
                                      {"z-line/dihedral-3", &z, &dinf3}};
  for (const auto& e : examples) quotient_identities(r, e.name, *e.net, *e.act, rng);

  for (const auto* perm : {&rot2, &rot3, &dihedral6}) {
    const auto edges = action::conductance_check(c6, *perm);
    Check c = exact_check("conductance preserved", {{"example", perm == &rot2 ? "c6/rotation-2" : perm == &rot3 ? "c6/rotation-3" : "c6/dihedral"}},
                          Rational(static_cast<long>(edges.violations)));
    c.detail = {{"edges_checked", edges.checked}};
    r.checks.push_back(std::move(c));
  }
  for (const auto& e : examples) {
    if (e.net == &c6_lazy) continue;
    const auto edges = action::conductance_check(*e.net, *e.act, 10000, rng);
    Check c = exact_check("conductance preserved", {{"example", e.name}}, Rational(static_cast<long>(edges.violations)));
    c.kind = edges.label;
    c.detail = {{"edges_checked", edges.checked}};
    r.checks.push_back(std::move(c));
  }

  const auto qz = action::quotient_network(z, t2);
  const auto law_z = action::quotient_law_check(z, t2, qz, "0", static_cast<unsigned>(steps), samples, seed, workers);
  r.checks.push_back(statistical("quotient law of pi(Z_n)", {{"example", "z-line/2Z"}, {"steps", steps}, {"samples", samples}}, law_z.chi));
  std::uint64_t stream = 1;
  for (const auto* perm : {&rot2, &rot3}) {
    const auto q = action::quotient_network(c6_lazy, *perm);
    const auto law = action::quotient_law_check(c6_lazy, *perm, q, "0", static_cast<unsigned>(steps), samples,
                                                splitmix64(seed + stream++), workers);
    r.checks.push_back(statistical("quotient law of pi(Z_n)",
                                   {{"example", perm == &rot2 ? "c6/rotation-2" : "c6/rotation-3"}, {"steps", steps}, {"samples", samples}},
                                   law.chi));
  }
  return r;
}

SuiteReport return_times(Params& params, std::uint64_t seed, std::uint64_t samples, unsigned workers) {
  SuiteReport r;
  params.finish();
  const action::IntegerLine z;
  const action::TranslationAction t2(2);
  const auto two = action::return_time_stats(action::quotient_network(z, t2), 0, samples, seed, workers, 0.3);
  std::uint64_t other = 0;
  for (const auto& [t, count] : two.histogram)
    if (t != 2) other += count;
  Check c = exact_check("T = 2 for Z mod 2Z", {{"samples", samples}},
                        Rational(static_cast<long>(other + two.unresolved)) + abs(two.exact_mean - 2));
  c.detail = {{"exact_mean", two.exact_mean.get_str()}};
  r.checks.push_back(std::move(c));

  const auto c6 = cycle(6);
  const netwalk::FiniteAsLazy lazy(c6);
  const action::PermutationAction rot3(c6, {rotation(6, 3)});
  const auto q = action::quotient_network(lazy, rot3);
  const auto rt = action::return_time_stats(q, 0, samples, splitmix64(seed + 1), workers, 0.1);
  const double target = rt.exact_mean.get_d();
  Check mean;
  mean.name = "mean return time within 3 sigma of the stationary formula";
  mean.kind = "statistical";
  mean.inputs = {{"example", "c6/rotation-3"}, {"samples", samples}};
  const double se = rt.mean.standard_error;
  const double zscore = se > 0 ? (rt.mean.mean - target) / se : 0.0;
  mean.p_value = se > 0 ? std::erfc(std::fabs(zscore) / std::sqrt(2.0)) : (rt.mean.mean == target ? 1.0 : 0.0);
  mean.verdict = rt.mean.within(target, 3.0) && rt.unresolved == 0;
  mean.detail = {{"mean", rt.mean.mean},
                 {"standard_error", se},
                 {"exact_mean", rt.exact_mean.get_str()},
                 {"unresolved", rt.unresolved}};
  r.checks.push_back(std::move(mean));

  Check tail;
  tail.name = "log-tail slope is negative";
  tail.kind = "statistical";
  tail.inputs = {{"example", "c6/rotation-3"}, {"samples", samples}};
  tail.verdict = rt.tail_slope.has_value() && *rt.tail_slope < 0;
  tail.detail = {{"tail_slope", rt.tail_slope ? json(*rt.tail_slope) : json(nullptr)},
                 {"exp_moment_c", 0.1},
                 {"exp_moment", rt.exp_moment ? json(*rt.exp_moment) : json(nullptr)},
                 {"exp_moment_divergent", rt.exp_moment_divergent}};
  r.checks.push_back(std::move(tail));
  return r;
}

// ---------------------------------------------------------------------------

SuiteReport discretize_suite(Params& params) {
  SuiteReport r;
  params.finish();
  const auto tree = action::CayleyTree::free2();
  const action::LeftMultiplication lm(tree.alphabet());
  const auto mu = discretize::discretize_lattice(tree, lm, "e");
  Rational uniform = abs(Rational(static_cast<long>(mu.entries.size())) - 4);
  for (const auto& g : {"a", "A", "b", "B"}) {
    const auto e = mu.find(g);
    uniform = max_abs(uniform, e && e->exact ? *e->exact - rational(1, 4) : Rational(1));
  }
  Check c = exact_check("free2 tree: mu uniform 1/4 on the generators", {{"family", "free2-tree"}}, uniform);
  c.detail = mu.to_json();
  r.checks.push_back(std::move(c));
  const auto first = discretize::moment(mu, tree, lm, "first");
  r.checks.push_back(exact_check("free2 tree: first moment 1", {{"family", "free2-tree"}},
                                 first.exact ? abs(*first.exact - 1) : Rational(1)));

  discretize::DiscretizeOptions general;
  general.allow_fast_path = false;
  const auto slow = discretize::discretize_lattice(tree, lm, "e", general);
  Rational agree = abs(Rational(static_cast<long>(slow.entries.size() - mu.entries.size())));
  for (const auto& e : slow.entries) {
    const auto f = mu.find(e.element);
    agree = max_abs(agree, f && f->exact && e.exact ? *e.exact - *f->exact : Rational(1));
  }
  r.checks.push_back(exact_check("free2 tree: exact solve agrees with the fast path", {{"family", "free2-tree"}}, agree));

  const action::IntegerLine z;
  const action::TranslationAction t2(2);
  const auto zmu = discretize::discretize_lattice(z, t2, "0");
  FiniteNetwork segment(std::vector<std::string>{"-2", "-1", "0", "1", "2"});
  for (std::size_t i = 0; i + 1 < 5; ++i) segment.add_edge(i, i + 1, 1);
  const auto k = netwalk::kernel_from_network(segment);
  const auto from_minus = netwalk::hitting_distribution(k, {0, 2, 4}, 1);
  const auto from_plus = netwalk::hitting_distribution(k, {0, 2, 4}, 3);
  Rational oracle_defect = abs(Rational(static_cast<long>(zmu.entries.size())) - 3);
  Rational value_defect = 0;
  const std::map<std::string, Rational> expected{{"-2", rational(1, 4)}, {"0", rational(1, 2)}, {"2", rational(1, 4)}};
  for (std::size_t j = 0; j < 3; ++j) {
    const Rational oracle = (from_minus.exact[j] + from_plus.exact[j]) / 2;
    const std::string word = j == 0 ? "-2" : j == 1 ? "0" : "2";
    const auto e = zmu.find(word);
    oracle_defect = max_abs(oracle_defect, e && e->exact ? *e->exact - oracle : Rational(1));
    value_defect = max_abs(value_defect, e && e->exact ? *e->exact - expected.at(word) : Rational(1));
  }
  Check zc = exact_check("2Z on Z: mu(0) = 1/2, mu(+-2) = 1/4", {{"family", "z-line"}, {"k", 2}}, value_defect);
  zc.detail = zmu.to_json();
  r.checks.push_back(std::move(zc));
  r.checks.push_back(exact_check("2Z on Z: mu matches the absorption oracle", {{"family", "z-line"}, {"k", 2}}, oracle_defect));
  Check sym = exact_check("2Z on Z: mu symmetric and generating", {{"family", "z-line"}, {"k", 2}},
                          Rational(zmu.symmetric && zmu.admissibility == action::Generation::generates ? 0 : 1));
  r.checks.push_back(std::move(sym));

  const action::DihedralAction d2(2);
  const auto dmu = discretize::discretize_lattice(z, d2, "0");
  Rational mass = 0;
  for (const auto& e : dmu.entries) mass += e.exact ? *e.exact : Rational(0);
  Check dc = exact_check("D_inf on Z: total mass one with |Gamma_o| = 2", {{"family", "z-line"}, {"action", "dihedral"}, {"k", 2}},
                         abs(mass - 1) + Rational(dmu.stabilizer_order == 2 ? 0 : 1));
  r.checks.push_back(std::move(dc));
  return r;
}

// ---------------------------------------------------------------------------

SuiteReport harmonic_measures(Params& params) {
  SuiteReport r;
  const long depth = params.integer("depth", 6, 1, 8);
  const long m_depth = params.integer("m_depth", 3, 1, 4);
  params.finish();
  for (int q : {2, 3}) {
    buildings::TreeBuilding t(q);
    for (const std::string x : {"e", "01"}) {
      Rational defect = 0;
      for (long k = 0; k <= depth; ++k) defect = max_abs(defect, boundary::partition_sum(t, x, static_cast<unsigned>(k)) - 1);
      r.checks.push_back(exact_check("cylinder partition sums", {{"model", "tree"}, {"q", q}, {"x", x}, {"levels", depth}}, defect));
    }
    auto refinement = from_report(boundary::refinement_check(t, "e", static_cast<unsigned>(depth)));
    refinement.inputs["q"] = q;
    r.checks.push_back(std::move(refinement));
    for (const std::string y : {"0", "01", "12", "010"}) {
      auto rn = from_report(boundary::radon_nikodym_check(t, "e", y, static_cast<unsigned>(depth)));
      rn.inputs["q"] = q;
      r.checks.push_back(std::move(rn));
    }
    for (const auto& [x, y] : std::vector<std::pair<std::string, std::string>>{{"e", "0"}, {"e", "01"}, {"2", "01"}}) {
      auto m = from_report(boundary::m_measure_checks(t, x, y, static_cast<unsigned>(m_depth), "12"));
      m.inputs["q"] = q;
      r.checks.push_back(std::move(m));
    }
  }
  const auto ball = buildings::A2Ball::build(2, 3);
  Rational defect = 0;
  for (long a = 0; a <= 3; ++a)
    for (long b = 0; b <= 3; ++b) defect = max_abs(defect, boundary::partition_sum(ball, ball.base(), cw(a, b)) - 1);
  r.checks.push_back(exact_check("cylinder partition sums", {{"model", "a2-ball"}, {"p", 2}, {"radius", 3}}, defect));
  auto refinement = from_report(boundary::refinement_check(ball));
  r.checks.push_back(std::move(refinement));
  return r;
}

SuiteReport boundary_hitting(Params& params, std::uint64_t seed, std::uint64_t samples, unsigned workers) {
  SuiteReport r;
  const long q = params.integer("q", 2, 1, 4);
  const long max_level = params.integer("max_level", 3, 1, 6);
  const long ball_level = params.integer("ball_level", 2, 0, 2);
  params.finish();
  buildings::TreeBuilding t(static_cast<int>(q));
  const auto srw = boundary::IsotropicKernel::tree_srw();
  for (long level = 1; level <= max_level; ++level) {
    const auto h = boundary::boundary_hitting_mc(t, srw, static_cast<unsigned>(level), samples,
                                                 splitmix64(seed + static_cast<std::uint64_t>(level)), workers);
    Check c = statistical("tree exit frequencies uniform over V_lambda", {{"q", q}, {"level", level}, {"samples", samples}}, h.chi);
    c.verdict = c.verdict && !h.flagged;
    c.detail["unresolved"] = h.unresolved;
    c.detail["cells"] = h.cylinders.size();
    c.detail["counts"] = h.counts;
    r.checks.push_back(std::move(c));
  }
  if (ball_level > 0) {
    const auto ball = buildings::A2Ball::build(2, static_cast<int>(ball_level) + 1);
    const auto h = boundary::boundary_hitting_mc(ball, boundary::IsotropicKernel::a2_uniform(), static_cast<int>(ball_level),
                                                 samples, splitmix64(seed + 100), workers);
    Check c = statistical("A2 exit frequencies uniform within sigma classes",
                          {{"p", 2}, {"radius", ball_level + 1}, {"level", ball_level}, {"samples", samples}}, h.chi, h.label);
    c.verdict = c.verdict && !h.flagged;
    c.detail["unresolved"] = h.unresolved;
    c.detail["cells"] = h.cylinders.size();
    r.checks.push_back(std::move(c));
  }
  return r;
}

// ---------------------------------------------------------------------------

SuiteReport opposite_chamber(Params& params, std::uint64_t seed) {
  SuiteReport r;
  const long pairs = params.integer("pairs", 1000, 0, 1000000);
  params.finish();
  auto run = [&](const buildings::SphericalA2& s, const std::vector<std::pair<std::size_t, std::size_t>>& work,
                 const std::string& label) {
    long failures = 0;
    int max_iterations = 0;
    for (const auto& [c, c2] : work) {
      const auto res = buildings::opposite_to_both(s, c, c2);
      max_iterations = std::max(max_iterations, res.iterations);
      // Opposite chambers are exactly those at gallery distance 3.
      if (s.gallery_distance(res.chamber, c) != 3 || s.gallery_distance(res.chamber, c2) != 3) ++failures;
    }
    Check ok = exact_check("output opposite to both inputs", {{"plane", label}, {"pairs", work.size()}},
                           Rational(failures));
    r.checks.push_back(std::move(ok));
    Check it = exact_check("at most 3 improvement iterations", {{"plane", label}, {"pairs", work.size()}},
                           Rational(std::max(0, max_iterations - 3)));
    it.detail = {{"max_iterations", max_iterations}};
    r.checks.push_back(std::move(it));
  };
  const buildings::SphericalA2 pg2(2);
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t c = 0; c < pg2.num_chambers(); ++c)
    for (std::size_t d = 0; d < pg2.num_chambers(); ++d) all.emplace_back(c, d);
  run(pg2, all, "PG(2,2)");
  const buildings::SphericalA2 pg3(3);
  RngStream rng(seed, 0);
  std::vector<std::pair<std::size_t, std::size_t>> sampled;
  for (long i = 0; i < pairs; ++i) sampled.emplace_back(rng.below(pg3.num_chambers()), rng.below(pg3.num_chambers()));
  run(pg3, sampled, "PG(2,3)");
  return r;
}

SuiteReport special_subgroup(Params& params, std::uint64_t seed) {
  SuiteReport r;
  const long q = params.integer("q", 2, 2, 4);
  const long trials = params.integer("trials", 100, 1, 100000);
  params.finish();
  const buildings::SphericalA2 s(static_cast<int>(q));
  RngStream rng(seed, 0);
  const std::vector<std::set<int>> js{{}, {1}, {2}, {1, 2}};
  for (const auto& j : js) {
    long wrong_j = 0, wrong_verdict = 0, not_parabolic = 0, not_closed = 0;
    for (long t = 0; t < trials; ++t) {
      const auto pi = boundary::random_labelling(s, j, rng);
      const auto d = boundary::special_subgroup_detect(s, pi);
      wrong_j += d.j != j;
      wrong_verdict += !d.verdict;
      not_parabolic += !d.equals_parabolic;
      not_closed += !d.splitting_closed;
    }
    const json inputs{{"q", q}, {"J", std::vector<int>(j.begin(), j.end())}, {"trials", trials}};
    r.checks.push_back(exact_check("detector returns W_J with verdict true", inputs,
                                   Rational(wrong_j + wrong_verdict + not_parabolic)));
    r.checks.push_back(exact_check("E closed under splitting", inputs, Rational(not_closed)));
  }
  return r;
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"tree-nlambda",     "a2-nlambda",         "induced-random",
                                              "quotient",         "return-times",       "discretize",
                                              "harmonic-measures", "boundary-hitting",  "opposite-chamber",
                                              "special-subgroup"};
  return names;
}

bool is_stochastic(const std::string& suite) {
  static const std::set<std::string> stochastic{"induced-random",   "quotient",         "return-times",
                                                "boundary-hitting", "opposite-chamber", "special-subgroup"};
  return stochastic.count(suite) != 0;
}

SuiteReport run_suite(const std::string& suite, const SuiteOptions& options) {
  const auto& names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) throw SuiteError("unknown suite '" + suite + "'");
  if (is_stochastic(suite) && !options.seed) throw SuiteError("suite '" + suite + "' is stochastic and needs a seed");
  json record = json::object();
  Params params(options.params, record);
  const std::uint64_t seed = options.seed.value_or(0);
  const std::uint64_t samples = options.samples.value_or(100000);
  const unsigned workers = std::max(1u, options.workers);
  SuiteReport r;
  if (suite == "tree-nlambda") r = tree_nlambda(params);
  else if (suite == "a2-nlambda") r = a2_nlambda(params);
  else if (suite == "induced-random") r = induced_random(params, seed);
  else if (suite == "quotient") r = quotient_suite(params, seed, samples, workers);
  else if (suite == "return-times") r = return_times(params, seed, samples, workers);
  else if (suite == "discretize") r = discretize_suite(params);
  else if (suite == "harmonic-measures") r = harmonic_measures(params);
  else if (suite == "boundary-hitting") r = boundary_hitting(params, seed, samples, workers);
  else if (suite == "opposite-chamber") r = opposite_chamber(params, seed);
  else r = special_subgroup(params, seed);
  r.suite = suite;
  if (options.seed) record["seed"] = *options.seed;
  if (suite == "quotient" || suite == "return-times" || suite == "boundary-hitting") record["samples"] = samples;
  r.parameters = record;
  return r;
}

}  // namespace chamberwalk::suites
