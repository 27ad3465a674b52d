#include "chamberwalk/boundary.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_map>

namespace chamberwalk::boundary {

using buildings::InsufficientDepth;
using coxeter::IntVector;

namespace {

Coweight level(long k) { return Coweight(IntVector{k}); }

Rational abs_diff(const Rational& a, const Rational& b) { return abs(Rational(a - b)); }

/// chi of k lambda_1 on a tree, for any integer k.
Rational tree_chi(const TreeBuilding& t, long k) {
  return k >= 0 ? t.type_data().chi(level(k)) : Rational(1 / t.type_data().chi(level(-k)));
}

/// Omega_x(u) = Omega_y(u): the geodesics from u to x and to y leave u the same way.
bool same_cylinder(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, const NodeKey& u) {
  if (u == x || u == y) return false;
  return t.step_towards(u, x) == t.step_towards(u, y);
}

}  // namespace

nlohmann::json CheckReport::to_json() const {
  return {{"check", check},
          {"inputs", inputs},
          {"defect", defect.get_str()},
          {"checked", checked},
          {"verdict", verdict}};
}

// ---------------------------------------------------------------------------

Rational nu_cylinder(const TreeBuilding& t, const NodeKey& x, const NodeKey& y) {
  return 1 / t.type_data().n_lambda(t.sigma(x, y));
}

Rational nu_cylinder(const A2Ball& b, std::size_t x, std::size_t y) {
  return 1 / b.type_data().n_lambda(b.sigma(x, y));
}

Rational partition_sum(const TreeBuilding& t, const NodeKey& x, unsigned lvl) {
  Rational total = 0;
  for (const auto& y : t.v_lambda(x, lvl)) total += nu_cylinder(t, x, y);
  return total;
}

Rational partition_sum(const A2Ball& b, std::size_t x, const Coweight& lambda) {
  const auto sphere = b.v_lambda(x, lambda);
  return Rational(static_cast<long>(sphere.size())) / b.type_data().n_lambda(lambda);
}

CheckReport refinement_check(const TreeBuilding& t, const NodeKey& x, unsigned max_level) {
  CheckReport r;
  r.check = "refinement";
  r.inputs = {{"model", "tree"}, {"q", t.q()}, {"x", x}, {"max_level", max_level}};
  for (unsigned k = 0; k < max_level; ++k)
    for (const auto& y : t.v_lambda(x, k)) {
      Rational deeper = 0;
      for (const auto& [child, a] : t.network().neighbors(y))
        if (t.distance(x, child) == k + 1) deeper += nu_cylinder(t, x, child);
      r.defect = std::max(r.defect, abs_diff(nu_cylinder(t, x, y), deeper));
      ++r.checked;
    }
  r.verdict = r.defect == 0;
  return r;
}

CheckReport refinement_check(const A2Ball& b) {
  CheckReport r;
  r.check = "refinement";
  r.inputs = {{"model", "a2-ball"}, {"p", b.p()}, {"radius", b.radius()}};
  const auto& data = b.type_data();
  const long radius = b.radius();
  for (long a = 0; a <= radius; ++a)
    for (long c = 0; c <= radius; ++c)
      for (int step = 1; step <= 2; ++step) {
        const Coweight lambda(IntVector{a, c});
        const Coweight deeper = lambda + Coweight::fundamental(2, step);
        if (deeper.coords[0] > radius || deeper.coords[1] > radius) continue;
        const Rational nu = 1 / data.n_lambda(lambda);
        const Rational nu_deeper = 1 / data.n_lambda(deeper);
        std::unordered_map<std::size_t, long> hits;
        for (auto y : b.v_lambda(b.base(), lambda)) hits.emplace(y, 0);
        for (auto y2 : b.v_lambda(b.base(), deeper)) {
          for (auto y : b.neighbor_slots(y2)) {
            if (y == A2Ball::kNoVertex || b.sigma_from_base(y) != lambda) continue;
            // sigma(y, y2) = lambda_step exactly when the type rises by step.
            if ((b.type(y2) - b.type(y) + 3) % 3 != step) continue;
            ++hits.at(y);
          }
        }
        for (const auto& [y, count] : hits) {
          r.defect = std::max(r.defect, abs_diff(nu, Rational(count) * nu_deeper));
          ++r.checked;
        }
      }
  r.verdict = r.defect == 0;
  return r;
}

CheckReport radon_nikodym_check(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, unsigned max_depth) {
  CheckReport r;
  r.check = "radon-nikodym";
  r.inputs = {{"model", "tree"}, {"q", t.q()}, {"x", x}, {"y", y}, {"max_depth", max_depth}};
  for (unsigned depth = 1; depth <= max_depth; ++depth)
    for (const auto& u : t.v_lambda(x, depth)) {
      if (x != y && !same_cylinder(t, x, y, u)) continue;
      // A ray from x through u, continued two steps past u.
      auto ray = t.geodesic(x, u);
      for (int extra = 0; extra < 2; ++extra)
        for (const auto& [n, a] : t.network().neighbors(ray.back()))
          if (t.distance(x, n) == ray.size()) {
            ray.push_back(n);
            break;
          }
      const long h = buildings::busemann_h(t, x, y, ray);
      const Rational ratio = nu_cylinder(t, y, u) / nu_cylinder(t, x, u);
      r.defect = std::max(r.defect, abs_diff(ratio, tree_chi(t, h)));
      ++r.checked;
    }
  r.verdict = r.defect == 0 && r.checked > 0;
  return r;
}

Rational m_measure(const TreeBuilding& t, const NodeKey& x, const NodeKey& u, const NodeKey& u_prime) {
  const long dxu = t.distance(x, u), dxv = t.distance(x, u_prime), duv = t.distance(u, u_prime);
  if (dxu == 0 || dxv == 0 || dxu + duv == dxv || dxv + duv == dxu)
    throw std::invalid_argument("cylinders overlap");
  // beta_x is twice the distance from x to the geodesic through u and u'.
  const long beta = dxu + dxv - duv;
  return tree_chi(t, beta) * nu_cylinder(t, x, u) * nu_cylinder(t, x, u_prime);
}

CheckReport m_measure_checks(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, unsigned max_depth,
                             const std::string& g) {
  CheckReport r;
  r.check = "m-measure";
  r.inputs = {{"model", "tree"}, {"q", t.q()}, {"x", x}, {"y", y}, {"max_depth", max_depth}, {"g", g}};
  std::vector<NodeKey> cylinders;
  for (unsigned depth = 1; depth <= max_depth; ++depth)
    for (const auto& u : t.v_lambda(x, depth)) cylinders.push_back(u);
  const auto& alphabet = t.network().alphabet();
  if (!alphabet.valid(g)) throw std::invalid_argument("automorphism word is not reduced: " + g);
  const NodeKey gx = alphabet.multiply(g, x);
  for (const auto& u : cylinders)
    for (const auto& v : cylinders) {
      const long dxu = t.distance(x, u), dxv = t.distance(x, v), duv = t.distance(u, v);
      if (dxu + duv == dxv || dxv + duv == dxu) continue;
      const Rational at_x = m_measure(t, x, u, v);
      const Rational moved = m_measure(t, gx, alphabet.multiply(g, u), alphabet.multiply(g, v));
      r.defect = std::max(r.defect, abs_diff(at_x, moved));
      ++r.checked;
      if (x == y || (same_cylinder(t, x, y, u) && same_cylinder(t, x, y, v))) {
        r.defect = std::max(r.defect, abs_diff(at_x, m_measure(t, y, u, v)));
        ++r.checked;
      }
    }
  r.verdict = r.defect == 0 && r.checked > 0;
  return r;
}

// ---------------------------------------------------------------------------

IsotropicKernel::IsotropicKernel(std::map<Coweight, Rational> step_law) : law_(std::move(step_law)) {
  Rational total = 0;
  double running = 0.0;
  for (const auto& [lambda, c] : law_) {
    if (lambda.is_zero() || !lambda.is_dominant())
      throw std::invalid_argument("step law must live on nonzero dominant coweights");
    if (sgn(c) <= 0) throw std::invalid_argument("step-law weights must be positive");
    total += c;
    running += c.get_d();
    support_.push_back(lambda);
    cumulative_.push_back(running);
  }
  if (total != 1) throw std::invalid_argument("step law must sum to 1");
  cumulative_.back() = 1.0;
}

IsotropicKernel IsotropicKernel::tree_srw() { return IsotropicKernel({{level(1), Rational(1)}}); }

IsotropicKernel IsotropicKernel::a2_uniform() {
  return IsotropicKernel({{Coweight::fundamental(2, 1), rational(1, 2)}, {Coweight::fundamental(2, 2), rational(1, 2)}});
}

bool IsotropicKernel::symmetric(const coxeter::WeylGroup& w) const {
  for (const auto& [lambda, c] : law_) {
    const auto it = law_.find(w.iota(lambda));
    if (it == law_.end() || it->second != c) return false;
  }
  return true;
}

IsotropicKernel IsotropicKernel::symmetrized(const coxeter::WeylGroup& w) const {
  std::map<Coweight, Rational> out;
  for (const auto& [lambda, c] : law_) {
    out[lambda] += c / 2;
    out[w.iota(lambda)] += c / 2;
  }
  return IsotropicKernel(std::move(out));
}

Rational IsotropicKernel::transition(const TreeBuilding& t, const NodeKey& x, const NodeKey& y) const {
  const auto it = law_.find(t.sigma(x, y));
  if (it == law_.end()) return 0;
  return it->second / t.type_data().n_lambda(it->first);
}

Rational IsotropicKernel::transition(const A2Ball& b, std::size_t x, std::size_t y) const {
  const auto it = law_.find(b.sigma(x, y));
  if (it == law_.end()) return 0;
  return it->second / b.type_data().n_lambda(it->first);
}

Rational IsotropicKernel::row_sum(const A2Ball& b, std::size_t x) const {
  Rational total = 0;
  for (const auto& [lambda, c] : law_)
    total += c * Rational(static_cast<long>(b.v_lambda(x, lambda).size())) / b.type_data().n_lambda(lambda);
  return total;
}

const Coweight& IsotropicKernel::draw(RngStream& rng) const {
  const double u = rng.uniform();
  for (std::size_t i = 0; i < support_.size(); ++i)
    if (u < cumulative_[i]) return support_[i];
  return support_.back();
}

std::string IsotropicKernel::step(const TreeBuilding& t, const std::string& relative, RngStream& rng) const {
  const Coweight& lambda = draw(rng);
  if (lambda.rank() != 1) throw std::invalid_argument("tree walks need rank-1 step laws");
  const auto& alphabet = t.network().alphabet();
  const std::string& letters = alphabet.letters();
  std::string w;
  for (long i = 0; i < lambda.coords[0]; ++i) {
    if (w.empty()) {
      w.push_back(letters[rng.below(letters.size())]);
    } else {
      // Uniform among the letters other than the previous one.
      std::size_t k = rng.below(letters.size() - 1);
      if (letters[k] == w.back()) k = letters.size() - 1;
      w.push_back(letters[k]);
    }
  }
  return alphabet.multiply(relative, action::WordAlphabet::dress(w));
}

std::size_t IsotropicKernel::step(const A2Ball& b, std::size_t x, RngStream& rng) const {
  const Coweight& lambda = draw(rng);
  int rise = 0;
  if (lambda == Coweight::fundamental(2, 1)) rise = 1;
  if (lambda == Coweight::fundamental(2, 2)) rise = 2;
  if (rise == 0) throw std::invalid_argument("ball walks support steps lambda_1 and lambda_2 only");
  std::array<std::uint32_t, 512> candidates{};
  std::size_t count = 0;
  for (auto y : b.neighbor_slots(x)) {
    if (y == A2Ball::kNoVertex) throw InsufficientDepth("walk reached the truncation boundary");
    if ((b.type(y) - b.type(x) + 3) % 3 == rise && count < candidates.size()) candidates[count++] = y;
  }
  return candidates[rng.below(count)];
}

// ---------------------------------------------------------------------------

nlohmann::json HittingStats::to_json() const {
  auto cells = nlohmann::json::array();
  for (std::size_t i = 0; i < cylinders.size(); ++i)
    cells.push_back({{"cylinder", cylinders[i]}, {"count", counts[i]}, {"expected", expected[i]}});
  return {{"model", model},
          {"label", label},
          {"samples", samples},
          {"unresolved", unresolved},
          {"flagged", flagged},
          {"chi_square",
           {{"statistic", chi.statistic}, {"degrees_of_freedom", chi.degrees_of_freedom}, {"p_value", chi.p_value}}},
          {"cells", cells}};
}

std::string HittingStats::to_csv() const {
  std::ostringstream os;
  os << "cylinder,count,expected\n";
  os.precision(17);
  for (std::size_t i = 0; i < cylinders.size(); ++i) os << cylinders[i] << ',' << counts[i] << ',' << expected[i] << '\n';
  return os.str();
}

namespace {

struct HitPartial {
  std::vector<std::uint64_t> counts;
  std::uint64_t unresolved = 0;
};

void merge(HittingStats& out, const std::vector<HitPartial>& parts) {
  out.counts.assign(out.cylinders.size(), 0);
  for (const auto& part : parts) {
    for (std::size_t i = 0; i < part.counts.size(); ++i) out.counts[i] += part.counts[i];
    out.unresolved += part.unresolved;
  }
  out.flagged = out.unresolved * 100 > out.samples;
}

}  // namespace

HittingStats boundary_hitting_mc(const TreeBuilding& t, const IsotropicKernel& k, unsigned lvl,
                                 std::uint64_t samples, std::uint64_t seed, unsigned workers, unsigned margin,
                                 std::uint64_t horizon) {
  HittingStats out;
  out.model = "tree q=" + std::to_string(t.q());
  out.label = "statistical";
  out.samples = samples;
  out.cylinders = t.v_lambda("e", lvl);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < out.cylinders.size(); ++i) {
    index.emplace(out.cylinders[i], i);
    out.expected.push_back(nu_cylinder(t, "e", out.cylinders[i]).get_d());
  }
  const std::size_t stop = lvl + margin;
  const auto parts = run_chunks<HitPartial>(samples, seed, workers, [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
    HitPartial part;
    part.counts.assign(out.cylinders.size(), 0);
    for (std::uint64_t s = 0; s < count; ++s) {
      std::string z = "e";
      std::uint64_t steps = 0;
      while (action::WordAlphabet::strip(z).size() < stop && steps < horizon) {
        z = k.step(t, z, rng);
        ++steps;
      }
      if (action::WordAlphabet::strip(z).size() < stop) {
        ++part.unresolved;
        continue;
      }
      ++part.counts[index.at(action::WordAlphabet::dress(z.substr(0, lvl)))];
    }
    return part;
  });
  merge(out, parts);
  out.chi = stats::goodness_of_fit(out.counts, out.expected);
  return out;
}

HittingStats boundary_hitting_mc(const A2Ball& b, const IsotropicKernel& k, int lvl, std::uint64_t samples,
                                 std::uint64_t seed, unsigned workers, std::uint64_t horizon) {
  if (lvl < 1 || b.radius() < lvl + 1) throw InsufficientDepth("ball radius must exceed the exit level");
  if (!b.has_adjacency()) throw std::invalid_argument("ball walks need adjacency");
  HittingStats out;
  out.model = "a2-ball p=" + std::to_string(b.p()) + " R=" + std::to_string(b.radius());
  out.label = "statistical, truncation-limited";
  out.samples = samples;
  // Exit classes: sigma(o, y) in the box with a coordinate equal to the level.
  std::vector<Coweight> classes;
  std::vector<std::pair<std::size_t, std::size_t>> ranges;  // cell range per class
  std::unordered_map<std::size_t, std::size_t> cell_of;
  for (long a = 0; a <= lvl; ++a)
    for (long c = 0; c <= lvl; ++c) {
      if (std::max(a, c) != lvl) continue;
      const Coweight mu(IntVector{a, c});
      const auto sphere = b.v_lambda(b.base(), mu);
      const double p = Rational(1 / b.type_data().n_lambda(mu)).get_d();
      const std::size_t first = out.cylinders.size();
      for (auto y : sphere) {
        cell_of.emplace(y, out.cylinders.size());
        out.cylinders.push_back(to_string(mu) + ":" + b.lattice(y).label());
        out.expected.push_back(p);
      }
      classes.push_back(mu);
      ranges.emplace_back(first, out.cylinders.size());
    }
  const auto parts = run_chunks<HitPartial>(samples, seed, workers, [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
    HitPartial part;
    part.counts.assign(out.cylinders.size(), 0);
    for (std::uint64_t s = 0; s < count; ++s) {
      std::size_t z = b.base(), last = b.base();
      bool exited = false;
      for (std::uint64_t steps = 0; steps < horizon; ++steps) {
        z = k.step(b, z, rng);
        const Coweight sz = b.sigma_from_base(z);
        if (std::max(sz.coords[0], sz.coords[1]) > lvl) {
          exited = true;
          break;
        }
        last = z;
      }
      if (!exited) {
        ++part.unresolved;
        continue;
      }
      ++part.counts[cell_of.at(last)];
    }
    return part;
  });
  merge(out, parts);
  std::vector<stats::ChiSquare> per_class;
  for (const auto& [first, end] : ranges) {
    std::vector<std::uint64_t> obs(out.counts.begin() + static_cast<std::ptrdiff_t>(first),
                                   out.counts.begin() + static_cast<std::ptrdiff_t>(end));
    std::uint64_t total = 0;
    for (auto c : obs) total += c;
    if (total == 0) continue;
    per_class.push_back(stats::goodness_of_fit(obs, std::vector<double>(obs.size(), 1.0 / static_cast<double>(obs.size()))));
  }
  out.chi = stats::combine(per_class);
  return out;
}

// ---------------------------------------------------------------------------

nlohmann::json SpecialSubgroup::to_json() const {
  auto elements = nlohmann::json::array();
  for (const auto& w : e) elements.push_back(coxeter::to_string(w.word()));
  return {{"E", elements},
          {"J", j},
          {"verdict", verdict},
          {"equals_parabolic", equals_parabolic},
          {"splitting_closed", splitting_closed}};
}

SpecialSubgroup special_subgroup_detect(const buildings::SphericalA2& s, const std::vector<int>& pi) {
  const std::size_t n = s.num_chambers();
  if (pi.size() != n) throw std::invalid_argument("labelling must assign a value to every chamber");
  const auto& w = s.weyl();
  const auto& elements = w.elements();
  auto index_of = [&](const coxeter::WeylElement& x) {
    return static_cast<std::size_t>(std::find(elements.begin(), elements.end(), x) - elements.begin());
  };
  std::vector<std::size_t> delta(n * n);
  std::vector<char> separated(elements.size(), 0);
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t d = 0; d < n; ++d) {
      const std::size_t k = index_of(s.weyl_distance(c, d));
      delta[c * n + d] = k;
      if (pi[c] != pi[d]) separated[k] = 1;
    }
  SpecialSubgroup out;
  for (std::size_t k = 0; k < elements.size(); ++k)
    if (!separated[k]) out.e.push_back(elements[k]);
  for (const auto& x : out.e)
    for (int letter : x.word()) out.j.insert(letter);

  out.verdict = true;
  for (std::size_t c = 0; c < n && out.verdict; ++c)
    for (std::size_t d = 0; d < n; ++d)
      if (w.in_parabolic(elements[delta[c * n + d]], out.j) && pi[c] != pi[d]) {
        out.verdict = false;
        break;
      }

  auto in_e = [&](const coxeter::WeylElement& x) { return std::find(out.e.begin(), out.e.end(), x) != out.e.end(); };
  auto parabolic = w.parabolic(out.j);
  out.equals_parabolic = parabolic.size() == out.e.size() && std::all_of(parabolic.begin(), parabolic.end(), in_e);
  out.splitting_closed = true;
  for (const auto& x : out.e)
    for (int i = 1; i <= w.root_system().rank(); ++i) {
      const auto si = w.generator(i);
      const auto rest = w.multiply(si, x);
      if (rest.length() < x.length() && !(in_e(si) && in_e(rest))) out.splitting_closed = false;
    }
  return out;
}

std::vector<int> random_labelling(const buildings::SphericalA2& s, const std::set<int>& j, RngStream& rng) {
  const std::size_t n = s.num_chambers();
  std::vector<int> pi(n);
  if (j == std::set<int>{1, 2}) {
    std::fill(pi.begin(), pi.end(), static_cast<int>(rng.below(2)));
    return pi;
  }
  if (j.size() == 1) {
    // {1}-residues share a line, {2}-residues share a point.
    const bool by_line = *j.begin() == 1;
    const std::size_t m = by_line ? s.num_lines() : s.num_points();
    std::vector<int> f(m);
    do {
      for (auto& v : f) v = static_cast<int>(rng.below(2));
    } while (std::all_of(f.begin(), f.end(), [&](int v) { return v == f.front(); }));
    for (std::size_t c = 0; c < n; ++c) {
      const auto [point, line] = s.flag(c);
      pi[c] = f[by_line ? line : point];
    }
    return pi;
  }
  if (!j.empty()) throw std::invalid_argument("J must be a subset of {1, 2}");
  auto separates = [&](int type) {
    for (std::size_t c = 0; c < n; ++c)
      for (auto d : s.chambers_adjacent(c, type))
        if (pi[c] != pi[d]) return true;
    return false;
  };
  do {
    for (auto& v : pi) v = static_cast<int>(rng.below(2));
  } while (!separates(1) || !separates(2));
  return pi;
}

}  // namespace chamberwalk::boundary
