#include "chamberwalk/action.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace chamberwalk::action {

namespace {

long parse_long(const std::string& s) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(s, &used);
  } catch (const std::exception&) {
    throw InvalidAction("not an integer: '" + s + "'");
  }
  if (used != s.size()) throw InvalidAction("not an integer: '" + s + "'");
  return v;
}

long mod(long a, long k) { return ((a % k) + k) % k; }

std::vector<std::size_t> compose(const std::vector<std::size_t>& g, const std::vector<std::size_t>& p) {
  std::vector<std::size_t> out(p.size());
  for (std::size_t x = 0; x < p.size(); ++x) out[x] = g[p[x]];
  return out;
}

std::size_t closure_size(const std::vector<std::vector<std::size_t>>& gens, std::size_t n) {
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  std::set<std::vector<std::size_t>> seen{id};
  std::deque<std::vector<std::size_t>> queue{id};
  while (!queue.empty()) {
    auto p = queue.front();
    queue.pop_front();
    for (const auto& g : gens) {
      auto q = compose(g, p);
      if (seen.insert(q).second) queue.push_back(std::move(q));
    }
  }
  return seen.size();
}

}  // namespace

std::string to_string(Generation g) {
  switch (g) {
    case Generation::generates:
      return "generates";
    case Generation::does_not_generate:
      return "does-not-generate";
    case Generation::unchecked:
      break;
  }
  return "unchecked";
}

// ---------------------------------------------------------------------------

PermutationAction::PermutationAction(const netwalk::FiniteNetwork& net, std::vector<std::vector<std::size_t>> generators,
                                     std::size_t max_order)
    : net_(&net), generators_(std::move(generators)) {
  const std::size_t n = net.size();
  for (const auto& g : generators_) {
    if (g.size() != n) throw InvalidAction("generator length differs from the number of nodes");
    std::vector<char> hit(n, 0);
    for (auto y : g) {
      if (y >= n || hit[y]) throw InvalidAction("generator is not a permutation");
      hit[y] = 1;
    }
  }
  std::vector<std::size_t> id(n);
  std::iota(id.begin(), id.end(), 0);
  elements_.push_back(id);
  words_.push_back("e");
  index_[id] = 0;
  for (std::size_t head = 0; head < elements_.size(); ++head) {
    for (std::size_t i = 0; i < generators_.size(); ++i) {
      auto q = compose(generators_[i], elements_[head]);
      if (index_.count(q)) continue;
      if (elements_.size() >= max_order) throw InvalidAction("permutation group exceeds the order limit");
      const std::string word = "g" + std::to_string(i) + (words_[head] == "e" ? "" : "." + words_[head]);
      index_[q] = elements_.size();
      elements_.push_back(std::move(q));
      words_.push_back(word);
    }
  }
  for (std::size_t i = 0; i < words_.size(); ++i) by_word_[words_[i]] = i;
  orbit_rep_.assign(n, 0);
  orbit_size_.assign(n, 0);
  for (std::size_t x = 0; x < n; ++x) {
    std::set<std::size_t> orbit;
    for (const auto& p : elements_) orbit.insert(p[x]);
    orbit_rep_[x] = *orbit.begin();
    orbit_size_[x] = orbit.size();
  }
}

PermutationAction PermutationAction::from_json(const netwalk::FiniteNetwork& net, const nlohmann::json& doc) {
  if (!doc.contains("generators") || !doc.at("generators").is_array())
    throw InvalidAction("action JSON needs a generators array");
  std::vector<std::vector<std::size_t>> gens;
  for (const auto& g : doc.at("generators")) gens.push_back(g.get<std::vector<std::size_t>>());
  return PermutationAction(net, std::move(gens));
}

std::size_t PermutationAction::node(const NodeKey& x) const {
  const auto i = net_->index_of(x);
  if (!i) throw InvalidAction("unknown node " + x);
  return *i;
}

const std::vector<std::size_t>& PermutationAction::perm(const GroupWord& g) const {
  auto it = by_word_.find(g);
  if (it == by_word_.end()) throw InvalidAction("unknown group element " + g);
  return elements_[it->second];
}

NodeKey PermutationAction::canonical(const NodeKey& x) const { return net_->label(orbit_rep_[node(x)]); }

std::uint64_t PermutationAction::stabilizer_order(const NodeKey& x) const {
  return elements_.size() / orbit_size_[node(x)];
}

std::optional<std::vector<NodeKey>> PermutationAction::fundamental_domain() const {
  std::vector<NodeKey> out;
  for (std::size_t x = 0; x < orbit_rep_.size(); ++x)
    if (orbit_rep_[x] == x) out.push_back(net_->label(x));
  return out;
}

NodeKey PermutationAction::apply(const GroupWord& g, const NodeKey& x) const { return net_->label(perm(g)[node(x)]); }

std::vector<GroupWord> PermutationAction::elements_to(const NodeKey& from, const NodeKey& to) const {
  const std::size_t a = node(from), b = node(to);
  std::vector<GroupWord> out;
  for (std::size_t i = 0; i < elements_.size(); ++i)
    if (elements_[i][a] == b) out.push_back(words_[i]);
  return out;
}

GroupWord PermutationAction::inverse(const GroupWord& g) const {
  const auto& p = perm(g);
  std::vector<std::size_t> inv(p.size());
  for (std::size_t x = 0; x < p.size(); ++x) inv[p[x]] = x;
  return words_[index_.at(inv)];
}

GroupWord PermutationAction::sample_element(RngStream& rng) const { return words_[rng.below(elements_.size())]; }

Generation PermutationAction::generated_by(const std::vector<GroupWord>& elements) const {
  std::vector<std::vector<std::size_t>> gens;
  for (const auto& w : elements) gens.push_back(perm(w));
  return closure_size(gens, net_->size()) == elements_.size() ? Generation::generates
                                                                : Generation::does_not_generate;
}

// ---------------------------------------------------------------------------

std::vector<std::pair<NodeKey, Rational>> IntegerLine::neighbors(const NodeKey& x) const {
  const long v = parse_long(x);
  return {{std::to_string(v - 1), Rational(1)}, {std::to_string(v + 1), Rational(1)}};
}

std::optional<std::uint64_t> IntegerLine::known_distance(const NodeKey& x, const NodeKey& y) const {
  return static_cast<std::uint64_t>(std::abs(parse_long(x) - parse_long(y)));
}

TranslationAction::TranslationAction(long k) : k_(k) {
  if (k < 1) throw InvalidAction("translation step must be positive");
}

NodeKey TranslationAction::canonical(const NodeKey& x) const { return std::to_string(mod(parse_long(x), k_)); }

std::optional<std::vector<NodeKey>> TranslationAction::fundamental_domain() const {
  std::vector<NodeKey> out;
  for (long r = 0; r < k_; ++r) out.push_back(std::to_string(r));
  return out;
}

NodeKey TranslationAction::apply(const GroupWord& g, const NodeKey& x) const {
  const long n = parse_long(g);
  if (mod(n, k_) != 0) throw InvalidAction("translation " + g + " is not in the group");
  return std::to_string(parse_long(x) + n);
}

std::vector<GroupWord> TranslationAction::elements_to(const NodeKey& from, const NodeKey& to) const {
  const long n = parse_long(to) - parse_long(from);
  if (mod(n, k_) != 0) return {};
  return {std::to_string(n)};
}

GroupWord TranslationAction::inverse(const GroupWord& g) const { return std::to_string(-parse_long(g)); }

GroupWord TranslationAction::sample_element(RngStream& rng) const {
  return std::to_string((static_cast<long>(rng.below(11)) - 5) * k_);
}

Generation TranslationAction::generated_by(const std::vector<GroupWord>& elements) const {
  long g = 0;
  for (const auto& w : elements) g = std::gcd(g, std::abs(parse_long(w)));
  return g == k_ ? Generation::generates : Generation::does_not_generate;
}

DihedralAction::DihedralAction(long k) : k_(k) {
  if (k < 1) throw InvalidAction("dihedral translation step must be positive");
}

NodeKey DihedralAction::canonical(const NodeKey& x) const {
  const long r = mod(parse_long(x), k_);
  return std::to_string(std::min(r, mod(-r, k_)));
}

std::uint64_t DihedralAction::stabilizer_order(const NodeKey& x) const {
  return mod(2 * parse_long(x), k_) == 0 ? 2 : 1;
}

std::optional<std::vector<NodeKey>> DihedralAction::fundamental_domain() const {
  std::vector<NodeKey> out;
  for (long r = 0; r <= k_ / 2; ++r) out.push_back(std::to_string(r));
  return out;
}

NodeKey DihedralAction::apply(const GroupWord& g, const NodeKey& x) const {
  const bool refl = g.rfind("refl:", 0) == 0;
  const long n = parse_long(refl ? g.substr(5) : g);
  if (mod(n, k_) != 0) throw InvalidAction("element " + g + " is not in the group");
  const long v = parse_long(x);
  return std::to_string(refl ? n - v : v + n);
}

std::vector<GroupWord> DihedralAction::elements_to(const NodeKey& from, const NodeKey& to) const {
  const long a = parse_long(from), b = parse_long(to);
  std::vector<GroupWord> out;
  if (mod(b - a, k_) == 0) out.push_back(std::to_string(b - a));
  if (mod(b + a, k_) == 0) out.push_back("refl:" + std::to_string(b + a));
  return out;
}

GroupWord DihedralAction::inverse(const GroupWord& g) const {
  if (g.rfind("refl:", 0) == 0) return g;
  return std::to_string(-parse_long(g));
}

GroupWord DihedralAction::sample_element(RngStream& rng) const {
  const long n = (static_cast<long>(rng.below(11)) - 5) * k_;
  return rng.below(2) ? "refl:" + std::to_string(n) : std::to_string(n);
}

Generation DihedralAction::generated_by(const std::vector<GroupWord>& elements) const {
  long g = 0;
  std::optional<long> first_reflection;
  for (const auto& w : elements) {
    if (w.rfind("refl:", 0) == 0) {
      const long n = parse_long(w.substr(5));
      if (first_reflection) g = std::gcd(g, std::abs(n - *first_reflection));
      else first_reflection = n;
    } else {
      g = std::gcd(g, std::abs(parse_long(w)));
    }
  }
  return first_reflection && g == k_ ? Generation::generates : Generation::does_not_generate;
}

// ---------------------------------------------------------------------------

WordAlphabet::WordAlphabet(std::string letters, std::string inverses)
    : letters_(std::move(letters)), inverses_(std::move(inverses)) {
  if (letters_.size() != inverses_.size() || letters_.empty()) throw InvalidAction("malformed alphabet");
  for (char c : letters_)
    if (c == 'e') throw InvalidAction("'e' is reserved for the identity");
  for (std::size_t i = 0; i < letters_.size(); ++i)
    if (inverse(inverses_[i]) != letters_[i]) throw InvalidAction("letter inversion is not an involution");
}

WordAlphabet WordAlphabet::free_group(int rank) {
  static const std::string lower = "abcdfghijk";
  if (rank < 1 || rank > static_cast<int>(lower.size())) throw InvalidAction("unsupported free group rank");
  std::string letters, inverses;
  for (int i = 0; i < rank; ++i) {
    const char c = lower[static_cast<std::size_t>(i)];
    const char u = static_cast<char>(c - 'a' + 'A');
    letters += {c, u};
    inverses += {u, c};
  }
  return WordAlphabet(letters, inverses);
}

WordAlphabet WordAlphabet::involutions(int count) {
  static const std::string symbols = "0123456789abcdfghijklmnopqrstuvwxyz";
  if (count < 2 || count > static_cast<int>(symbols.size())) throw InvalidAction("unsupported number of involutions");
  const std::string letters = symbols.substr(0, static_cast<std::size_t>(count));
  return WordAlphabet(letters, letters);
}

char WordAlphabet::inverse(char c) const {
  const auto pos = letters_.find(c);
  if (pos == std::string::npos) throw InvalidAction(std::string("unknown letter '") + c + "'");
  return inverses_[pos];
}

bool WordAlphabet::valid(const std::string& word) const {
  const std::string w = strip(word);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (letters_.find(w[i]) == std::string::npos) return false;
    if (i > 0 && inverse(w[i]) == w[i - 1]) return false;
  }
  return true;
}

std::string WordAlphabet::multiply(const std::string& u, const std::string& v) const {
  std::string out = strip(u);
  for (char c : strip(v)) {
    if (!out.empty() && inverse(c) == out.back()) out.pop_back();
    else {
      inverse(c);
      out.push_back(c);
    }
  }
  return dress(out);
}

std::string WordAlphabet::invert(const std::string& w) const {
  std::string out;
  const std::string s = strip(w);
  for (auto it = s.rbegin(); it != s.rend(); ++it) out.push_back(inverse(*it));
  return dress(out);
}

CayleyTree::CayleyTree(WordAlphabet alphabet, std::string family_name)
    : alphabet_(std::move(alphabet)), family_(std::move(family_name)) {}

CayleyTree CayleyTree::regular(int q) {
  if (q < 1) throw InvalidAction("tree branching must be at least 1");
  return CayleyTree(WordAlphabet::involutions(q + 1), "regular-tree");
}

std::vector<std::pair<NodeKey, Rational>> CayleyTree::neighbors(const NodeKey& x) const {
  if (!alphabet_.valid(x)) throw InvalidAction("not a reduced word: " + x);
  std::vector<std::pair<NodeKey, Rational>> out;
  for (char c : alphabet_.letters()) out.emplace_back(alphabet_.multiply(x, std::string(1, c)), Rational(1));
  return out;
}

std::optional<std::uint64_t> CayleyTree::known_distance(const NodeKey& x, const NodeKey& y) const {
  return WordAlphabet::strip(alphabet_.multiply(alphabet_.invert(x), y)).size();
}

std::vector<GroupWord> LeftMultiplication::elements_to(const NodeKey& from, const NodeKey& to) const {
  return {alphabet_.multiply(to, alphabet_.invert(from))};
}

GroupWord LeftMultiplication::sample_element(RngStream& rng) const {
  std::string w = "e";
  const auto len = rng.below(6);
  for (std::uint64_t i = 0; i < len; ++i)
    w = alphabet_.multiply(w, std::string(1, alphabet_.letters()[rng.below(alphabet_.letters().size())]));
  return w;
}

Generation LeftMultiplication::generated_by(const std::vector<GroupWord>& elements) const {
  const std::set<GroupWord> have(elements.begin(), elements.end());
  for (char c : alphabet_.letters()) {
    const std::string s(1, c), inv(1, alphabet_.inverse(c));
    if (!have.count(s) && !have.count(inv)) return Generation::unchecked;
  }
  return Generation::generates;
}

// ---------------------------------------------------------------------------

Covolume covolume(const netwalk::LazyNetwork& net, const GroupAction& act) {
  Covolume out;
  const auto domain = act.fundamental_domain();
  if (!domain) {
    out.verdict = "unknown";
    return out;
  }
  out.domain = *domain;
  for (const auto& x : *domain) out.value += net.total_conductance(x) / Rational(act.stabilizer_order(x));
  out.verdict = "finite";
  return out;
}

EdgeCheck conductance_check(const netwalk::FiniteNetwork& net, const PermutationAction& act) {
  EdgeCheck out;
  out.label = "exact";
  for (const auto& g : act.generators())
    for (std::size_t x = 0; x < net.size(); ++x)
      for (const auto& [y, a] : net.neighbors(x)) {
        ++out.checked;
        if (net.conductance(g[x], g[y]) != a) ++out.violations;
      }
  return out;
}

EdgeCheck conductance_check(const netwalk::LazyNetwork& net, const GroupAction& act, std::uint64_t samples,
                            RngStream& rng) {
  EdgeCheck out;
  out.label = "sampled invariant";
  for (std::uint64_t s = 0; s < samples; ++s) {
    NodeKey x = net.origin();
    const auto walk = rng.below(9);
    for (std::uint64_t i = 0; i < walk; ++i) {
      const auto nb = net.neighbors(x);
      x = nb[rng.below(nb.size())].first;
    }
    const auto nb = net.neighbors(x);
    const auto& [y, a] = nb[rng.below(nb.size())];
    const GroupWord g = act.sample_element(rng);
    const NodeKey gx = act.apply(g, x), gy = act.apply(g, y);
    Rational image = 0;
    for (const auto& [z, b] : net.neighbors(gx))
      if (z == gy) image += b;
    Rational original = 0;
    for (const auto& [z, b] : nb)
      if (z == y) original += b;
    ++out.checked;
    if (image != original) ++out.violations;
  }
  return out;
}

// ---------------------------------------------------------------------------

std::size_t QuotientNetwork::index_of(const NodeKey& rep) const {
  auto it = index_.find(rep);
  if (it == index_.end()) throw InvalidAction("not an orbit representative: " + rep);
  return it->second;
}

std::size_t QuotientNetwork::project(const NodeKey& x) const { return index_of(act_->canonical(x)); }

Rational QuotientNetwork::symmetry_defect() const {
  Rational worst = 0;
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = 0; j < size(); ++j) worst = std::max<Rational>(worst, abs(a_[i][j] - a_[j][i]));
  return worst;
}

Rational QuotientNetwork::measure_defect() const {
  Rational worst = 0;
  for (std::size_t i = 0; i < size(); ++i)
    worst = std::max<Rational>(worst, abs(m_[i] - lifted_m_[i] / Rational(stab_[i])));
  return worst;
}

netwalk::FiniteNetwork QuotientNetwork::network() const {
  netwalk::FiniteNetwork net(reps_);
  for (std::size_t i = 0; i < size(); ++i)
    for (std::size_t j = i; j < size(); ++j) net.add_edge(i, j, a_[i][j]);
  return net;
}

netwalk::MarkovKernel QuotientNetwork::kernel() const { return netwalk::kernel_from_network(network()); }

QuotientNetwork quotient_network(const netwalk::LazyNetwork& net, const GroupAction& act) {
  const auto domain = act.fundamental_domain();
  if (!domain) throw InvalidAction("quotient needs a finite fundamental domain");
  QuotientNetwork q;
  q.act_ = &act;
  q.reps_ = *domain;
  for (std::size_t i = 0; i < q.reps_.size(); ++i) {
    if (act.canonical(q.reps_[i]) != q.reps_[i]) throw InvalidAction("domain element is not canonical");
    q.index_[q.reps_[i]] = i;
  }
  const std::size_t n = q.reps_.size();
  q.a_.assign(n, RationalVector(n, 0));
  q.m_.assign(n, 0);
  q.lifted_m_.assign(n, 0);
  q.stab_.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeKey& x = q.reps_[i];
    q.stab_[i] = act.stabilizer_order(x);
    const Rational stab(q.stab_[i]);
    for (const auto& [y, a] : net.neighbors(x)) {
      q.a_[i][q.index_of(act.canonical(y))] += a / stab;
      q.lifted_m_[i] += a;
    }
    for (std::size_t j = 0; j < n; ++j) q.m_[i] += q.a_[i][j];
  }
  if (q.symmetry_defect() != 0) throw InvalidAction("non-conductance-preserving action detected");
  return q;
}

Rational second_lift_defect(const netwalk::LazyNetwork& net, const GroupAction& act, const QuotientNetwork& qnet,
                            unsigned trials, RngStream& rng) {
  Rational worst = 0;
  for (unsigned t = 0; t < trials; ++t) {
    const GroupWord g = act.sample_element(rng);
    for (std::size_t i = 0; i < qnet.size(); ++i) {
      const NodeKey lift = act.apply(g, qnet.representatives()[i]);
      const Rational stab(act.stabilizer_order(lift));
      RationalVector row(qnet.size(), 0);
      for (const auto& [y, a] : net.neighbors(lift)) row[qnet.project(y)] += a / stab;
      for (std::size_t j = 0; j < qnet.size(); ++j)
        worst = std::max<Rational>(worst, abs(row[j] - qnet.conductance()[i][j]));
    }
  }
  return worst;
}

LawCheck quotient_law_check(const netwalk::LazyNetwork& net, const GroupAction& act, const QuotientNetwork& qnet,
                            const NodeKey& start, unsigned steps, std::uint64_t samples, std::uint64_t seed,
                            unsigned workers) {
  (void)act;
  const auto kernel = qnet.kernel();
  const auto law = kernel.distribution_after(qnet.project(start), steps);
  LawCheck out;
  out.samples = samples;
  for (const auto& p : law) out.expected.push_back(p.get_d());
  const netwalk::NetworkKernel walk(net);
  const std::size_t cells = qnet.size();
  auto parts = run_chunks<std::vector<std::uint64_t>>(
      samples, seed, workers, [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
        std::vector<std::uint64_t> hist(cells, 0);
        for (std::uint64_t s = 0; s < count; ++s) {
          NodeKey x = start;
          for (unsigned i = 0; i < steps; ++i) x = walk.sample_next(x, rng);
          ++hist[qnet.project(x)];
        }
        return hist;
      });
  out.observed.assign(cells, 0);
  for (const auto& h : parts)
    for (std::size_t i = 0; i < cells; ++i) out.observed[i] += h[i];
  out.chi = stats::goodness_of_fit(out.observed, out.expected);
  return out;
}

ReturnTimes return_time_stats(const QuotientNetwork& qnet, std::size_t x, std::uint64_t samples, std::uint64_t seed,
                              unsigned workers, std::optional<double> c, std::uint64_t horizon) {
  if (x >= qnet.size()) throw InvalidAction("return-time state out of range");
  const auto kernel = qnet.kernel();
  if (!netwalk::is_irreducible(kernel)) throw InvalidAction("return times need an irreducible quotient");
  struct Partial {
    std::map<std::uint64_t, std::uint64_t> hist;
    std::uint64_t unresolved = 0;
  };
  auto parts = run_chunks<Partial>(samples, seed, workers, [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
    Partial p;
    for (std::uint64_t s = 0; s < count; ++s) {
      std::size_t y = x;
      std::uint64_t t = 0;
      do {
        y = kernel.sample_next(y, rng);
        ++t;
      } while (y != x && t < horizon);
      if (y == x) ++p.hist[t];
      else ++p.unresolved;
    }
    return p;
  });
  ReturnTimes out;
  for (const auto& p : parts) {
    for (const auto& [t, n] : p.hist) out.histogram[t] += n;
    out.unresolved += p.unresolved;
  }
  Rational total = 0;
  for (const auto& m : qnet.total_conductance()) total += m;
  out.exact_mean = total / qnet.total_conductance()[x];

  std::uint64_t resolved = 0;
  double sum = 0.0, sumsq = 0.0;
  for (const auto& [t, n] : out.histogram) {
    resolved += n;
    sum += static_cast<double>(t) * static_cast<double>(n);
    sumsq += static_cast<double>(t) * static_cast<double>(t) * static_cast<double>(n);
  }
  out.mean.samples = resolved;
  if (resolved > 0) {
    const double nr = static_cast<double>(resolved);
    out.mean.mean = sum / nr;
    if (resolved > 1) {
      const double var = std::max(0.0, (sumsq - sum * sum / nr) / (nr - 1.0));
      out.mean.standard_error = std::sqrt(var / nr);
    }
  }
  if (c && resolved > 0) {
    double acc = 0.0;
    for (const auto& [t, n] : out.histogram) acc += std::exp(*c * static_cast<double>(t)) * static_cast<double>(n);
    out.exp_moment = acc / static_cast<double>(resolved);
  }
  // log P(T >= n) at the points where the empirical tail is informative.
  std::vector<double> xs, ys;
  std::uint64_t at_least = resolved;
  for (const auto& [t, n] : out.histogram) {
    if (at_least >= 20 && at_least < resolved) {
      xs.push_back(static_cast<double>(t));
      ys.push_back(std::log(static_cast<double>(at_least) / static_cast<double>(resolved)));
    }
    at_least -= n;
  }
  if (xs.size() >= 2) {
    out.tail_slope = stats::least_squares_slope(xs, ys);
    if (c && *c >= -*out.tail_slope) out.exp_moment_divergent = true;
  }
  return out;
}

}  // namespace chamberwalk::action
