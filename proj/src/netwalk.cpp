#include "chamberwalk/netwalk.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "chamberwalk/linalg.hpp"

namespace chamberwalk::netwalk {

namespace {

std::string label_of(const nlohmann::json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

Rational conductance_of(const nlohmann::json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return parse_rational(j.dump());
  throw InvalidNetwork("edge conductance must be a number or a rational string");
}

std::size_t sample_cumulative(const std::vector<std::pair<double, std::size_t>>& cum, RngStream& rng) {
  const double u = rng.uniform() * cum.back().first;
  auto it = std::upper_bound(cum.begin(), cum.end(), u,
                             [](double v, const std::pair<double, std::size_t>& e) { return v < e.first; });
  if (it == cum.end()) --it;
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------

FiniteNetwork::FiniteNetwork(std::size_t n) : adj_(n) {
  labels_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) labels_.push_back(std::to_string(i));
}

FiniteNetwork::FiniteNetwork(std::vector<std::string> labels) : labels_(std::move(labels)), adj_(labels_.size()) {
  std::set<std::string> seen(labels_.begin(), labels_.end());
  if (seen.size() != labels_.size()) throw InvalidNetwork("duplicate node labels");
}

void FiniteNetwork::add_edge(std::size_t u, std::size_t v, const Rational& a) {
  if (u >= size() || v >= size()) throw InvalidNetwork("edge endpoint out of range");
  if (sgn(a) < 0) throw InvalidNetwork("conductance must be non-negative");
  if (sgn(a) == 0) return;
  adj_[u][v] += a;
  if (u != v) adj_[v][u] += a;
}

std::optional<std::size_t> FiniteNetwork::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels_.begin());
}

Rational FiniteNetwork::conductance(std::size_t x, std::size_t y) const {
  const auto& row = adj_.at(x);
  auto it = row.find(y);
  return it == row.end() ? Rational(0) : it->second;
}

Rational FiniteNetwork::total_conductance(std::size_t x) const {
  Rational m = 0;
  for (const auto& [y, a] : adj_.at(x)) m += a;
  return m;
}

FiniteNetwork FiniteNetwork::from_json(const nlohmann::json& doc) {
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) throw InvalidNetwork("network JSON needs a nodes array");
  std::vector<std::string> labels;
  for (const auto& n : doc.at("nodes")) labels.push_back(label_of(n));
  FiniteNetwork net(std::move(labels));
  for (const auto& e : doc.value("edges", nlohmann::json::array())) {
    if (!e.is_array() || e.size() != 3) throw InvalidNetwork("edges must be [u, v, a] triples");
    const auto u = net.index_of(label_of(e[0]));
    const auto v = net.index_of(label_of(e[1]));
    if (!u || !v) throw InvalidNetwork("edge refers to an unknown node");
    net.add_edge(*u, *v, conductance_of(e[2]));
  }
  return net;
}

nlohmann::json FiniteNetwork::to_json() const {
  nlohmann::json doc;
  doc["nodes"] = labels_;
  auto edges = nlohmann::json::array();
  for (std::size_t u = 0; u < size(); ++u)
    for (const auto& [v, a] : adj_[u]) {
      if (v < u) continue;
      nlohmann::json w = a.get_den() == 1 ? nlohmann::json(a.get_num().get_si()) : nlohmann::json(a.get_str());
      edges.push_back({labels_[u], labels_[v], w});
    }
  doc["edges"] = edges;
  return doc;
}

// ---------------------------------------------------------------------------

MarkovKernel MarkovKernel::from_rows(std::vector<std::map<std::size_t, Rational>> rows) {
  MarkovKernel k;
  const std::size_t n = rows.size();
  for (std::size_t x = 0; x < n; ++x) {
    Rational total = 0;
    for (auto it = rows[x].begin(); it != rows[x].end();) {
      if (it->first >= n) throw InvalidNetwork("kernel row refers to an unknown state");
      if (sgn(it->second) < 0) throw InvalidNetwork("negative transition probability");
      total += it->second;
      it = sgn(it->second) == 0 ? rows[x].erase(it) : std::next(it);
    }
    if (total != 1) throw InvalidNetwork("kernel row " + std::to_string(x) + " sums to " + total.get_str());
  }
  k.rows_ = std::move(rows);
  k.build_sampler();
  return k;
}

MarkovKernel MarkovKernel::from_dense(const RationalMatrix& p) {
  std::vector<std::map<std::size_t, Rational>> rows(p.size());
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = 0; y < p[x].size(); ++y)
      if (sgn(p[x][y]) != 0) rows[x][y] = p[x][y];
  return from_rows(std::move(rows));
}

void MarkovKernel::build_sampler() {
  cumulative_.assign(rows_.size(), {});
  for (std::size_t x = 0; x < rows_.size(); ++x) {
    double acc = 0.0;
    for (const auto& [y, p] : rows_[x]) {
      acc += p.get_d();
      cumulative_[x].emplace_back(acc, y);
    }
  }
}

Rational MarkovKernel::prob(std::size_t x, std::size_t y) const {
  const auto& r = rows_.at(x);
  auto it = r.find(y);
  return it == r.end() ? Rational(0) : it->second;
}

RationalMatrix MarkovKernel::dense() const {
  RationalMatrix p(size(), RationalVector(size(), 0));
  for (std::size_t x = 0; x < size(); ++x)
    for (const auto& [y, v] : rows_[x]) p[x][y] = v;
  return p;
}

RationalVector MarkovKernel::distribution_after(std::size_t x, unsigned k) const {
  RationalVector dist(size(), 0);
  dist.at(x) = 1;
  for (unsigned step = 0; step < k; ++step) {
    RationalVector next(size(), 0);
    for (std::size_t u = 0; u < size(); ++u) {
      if (sgn(dist[u]) == 0) continue;
      for (const auto& [v, p] : rows_[u]) next[v] += dist[u] * p;
    }
    dist = std::move(next);
  }
  return dist;
}

bool MarkovKernel::symmetric() const {
  for (std::size_t x = 0; x < size(); ++x)
    for (const auto& [y, p] : rows_[x])
      if (prob(y, x) != p) return false;
  return true;
}

Rational MarkovKernel::reversibility_defect(const RationalVector& m) const {
  Rational worst = 0;
  for (std::size_t x = 0; x < size(); ++x)
    for (const auto& [y, p] : rows_[x]) {
      const Rational d = abs(m[x] * p - m[y] * prob(y, x));
      if (d > worst) worst = d;
    }
  return worst;
}

std::size_t MarkovKernel::sample_next(std::size_t x, RngStream& rng) const {
  return sample_cumulative(cumulative_.at(x), rng);
}

MarkovKernel kernel_from_network(const FiniteNetwork& net) {
  std::vector<std::map<std::size_t, Rational>> rows(net.size());
  RationalVector m(net.size());
  for (std::size_t x = 0; x < net.size(); ++x) {
    m[x] = net.total_conductance(x);
    if (sgn(m[x]) == 0) throw InvalidNetwork("node " + net.label(x) + " has zero total conductance");
    for (const auto& [y, a] : net.neighbors(x)) rows[x][y] = a / m[x];
  }
  MarkovKernel k = MarkovKernel::from_rows(std::move(rows));
  k.measure_ = std::move(m);
  return k;
}

// ---------------------------------------------------------------------------

Rational LazyNetwork::total_conductance(const NodeKey& x) const {
  Rational m = 0;
  for (const auto& [y, a] : neighbors(x)) m += a;
  return m;
}

std::vector<std::pair<NodeKey, Rational>> FiniteAsLazy::neighbors(const NodeKey& x) const {
  const auto idx = net_->index_of(x);
  if (!idx) throw InvalidNetwork("unknown node " + x);
  std::vector<std::pair<NodeKey, Rational>> out;
  for (const auto& [y, a] : net_->neighbors(*idx)) out.emplace_back(net_->label(y), a);
  return out;
}

NodeKey NetworkKernel::sample_next(const NodeKey& x, RngStream& rng) const {
  const auto nbrs = net_->neighbors(x);
  if (nbrs.empty()) throw InvalidNetwork("lazy network oracle returned no neighbours for " + x);
  std::vector<std::pair<double, std::size_t>> cum;
  double acc = 0.0;
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    acc += nbrs[i].second.get_d();
    cum.emplace_back(acc, i);
  }
  return nbrs[sample_cumulative(cum, rng)].first;
}

Trajectory<std::size_t> simulate(const MarkovKernel& k, std::size_t start, std::uint64_t steps, RngStream& rng) {
  Trajectory<std::size_t> t{start, {start}, rng.master_seed(), rng.stream()};
  t.nodes.reserve(steps + 1);
  std::size_t x = start;
  for (std::uint64_t i = 0; i < steps; ++i) {
    x = k.sample_next(x, rng);
    t.nodes.push_back(x);
  }
  return t;
}

Trajectory<NodeKey> simulate(const LazyKernel& k, const NodeKey& start, std::uint64_t steps, RngStream& rng) {
  Trajectory<NodeKey> t{start, {start}, rng.master_seed(), rng.stream()};
  NodeKey x = start;
  for (std::uint64_t i = 0; i < steps; ++i) {
    x = k.sample_next(x, rng);
    t.nodes.push_back(x);
  }
  return t;
}

// ---------------------------------------------------------------------------

Rational harmonic_defect(const MarkovKernel& k, const RationalVector& f) {
  Rational worst = 0;
  for (std::size_t x = 0; x < k.size(); ++x) {
    Rational pf = 0;
    for (const auto& [y, p] : k.row(x)) pf += p * f.at(y);
    const Rational d = abs(pf - f.at(x));
    if (d > worst) worst = d;
  }
  return worst;
}

double harmonic_defect(const MarkovKernel& k, const std::vector<double>& f) {
  double worst = 0.0;
  for (std::size_t x = 0; x < k.size(); ++x) {
    double pf = 0.0;
    for (const auto& [y, p] : k.row(x)) pf += p.get_d() * f.at(y);
    worst = std::max(worst, std::fabs(pf - f.at(x)));
  }
  return worst;
}

Absorption absorption(const MarkovKernel& k, const std::set<std::size_t>& absorbing, std::size_t exact_limit) {
  const std::size_t n = k.size();
  Absorption out;
  out.targets.assign(absorbing.begin(), absorbing.end());
  for (auto a : out.targets)
    if (a >= n) throw std::invalid_argument("absorbing state out of range");
  std::vector<long> target_index(n, -1);
  for (std::size_t i = 0; i < out.targets.size(); ++i) target_index[out.targets[i]] = static_cast<long>(i);

  // States that can reach the absorbing set: reverse search.
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t x = 0; x < n; ++x)
    for (const auto& [y, p] : k.row(x)) preds[y].push_back(x);
  std::vector<char> reaches(n, 0);
  std::deque<std::size_t> queue(out.targets.begin(), out.targets.end());
  for (auto a : out.targets) reaches[a] = 1;
  while (!queue.empty()) {
    const std::size_t y = queue.front();
    queue.pop_front();
    for (auto x : preds[y])
      if (!reaches[x] && target_index[x] < 0) {
        reaches[x] = 1;
        queue.push_back(x);
      }
  }
  std::vector<std::size_t> good;
  std::vector<long> good_index(n, -1);
  for (std::size_t x = 0; x < n; ++x) {
    if (target_index[x] >= 0) continue;
    if (reaches[x]) {
      good_index[x] = static_cast<long>(good.size());
      good.push_back(x);
    } else {
      out.unreachable.push_back(x);
    }
  }

  const std::size_t g = good.size(), t = out.targets.size();
  out.exact_path = n <= exact_limit;
  out.approx.assign(n, std::vector<double>(t, 0.0));
  if (out.exact_path) {
    out.exact.assign(n, RationalVector(t, 0));
    RationalMatrix a(g, RationalVector(g, 0)), b(g, RationalVector(t, 0));
    for (std::size_t i = 0; i < g; ++i) {
      a[i][i] += 1;
      for (const auto& [y, p] : k.row(good[i])) {
        if (good_index[y] >= 0) a[i][static_cast<std::size_t>(good_index[y])] -= p;
        if (target_index[y] >= 0) b[i][static_cast<std::size_t>(target_index[y])] += p;
      }
    }
    const RationalMatrix h = g == 0 ? RationalMatrix{} : linalg::solve_exact(a, b);
    for (std::size_t i = 0; i < g; ++i) out.exact[good[i]] = h[i];
    for (std::size_t i = 0; i < t; ++i) out.exact[out.targets[i]][i] = 1;
    for (std::size_t x = 0; x < n; ++x) {
      Rational total = 0;
      for (std::size_t j = 0; j < t; ++j) {
        out.approx[x][j] = out.exact[x][j].get_d();
        total += out.exact[x][j];
      }
      if (total != 1) out.substochastic = true;
    }
  } else {
    Eigen::MatrixXd a = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(g));
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g), static_cast<Eigen::Index>(t));
    for (std::size_t i = 0; i < g; ++i)
      for (const auto& [y, p] : k.row(good[i])) {
        if (good_index[y] >= 0) a(static_cast<Eigen::Index>(i), good_index[y]) -= p.get_d();
        if (target_index[y] >= 0) b(static_cast<Eigen::Index>(i), target_index[y]) += p.get_d();
      }
    const auto sol = linalg::solve_float(a, b);
    out.residual = sol.residual;
    for (std::size_t i = 0; i < g; ++i)
      for (std::size_t j = 0; j < t; ++j)
        out.approx[good[i]][j] = sol.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    for (std::size_t i = 0; i < t; ++i) out.approx[out.targets[i]][i] = 1.0;
    for (std::size_t x = 0; x < n; ++x) {
      double total = 0.0;
      for (double v : out.approx[x]) total += v;
      if (std::fabs(total - 1.0) > 1e-9) out.substochastic = true;
    }
  }
  if (!out.unreachable.empty()) out.substochastic = true;
  return out;
}

HittingDistribution hitting_distribution(const MarkovKernel& k, const std::set<std::size_t>& absorbing,
                                         std::size_t start) {
  if (start >= k.size()) throw std::invalid_argument("start state out of range");
  const Absorption a = absorption(k, absorbing);
  HittingDistribution h;
  h.targets = a.targets;
  h.exact_path = a.exact_path;
  h.approx = a.approx[start];
  if (a.exact_path) h.exact = a.exact[start];
  double total = 0.0;
  for (double v : h.approx) total += v;
  h.substochastic = a.exact_path ? [&] {
    Rational s = 0;
    for (const auto& v : h.exact) s += v;
    return s != 1;
  }()
                                 : std::fabs(total - 1.0) > 1e-9;
  return h;
}

bool is_irreducible(const MarkovKernel& k) {
  const std::size_t n = k.size();
  if (n == 0) return true;
  auto reach_all = [&](bool reverse) {
    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t x = 0; x < n; ++x)
      for (const auto& [y, p] : k.row(x)) (reverse ? adj[y] : adj[x]).push_back(reverse ? x : y);
    std::vector<char> seen(n, 0);
    std::vector<std::size_t> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const std::size_t x = stack.back();
      stack.pop_back();
      for (auto y : adj[x])
        if (!seen[y]) {
          seen[y] = 1;
          ++count;
          stack.push_back(y);
        }
    }
    return count == n;
  };
  return reach_all(false) && reach_all(true);
}

Rational check_stationary(const MarkovKernel& k, const RationalVector& nu) {
  RationalVector pushed(k.size(), 0);
  for (std::size_t x = 0; x < k.size(); ++x)
    for (const auto& [y, p] : k.row(x)) pushed[y] += nu.at(x) * p;
  Rational worst = 0;
  for (std::size_t y = 0; y < k.size(); ++y) {
    const Rational d = abs(pushed[y] - nu[y]);
    if (d > worst) worst = d;
  }
  return worst;
}

std::optional<unsigned> graph_distance(const LazyNetwork& net, const NodeKey& from, const NodeKey& to,
                                       unsigned max_depth) {
  if (from == to) return 0u;
  if (const auto d = net.known_distance(from, to)) {
    if (*d > max_depth) return std::nullopt;
    return static_cast<unsigned>(*d);
  }
  std::unordered_set<NodeKey> seen{from};
  std::vector<NodeKey> frontier{from};
  for (unsigned d = 1; d <= max_depth && !frontier.empty(); ++d) {
    std::vector<NodeKey> next;
    for (const auto& x : frontier)
      for (const auto& [y, a] : net.neighbors(x)) {
        if (y == to) return d;
        if (seen.insert(y).second) next.push_back(y);
      }
    frontier = std::move(next);
  }
  return std::nullopt;
}

std::string occupation_csv(const Trajectory<std::size_t>& t, const FiniteNetwork* labels) {
  std::map<std::size_t, std::uint64_t> counts;
  for (auto x : t.nodes) ++counts[x];
  std::ostringstream os;
  os << "node,count,frequency\n";
  for (const auto& [x, c] : counts)
    os << (labels ? labels->label(x) : std::to_string(x)) << ',' << c << ','
       << static_cast<double>(c) / static_cast<double>(t.nodes.size()) << '\n';
  return os.str();
}

}  // namespace chamberwalk::netwalk
