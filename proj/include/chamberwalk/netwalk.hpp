#pragma once

// Networks (graphs with symmetric conductances), Markov kernels, exact
// solvers on finite chains and the trajectory engine.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chamberwalk/rational.hpp"
#include "chamberwalk/rng.hpp"
#include "json.hpp"

namespace chamberwalk::netwalk {

/// Canonical byte encoding of a node of a lazy network.
using NodeKey = std::string;

struct InvalidNetwork : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Finite network with exact conductances. a(x,x) is a self-loop counted once in m(x).
class FiniteNetwork {
 public:
  FiniteNetwork() = default;
  explicit FiniteNetwork(std::size_t n);
  explicit FiniteNetwork(std::vector<std::string> labels);

  /// Adds conductance to the unordered pair {u, v}.
  void add_edge(std::size_t u, std::size_t v, const Rational& a);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t x) const { return labels_.at(x); }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<std::size_t> index_of(const std::string& label) const;

  const std::map<std::size_t, Rational>& neighbors(std::size_t x) const { return adj_.at(x); }
  Rational conductance(std::size_t x, std::size_t y) const;
  Rational total_conductance(std::size_t x) const;

  static FiniteNetwork from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

 private:
  std::vector<std::string> labels_;
  std::vector<std::map<std::size_t, Rational>> adj_;
};

/// Transition matrix on {0..n-1} with exact rows.
class MarkovKernel {
 public:
  MarkovKernel() = default;
  /// Rows must sum to exactly one.
  static MarkovKernel from_rows(std::vector<std::map<std::size_t, Rational>> rows);
  static MarkovKernel from_dense(const RationalMatrix& p);

  std::size_t size() const { return rows_.size(); }
  const std::map<std::size_t, Rational>& row(std::size_t x) const { return rows_.at(x); }
  Rational prob(std::size_t x, std::size_t y) const;
  RationalMatrix dense() const;
  /// Row of P^k started from x.
  RationalVector distribution_after(std::size_t x, unsigned k) const;

  /// Set by kernel_from_network; m is then a stationary measure.
  bool reversible() const { return !measure_.empty(); }
  const RationalVector& reversing_measure() const { return measure_; }
  /// p(x,y) = p(y,x) for all pairs.
  bool symmetric() const;
  /// max over pairs of |m(x)p(x,y) - m(y)p(y,x)|.
  Rational reversibility_defect(const RationalVector& m) const;

  std::size_t sample_next(std::size_t x, RngStream& rng) const;

 private:
  friend MarkovKernel kernel_from_network(const FiniteNetwork& net);
  void build_sampler();

  std::vector<std::map<std::size_t, Rational>> rows_;
  RationalVector measure_;
  std::vector<std::vector<std::pair<double, std::size_t>>> cumulative_;
};

/// p(x,y) = a(x,y)/m(x); the kernel is flagged reversible with measure m.
MarkovKernel kernel_from_network(const FiniteNetwork& net);

/// Lazily explored network, used for infinite graphs.
class LazyNetwork {
 public:
  virtual ~LazyNetwork() = default;
  virtual std::string family() const = 0;
  virtual NodeKey origin() const = 0;
  virtual std::vector<std::pair<NodeKey, Rational>> neighbors(const NodeKey& x) const = 0;
  /// Closed-form graph distance for families that have one.
  virtual std::optional<std::uint64_t> known_distance(const NodeKey&, const NodeKey&) const { return std::nullopt; }
  Rational total_conductance(const NodeKey& x) const;
};

/// Exposes a finite network through the lazy interface (keys are labels).
class FiniteAsLazy final : public LazyNetwork {
 public:
  explicit FiniteAsLazy(const FiniteNetwork& net) : net_(&net) {}
  std::string family() const override { return "finite"; }
  NodeKey origin() const override { return net_->label(0); }
  std::vector<std::pair<NodeKey, Rational>> neighbors(const NodeKey& x) const override;

 private:
  const FiniteNetwork* net_;
};

/// Any kernel that can draw the next state of a lazy walk.
class LazyKernel {
 public:
  virtual ~LazyKernel() = default;
  virtual NodeKey sample_next(const NodeKey& x, RngStream& rng) const = 0;
};

/// The reversible kernel p = a/m of a lazy network.
class NetworkKernel final : public LazyKernel {
 public:
  explicit NetworkKernel(const LazyNetwork& net) : net_(&net) {}
  NodeKey sample_next(const NodeKey& x, RngStream& rng) const override;

 private:
  const LazyNetwork* net_;
};

template <class Node>
struct Trajectory {
  Node start{};
  std::vector<Node> nodes;  // Z_0 .. Z_T
  std::uint64_t master_seed = 0;
  std::uint64_t stream = 0;
};

Trajectory<std::size_t> simulate(const MarkovKernel& k, std::size_t start, std::uint64_t steps, RngStream& rng);
Trajectory<NodeKey> simulate(const LazyKernel& k, const NodeKey& start, std::uint64_t steps, RngStream& rng);

/// max_x |sum_y p(x,y) f(y) - f(x)|.
Rational harmonic_defect(const MarkovKernel& k, const RationalVector& f);
double harmonic_defect(const MarkovKernel& k, const std::vector<double>& f);

/// Absorption probabilities into `absorbing`, for every start state.
struct Absorption {
  std::vector<std::size_t> targets;      // absorbing states, increasing
  RationalMatrix exact;                  // [state][target index]; empty on the float path
  std::vector<std::vector<double>> approx;  // always filled
  bool exact_path = true;
  double residual = 0.0;
  /// Transient states from which the absorbing set cannot be reached.
  std::vector<std::size_t> unreachable;
  /// Some transient state is absorbed with probability < 1.
  bool substochastic = false;
};

/// Exact rational elimination when the chain has at most `exact_limit`
/// states, otherwise double precision with iterative refinement.
Absorption absorption(const MarkovKernel& k, const std::set<std::size_t>& absorbing, std::size_t exact_limit = 200);

struct HittingDistribution {
  std::vector<std::size_t> targets;
  RationalVector exact;
  std::vector<double> approx;
  bool exact_path = true;
  bool substochastic = false;
};

HittingDistribution hitting_distribution(const MarkovKernel& k, const std::set<std::size_t>& absorbing,
                                         std::size_t start);

/// Strong connectivity of the positive-probability digraph.
bool is_irreducible(const MarkovKernel& k);

/// max_y |sum_x nu(x) p(x,y) - nu(y)|.
Rational check_stationary(const MarkovKernel& k, const RationalVector& nu);

/// Graph distance on a lazy network: the family's closed form when it has
/// one, otherwise breadth-first search up to `max_depth`.
std::optional<unsigned> graph_distance(const LazyNetwork& net, const NodeKey& from, const NodeKey& to,
                                       unsigned max_depth);

/// Occupation counts of a trajectory as CSV rows "node,count,frequency".
std::string occupation_csv(const Trajectory<std::size_t>& t, const FiniteNetwork* labels = nullptr);

}  // namespace chamberwalk::netwalk
