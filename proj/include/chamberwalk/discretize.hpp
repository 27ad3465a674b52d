#pragma once

// Induced walks on subsets (stopping times), harmonic-function transfer and
// the discretization of a walk to a probability measure on a lattice.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chamberwalk/action.hpp"
#include "chamberwalk/netwalk.hpp"
#include "chamberwalk/rational.hpp"
#include "json.hpp"

namespace chamberwalk::discretize {

template <class Node>
struct StoppingTimes {
  std::vector<std::uint64_t> tau;  // tau_0 < tau_1 < ...
  std::vector<Node> states;        // S_k = Z_{tau_k}
  /// Fewer than the requested visits were found.
  bool truncated = false;
};

/// tau_{-1} = -1, tau_{k+1} = inf{j > tau_k : Z_j in Y}. Collects at most
/// `max_visits` visits (all of them when zero).
template <class Node>
StoppingTimes<Node> stopping_times(const std::vector<Node>& path, const std::function<bool(const Node&)>& in_y,
                                   std::size_t max_visits = 0) {
  StoppingTimes<Node> out;
  for (std::uint64_t j = 0; j < path.size(); ++j) {
    if (max_visits != 0 && out.tau.size() == max_visits) break;
    if (in_y(path[j])) {
      out.tau.push_back(j);
      out.states.push_back(path[j]);
    }
  }
  out.truncated = max_visits != 0 && out.tau.size() < max_visits;
  return out;
}

struct InducedKernel {
  std::vector<std::size_t> subset;  // Y in increasing order; kernel indices refer to positions here
  netwalk::MarkovKernel kernel;
  std::string provenance;  // "exact-solve"
};

/// q(x, y) = P_x(Z_{tau_1} = y) for x, y in Y, by first-step decomposition
/// and exact absorption solves. Throws when Y is empty or not reached with
/// probability one.
InducedKernel induced_kernel_exact(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y);

struct InducedRowEstimate {
  std::vector<std::size_t> subset;
  std::vector<std::uint64_t> counts;  // landing counts per element of Y
  std::uint64_t unresolved = 0;       // no return within the horizon
  std::uint64_t samples = 0;
};

/// Monte Carlo estimate of the row q(x, .) with an explicit unresolved bucket.
InducedRowEstimate induced_row_mc(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y, std::size_t x,
                                  std::uint64_t samples, std::uint64_t seed, unsigned workers,
                                  std::uint64_t horizon = 1000000);

struct TransferReport {
  RationalVector extension;  // h(x) = sum_y alpha(x, y) f(y), alpha(x, y) = P_x(S_0 = y)
  Rational defect_on_y;      // max over Y of |h - f|
  Rational defect_off_y;     // max over X \ Y of |P h - h|
  Rational transfer_defect;  // max over Y of |(P h)(x) - (Q f)(x)|
  bool f_q_harmonic = false;
  Rational defect_everywhere;  // max over X of |P h - h|; zero whenever f is Q-harmonic
};

/// f is indexed like InducedKernel::subset (increasing Y).
TransferReport harmonic_transfer_check(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y,
                                       const RationalVector& f);

// ---------------------------------------------------------------------------

struct LatticeEntry {
  action::GroupWord element;
  double prob = 0.0;
  std::optional<Rational> exact;
};

struct LatticeMeasure {
  netwalk::NodeKey base;
  std::uint64_t stabilizer_order = 1;
  std::vector<LatticeEntry> entries;  // sorted by element word
  /// "exact-solve", "transitive-fast-path" or "monte-carlo".
  std::string provenance;
  bool symmetry_checked = false;
  bool symmetric = false;
  action::Generation admissibility = action::Generation::unchecked;
  std::uint64_t samples = 0;
  std::uint64_t unresolved = 0;

  std::optional<LatticeEntry> find(const action::GroupWord& g) const;
  double total_mass() const;
  nlohmann::json to_json() const;
};

struct DiscretizeOptions {
  /// Largest excursion region (nodes off the orbit) handled by a solve.
  std::size_t region_limit = 5000;
  bool allow_fast_path = true;
  std::uint64_t mc_samples = 100000;
  std::uint64_t horizon = 1000000;
  std::uint64_t seed = 0;
  unsigned workers = 1;
};

/// mu(g) = q(o, g o) / |Gamma_o| for the induced walk on the orbit of o.
LatticeMeasure discretize_lattice(const netwalk::LazyNetwork& net, const action::GroupAction& act,
                                  const netwalk::NodeKey& o, const DiscretizeOptions& options = {});

struct Moment {
  double value = 0.0;
  std::optional<Rational> exact;  // first moment of an exact measure
};

/// sum_g d(o, g o) mu(g) for kind "first"; sum_g exp(c d(o, g o)) mu(g) for "exponential".
Moment moment(const LatticeMeasure& mu, const netwalk::LazyNetwork& net, const action::GroupAction& act,
              const std::string& kind, double c = 0.0);

}  // namespace chamberwalk::discretize
