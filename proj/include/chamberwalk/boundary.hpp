#pragma once

// Harmonic cylinder measures, their Radon-Nikodym and m-measure identities,
// isotropic walks with boundary-hitting statistics, and the special-subgroup
// detector on spherical A2 buildings.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "chamberwalk/buildings.hpp"
#include "chamberwalk/rational.hpp"
#include "chamberwalk/rng.hpp"
#include "chamberwalk/stats.hpp"
#include "json.hpp"

namespace chamberwalk::boundary {

using buildings::A2Ball;
using buildings::TreeBuilding;
using coxeter::Coweight;
using netwalk::NodeKey;

/// Outcome of an exact check.
struct CheckReport {
  std::string check;
  nlohmann::json inputs = nlohmann::json::object();
  Rational defect = 0;
  std::uint64_t checked = 0;  // number of individual identities evaluated
  bool verdict = false;

  nlohmann::json to_json() const;
};

// ---------------------------------------------------------------------------
// Cylinder measures nu_x(Omega_x(y)) = 1 / N_{sigma(x, y)}.

Rational nu_cylinder(const TreeBuilding& t, const NodeKey& x, const NodeKey& y);
Rational nu_cylinder(const A2Ball& b, std::size_t x, std::size_t y);

/// Sum of nu_x over the cylinders of V_lambda(x).
Rational partition_sum(const TreeBuilding& t, const NodeKey& x, unsigned level);
Rational partition_sum(const A2Ball& b, std::size_t x, const Coweight& lambda);

/// For every y at levels 0 .. max_level - 1, compares nu_x(Omega_x(y)) with
/// the sum over the one-step-deeper y' whose geodesic from x passes y.
CheckReport refinement_check(const TreeBuilding& t, const NodeKey& x, unsigned max_level);
/// Same on the ball at its base vertex, for every lambda with lambda + lambda_i
/// in the box; the deeper level is lambda + lambda_1 and lambda + lambda_2 in turn.
CheckReport refinement_check(const A2Ball& b);

/// nu_y(C) / nu_x(C) = chi(h(x, y; omega)) for every cylinder C = Omega_x(u),
/// u at distance 1 .. max_depth from x, on which h(x, y; .) is constant.
CheckReport radon_nikodym_check(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, unsigned max_depth);

/// m_x(C x C') = chi(beta_x) nu_x(C) nu_x(C') on disjoint cylinder pairs at
/// depths 1 .. max_depth from x, compared with the same sets read from y and
/// with the image configuration under a left multiplication by g.
CheckReport m_measure_checks(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, unsigned max_depth,
                             const std::string& g);

/// m_x of the product cylinder Omega_x(u) x Omega_x(u'); throws
/// std::invalid_argument when the cylinders overlap.
Rational m_measure(const TreeBuilding& t, const NodeKey& x, const NodeKey& u, const NodeKey& u_prime);

// ---------------------------------------------------------------------------
// Isotropic walks.

/// p(x, y) = c_{sigma(x, y)} / N_{sigma(x, y)} for a finitely supported step law c.
class IsotropicKernel {
 public:
  explicit IsotropicKernel(std::map<Coweight, Rational> step_law);
  /// Simple random walk on a tree: c = delta at distance 1.
  static IsotropicKernel tree_srw();
  /// c uniform on {lambda_1, lambda_2}.
  static IsotropicKernel a2_uniform();

  const std::map<Coweight, Rational>& step_law() const { return law_; }
  /// c_lambda = c_{iota(lambda)} for every lambda in the support.
  bool symmetric(const coxeter::WeylGroup& w) const;
  IsotropicKernel symmetrized(const coxeter::WeylGroup& w) const;

  Rational transition(const TreeBuilding& t, const NodeKey& x, const NodeKey& y) const;
  Rational transition(const A2Ball& b, std::size_t x, std::size_t y) const;
  /// Sum of p(x, .) over the ball; 1 when the needed spheres lie in the ball.
  Rational row_sum(const A2Ball& b, std::size_t x) const;

  /// One step of the walk, as a word relative to the start (tree) or a vertex (ball).
  std::string step(const TreeBuilding& t, const std::string& relative, RngStream& rng) const;
  std::size_t step(const A2Ball& b, std::size_t x, RngStream& rng) const;

 private:
  const Coweight& draw(RngStream& rng) const;

  std::map<Coweight, Rational> law_;
  std::vector<Coweight> support_;
  std::vector<double> cumulative_;
};

struct HittingStats {
  std::string model;
  std::string label;  // "statistical" or "statistical, truncation-limited"
  std::vector<std::string> cylinders;
  std::vector<std::uint64_t> counts;
  std::vector<double> expected;  // probabilities under nu_o (conditional on the sigma class for the ball)
  std::uint64_t samples = 0;
  std::uint64_t unresolved = 0;
  stats::ChiSquare chi;
  /// More than 1% of the trajectories did not exit within the horizon.
  bool flagged = false;

  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// Tree walk from the root "e"; each trajectory stops at distance
/// level + margin and is assigned to its ancestor at distance level.
HittingStats boundary_hitting_mc(const TreeBuilding& t, const IsotropicKernel& k, unsigned level,
                                 std::uint64_t samples, std::uint64_t seed, unsigned workers, unsigned margin = 4,
                                 std::uint64_t horizon = 1000000);

/// Ball walk from the base vertex, stopped when sigma(o, Z) leaves the box
/// max(m1, m2) <= level; the trajectory is assigned to its last vertex inside
/// the box. Uniformity is tested within each sigma class of exit vertices.
HittingStats boundary_hitting_mc(const A2Ball& b, const IsotropicKernel& k, int level, std::uint64_t samples,
                                 std::uint64_t seed, unsigned workers, std::uint64_t horizon = 1000000);

// ---------------------------------------------------------------------------
// Special subgroups.

struct SpecialSubgroup {
  std::vector<coxeter::WeylElement> e;  // {w : delta(C, D) = w implies pi(C) = pi(D)}
  std::set<int> j;
  bool verdict = false;          // pi is constant on every J-residue
  bool equals_parabolic = false; // E = W_J
  bool splitting_closed = false; // w = s_i w' reduced, w in E implies s_i, w' in E

  nlohmann::json to_json() const;
};

SpecialSubgroup special_subgroup_detect(const buildings::SphericalA2& s, const std::vector<int>& pi);

/// A labelling constant on J-residues. For J = {1, 2} it is constant; for a
/// singleton it is a non-constant function of the line (J = {1}) or the point
/// (J = {2}); for J empty it is uniform random, resampled until it separates
/// some panel of each type.
std::vector<int> random_labelling(const buildings::SphericalA2& s, const std::set<int>& j, RngStream& rng);

}  // namespace chamberwalk::boundary
