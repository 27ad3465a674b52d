#pragma once

// Conductance-preserving group actions, quotient networks, covolume and
// return-time statistics.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "chamberwalk/netwalk.hpp"
#include "chamberwalk/rational.hpp"
#include "chamberwalk/rng.hpp"
#include "chamberwalk/stats.hpp"
#include "json.hpp"

namespace chamberwalk::action {

using netwalk::NodeKey;

struct InvalidAction : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Group elements are passed around as canonical words chosen by each family
/// ("e" is the identity of word groups, "0" of the integer families).
using GroupWord = std::string;

enum class Generation { generates, does_not_generate, unchecked };
std::string to_string(Generation g);

/// A group acting on the nodes of a network, described through orbit
/// canonical forms and stabilizer orders. Infinite groups are never listed.
class GroupAction {
 public:
  virtual ~GroupAction() = default;
  virtual std::string family() const = 0;
  /// Orbit representative of x.
  virtual NodeKey canonical(const NodeKey& x) const = 0;
  virtual std::uint64_t stabilizer_order(const NodeKey& x) const = 0;
  /// Canonical representatives of all orbits, when there are finitely many.
  virtual std::optional<std::vector<NodeKey>> fundamental_domain() const = 0;
  virtual NodeKey apply(const GroupWord& g, const NodeKey& x) const = 0;
  /// All g with g.from = to, as canonical words (|Gamma_from| of them, or none).
  virtual std::vector<GroupWord> elements_to(const NodeKey& from, const NodeKey& to) const = 0;
  virtual GroupWord inverse(const GroupWord& g) const = 0;
  virtual GroupWord sample_element(RngStream& rng) const = 0;
  /// Whether the given elements generate the whole group.
  virtual Generation generated_by(const std::vector<GroupWord>& elements) const = 0;
};

// ---------------------------------------------------------------------------
// Finite networks with permutation groups.

class PermutationAction final : public GroupAction {
 public:
  /// Generators are permutations of node indices of `net`; the closure is
  /// enumerated (at most `max_order` elements).
  PermutationAction(const netwalk::FiniteNetwork& net, std::vector<std::vector<std::size_t>> generators,
                    std::size_t max_order = 200000);
  static PermutationAction from_json(const netwalk::FiniteNetwork& net, const nlohmann::json& doc);

  std::string family() const override { return "permutation"; }
  NodeKey canonical(const NodeKey& x) const override;
  std::uint64_t stabilizer_order(const NodeKey& x) const override;
  std::optional<std::vector<NodeKey>> fundamental_domain() const override;
  NodeKey apply(const GroupWord& g, const NodeKey& x) const override;
  std::vector<GroupWord> elements_to(const NodeKey& from, const NodeKey& to) const override;
  GroupWord inverse(const GroupWord& g) const override;
  GroupWord sample_element(RngStream& rng) const override;
  Generation generated_by(const std::vector<GroupWord>& elements) const override;

  std::size_t order() const { return elements_.size(); }
  const std::vector<std::vector<std::size_t>>& generators() const { return generators_; }

 private:
  std::size_t node(const NodeKey& x) const;
  const std::vector<std::size_t>& perm(const GroupWord& g) const;

  const netwalk::FiniteNetwork* net_;
  std::vector<std::vector<std::size_t>> generators_;
  std::vector<std::vector<std::size_t>> elements_;
  std::vector<GroupWord> words_;
  std::map<std::vector<std::size_t>, std::size_t> index_;
  std::map<GroupWord, std::size_t> by_word_;
  std::vector<std::size_t> orbit_rep_;
  std::vector<std::size_t> orbit_size_;
};

// ---------------------------------------------------------------------------
// Built-in lazy families.

/// The integer line with unit conductances. Nodes are decimal integers.
class IntegerLine final : public netwalk::LazyNetwork {
 public:
  std::string family() const override { return "z-line"; }
  NodeKey origin() const override { return "0"; }
  std::vector<std::pair<NodeKey, Rational>> neighbors(const NodeKey& x) const override;
  std::optional<std::uint64_t> known_distance(const NodeKey& x, const NodeKey& y) const override;
};

/// kZ acting on Z by translation. Elements are the translation amounts.
class TranslationAction final : public GroupAction {
 public:
  explicit TranslationAction(long k);
  std::string family() const override { return "translation"; }
  NodeKey canonical(const NodeKey& x) const override;
  std::uint64_t stabilizer_order(const NodeKey&) const override { return 1; }
  std::optional<std::vector<NodeKey>> fundamental_domain() const override;
  NodeKey apply(const GroupWord& g, const NodeKey& x) const override;
  std::vector<GroupWord> elements_to(const NodeKey& from, const NodeKey& to) const override;
  GroupWord inverse(const GroupWord& g) const override;
  GroupWord sample_element(RngStream& rng) const override;
  Generation generated_by(const std::vector<GroupWord>& elements) const override;

 private:
  long k_;
};

/// The infinite dihedral group generated by x -> -x and x -> x + k. Elements
/// are "n" (x -> x + n) and "refl:n" (x -> n - x) with n in kZ.
class DihedralAction final : public GroupAction {
 public:
  explicit DihedralAction(long k);
  std::string family() const override { return "dihedral"; }
  NodeKey canonical(const NodeKey& x) const override;
  std::uint64_t stabilizer_order(const NodeKey& x) const override;
  std::optional<std::vector<NodeKey>> fundamental_domain() const override;
  NodeKey apply(const GroupWord& g, const NodeKey& x) const override;
  std::vector<GroupWord> elements_to(const NodeKey& from, const NodeKey& to) const override;
  GroupWord inverse(const GroupWord& g) const override;
  GroupWord sample_element(RngStream& rng) const override;
  Generation generated_by(const std::vector<GroupWord>& elements) const override;

 private:
  long k_;
};

/// Reduced words over an alphabet with an involution on letters. Covers the
/// free group (a <-> A, b <-> B) and free products of Z/2 (every letter is
/// its own inverse).
class WordAlphabet {
 public:
  WordAlphabet(std::string letters, std::string inverses);
  static WordAlphabet free_group(int rank);
  static WordAlphabet involutions(int count);

  const std::string& letters() const { return letters_; }
  char inverse(char c) const;
  bool valid(const std::string& word) const;
  /// Free reduction of u v. Words use "e" for the identity.
  std::string multiply(const std::string& u, const std::string& v) const;
  std::string invert(const std::string& w) const;
  static std::string strip(const std::string& w) { return w == "e" ? std::string() : w; }
  static std::string dress(const std::string& w) { return w.empty() ? std::string("e") : w; }

 private:
  std::string letters_;
  std::string inverses_;
};

/// Cayley graph of a word group with unit conductances; a regular tree.
class CayleyTree final : public netwalk::LazyNetwork {
 public:
  CayleyTree(WordAlphabet alphabet, std::string family_name);
  static CayleyTree free2() { return CayleyTree(WordAlphabet::free_group(2), "free2-tree"); }
  /// (q+1)-regular tree as the Cayley graph of the free product of q+1 copies of Z/2.
  static CayleyTree regular(int q);

  std::string family() const override { return family_; }
  NodeKey origin() const override { return "e"; }
  std::vector<std::pair<NodeKey, Rational>> neighbors(const NodeKey& x) const override;
  std::optional<std::uint64_t> known_distance(const NodeKey& x, const NodeKey& y) const override;
  const WordAlphabet& alphabet() const { return alphabet_; }
  int degree() const { return static_cast<int>(alphabet_.letters().size()); }

 private:
  WordAlphabet alphabet_;
  std::string family_;
};

/// The group of a Cayley tree acting on it by left multiplication: simply
/// transitive, trivial stabilizers.
class LeftMultiplication final : public GroupAction {
 public:
  explicit LeftMultiplication(WordAlphabet alphabet) : alphabet_(std::move(alphabet)) {}
  std::string family() const override { return "left-multiplication"; }
  NodeKey canonical(const NodeKey&) const override { return "e"; }
  std::uint64_t stabilizer_order(const NodeKey&) const override { return 1; }
  std::optional<std::vector<NodeKey>> fundamental_domain() const override { return std::vector<NodeKey>{"e"}; }
  NodeKey apply(const GroupWord& g, const NodeKey& x) const override { return alphabet_.multiply(g, x); }
  std::vector<GroupWord> elements_to(const NodeKey& from, const NodeKey& to) const override;
  GroupWord inverse(const GroupWord& g) const override { return alphabet_.invert(g); }
  GroupWord sample_element(RngStream& rng) const override;
  Generation generated_by(const std::vector<GroupWord>& elements) const override;

 private:
  WordAlphabet alphabet_;
};

// ---------------------------------------------------------------------------

struct Covolume {
  Rational value;
  /// "finite" when an exact finite fundamental domain was summed, "unknown" otherwise.
  std::string verdict;
  std::vector<NodeKey> domain;
};

Covolume covolume(const netwalk::LazyNetwork& net, const GroupAction& act);

struct EdgeCheck {
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  /// "exact" for exhaustive checks, "sampled invariant" for lazy networks.
  std::string label;
  bool ok() const { return violations == 0; }
};

/// Exhaustive check of a(gx, gy) = a(x, y) over all edges and generators.
EdgeCheck conductance_check(const netwalk::FiniteNetwork& net, const PermutationAction& act);
/// Sampled check over random edges near the origin and random group elements.
EdgeCheck conductance_check(const netwalk::LazyNetwork& net, const GroupAction& act, std::uint64_t samples,
                            RngStream& rng);

class QuotientNetwork {
 public:
  const std::vector<NodeKey>& representatives() const { return reps_; }
  std::size_t size() const { return reps_.size(); }
  std::size_t index_of(const NodeKey& rep) const;
  /// Orbit index of an arbitrary node (the projection pi).
  std::size_t project(const NodeKey& x) const;
  const RationalMatrix& conductance() const { return a_; }
  const RationalVector& total_conductance() const { return m_; }
  const std::vector<std::uint64_t>& stabilizer_orders() const { return stab_; }
  /// m(x) of the lifted representative in the original network.
  const RationalVector& lifted_total_conductance() const { return lifted_m_; }

  /// Exact symmetry defect max |a'(x,y) - a'(y,x)|.
  Rational symmetry_defect() const;
  /// Exact max |m'(pi x) - m(x)/|Gamma_x||.
  Rational measure_defect() const;

  netwalk::FiniteNetwork network() const;
  netwalk::MarkovKernel kernel() const;

 private:
  friend QuotientNetwork quotient_network(const netwalk::LazyNetwork& net, const GroupAction& act);
  const GroupAction* act_ = nullptr;
  std::vector<NodeKey> reps_;
  std::map<NodeKey, std::size_t> index_;
  RationalMatrix a_;
  RationalVector m_;
  RationalVector lifted_m_;
  std::vector<std::uint64_t> stab_;
};

/// a'(x,y) = (1/|Gamma_x|) sum over y' in the orbit of y of a(x, y'), with x the
/// canonical lift. Throws InvalidAction when the result is not symmetric.
QuotientNetwork quotient_network(const netwalk::LazyNetwork& net, const GroupAction& act);

/// Max |a'(x,y) computed from a second lift g.x - a'(x,y)| over random g.
Rational second_lift_defect(const netwalk::LazyNetwork& net, const GroupAction& act, const QuotientNetwork& qnet,
                            unsigned trials, RngStream& rng);

struct LawCheck {
  stats::ChiSquare chi;
  std::vector<std::uint64_t> observed;
  std::vector<double> expected;
  std::uint64_t samples = 0;
};

/// Compares the law of pi(Z_steps) with the quotient kernel's step law.
LawCheck quotient_law_check(const netwalk::LazyNetwork& net, const GroupAction& act, const QuotientNetwork& qnet,
                            const NodeKey& start, unsigned steps, std::uint64_t samples, std::uint64_t seed,
                            unsigned workers);

struct ReturnTimes {
  stats::MeanEstimate mean;
  Rational exact_mean;  // total m' divided by m'(x)
  std::map<std::uint64_t, std::uint64_t> histogram;
  std::uint64_t unresolved = 0;
  std::optional<double> exp_moment;  // empirical E[e^{cT}]
  /// Least-squares slope of log P(T >= n) in n; absent when the tail is degenerate.
  std::optional<double> tail_slope;
  /// c is at or beyond the fitted decay rate.
  bool exp_moment_divergent = false;
};

ReturnTimes return_time_stats(const QuotientNetwork& qnet, std::size_t x, std::uint64_t samples, std::uint64_t seed,
                              unsigned workers, std::optional<double> c = std::nullopt,
                              std::uint64_t horizon = 1000000);

}  // namespace chamberwalk::action
