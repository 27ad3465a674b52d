#pragma once

// Finite root systems, spherical Weyl groups and the counting functions of
// regular affine buildings (q_w, Poincare sums, chi, N_lambda).
//
// Vectors of the ambient space E are written in the basis of simple roots; the
// geometry is carried by an explicit Gram matrix normalized so that short
// roots have squared length 2. Coweights are written in the basis of
// fundamental coweights, so their coordinates are the pairings <lambda, alpha_i>.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "chamberwalk/rational.hpp"

namespace chamberwalk::coxeter {

using IntMatrix = std::vector<std::vector<long>>;
using IntVector = std::vector<long>;
/// Word in the simple reflections; generator indices are 1-based.
using Word = std::vector<int>;

struct UnsupportedType : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotDominant : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

class RootSystem {
 public:
  /// Builds A1, A2, A3, B2, C2 or G2 (Bourbaki numbering).
  static RootSystem from_type(std::string_view label);
  /// Builds from a Cartan matrix A_ij = <alpha_i^vee, alpha_j>.
  static RootSystem from_cartan(std::string label, IntMatrix cartan);

  const std::string& cartan_type() const { return label_; }
  int rank() const { return static_cast<int>(cartan_.size()); }
  const IntMatrix& cartan() const { return cartan_; }
  const RationalMatrix& gram() const { return gram_; }

  /// Simple roots as vectors of E (unit vectors in the simple-root basis).
  std::vector<RationalVector> simple_roots() const;
  /// Positive roots as integer coefficient vectors over the simple roots.
  const std::vector<IntVector>& positive_roots() const { return positive_; }
  const IntVector& highest_root() const { return highest_; }
  /// Fundamental coweights as vectors of E in the simple-root basis.
  const std::vector<RationalVector>& fundamental_coweights() const { return coweights_; }

  /// Inner product on E (vectors in the simple-root basis).
  Rational inner(const RationalVector& x, const RationalVector& y) const;
  /// Index of the simple root W0-conjugate to the given root, 1-based.
  int simple_class_of(const IntVector& root) const;
  bool is_root(const IntVector& v) const;
  /// Order of the fundamental group P/Q (= det of the Cartan matrix).
  long fundamental_group_order() const { return det_; }

 private:
  RootSystem() = default;
  void build();

  std::string label_;
  IntMatrix cartan_;
  RationalMatrix gram_;
  std::vector<IntVector> positive_;
  std::vector<int> positive_class_;
  IntVector highest_;
  std::vector<RationalVector> coweights_;
  long det_ = 1;
};

/// A coweight written in the fundamental-coweight basis.
struct Coweight {
  IntVector coords;

  Coweight() = default;
  explicit Coweight(IntVector c) : coords(std::move(c)) {}
  static Coweight zero(int rank) { return Coweight(IntVector(static_cast<std::size_t>(rank), 0)); }
  static Coweight fundamental(int rank, int i);

  bool is_dominant() const;
  bool is_zero() const;
  int rank() const { return static_cast<int>(coords.size()); }

  Coweight operator+(const Coweight& o) const;
  Coweight operator-(const Coweight& o) const;
  Coweight operator-() const;
  Coweight scaled(long k) const;
  auto operator<=>(const Coweight&) const = default;
};

std::string to_string(const Coweight& c);

class WeylElement {
 public:
  WeylElement() = default;
  WeylElement(IntMatrix root_action, Word word) : matrix_(std::move(root_action)), word_(std::move(word)) {}

  /// Action on E in the simple-root basis (column j is the image of alpha_j).
  const IntMatrix& matrix() const { return matrix_; }
  /// Cached reduced word.
  const Word& word() const { return word_; }
  int length() const { return static_cast<int>(word_.size()); }

  IntVector apply(const IntVector& root_coords) const;
  auto operator<=>(const WeylElement& o) const { return matrix_ <=> o.matrix_; }
  bool operator==(const WeylElement& o) const { return matrix_ == o.matrix_; }

 private:
  IntMatrix matrix_;
  Word word_;
};

std::string to_string(const Word& w);

/// The finite group W0 of a root system, fully enumerated.
class WeylGroup {
 public:
  explicit WeylGroup(const RootSystem& rs);

  const RootSystem& root_system() const { return *rs_; }
  const std::vector<WeylElement>& elements() const { return elements_; }
  std::size_t order() const { return elements_.size(); }

  WeylElement identity() const { return elements_.front(); }
  WeylElement generator(int i) const;
  WeylElement longest() const;
  WeylElement multiply(const WeylElement& a, const WeylElement& b) const;
  WeylElement inverse(const WeylElement& w) const;
  WeylElement from_word(const Word& word) const;

  /// #{alpha in Phi+ : w alpha in Phi-}.
  int inversion_count(const WeylElement& w) const;
  /// Descent algorithm: repeatedly strip a left descent s_i with l(s_i w) < l(w).
  Word reduced_word(const WeylElement& w) const;
  /// Every reduced word of w (small groups only).
  std::vector<Word> all_reduced_words(const WeylElement& w) const;

  Coweight act(const WeylElement& w, const Coweight& c) const;
  /// Contragredient involution lambda -> -w0 lambda.
  Coweight iota(const Coweight& c) const;
  /// Dominant representative of the W0-orbit of c.
  Coweight dominant_representative(const Coweight& c) const;

  std::vector<WeylElement> stabilizer(const Coweight& c) const;
  std::vector<WeylElement> parabolic(const std::set<int>& generators) const;
  WeylElement longest_element(const std::set<int>& generators) const;
  bool in_parabolic(const WeylElement& w, const std::set<int>& generators) const;

 private:
  std::size_t index_of(const IntMatrix& m) const;

  const RootSystem* rs_;
  std::vector<WeylElement> elements_;
  std::map<IntMatrix, std::size_t> index_;
  std::vector<IntMatrix> simple_;
  std::vector<IntMatrix> simple_coweight_;
};

std::vector<WeylElement> enumerate_weyl(const WeylGroup& group);

/// q_i for the nodes 0..n of the affine Dynkin diagram.
class ThicknessVector {
 public:
  /// Validates positivity and constancy on conjugacy classes of affine
  /// simple reflections.
  ThicknessVector(const RootSystem& rs, std::vector<long> q);
  static ThicknessVector uniform(const RootSystem& rs, long q);

  const std::vector<long>& values() const { return q_; }
  long at(int node) const { return q_.at(static_cast<std::size_t>(node)); }
  /// q_alpha for a root alpha.
  long for_root(const RootSystem& rs, const IntVector& root) const;
  /// q_w = product of q over a reduced word of w.
  Rational for_word(const Word& w) const;

 private:
  std::vector<long> q_;
};

/// Conjugacy classes of affine simple reflections (nodes 0..n) via odd bonds.
std::vector<int> affine_reflection_classes(const RootSystem& rs);

/// U(q^{-1}) = sum over U of 1/q_w.
Rational poincare_sum(const std::vector<WeylElement>& subset, const ThicknessVector& q);

/// chi(lambda) = prod over Phi+ of q_alpha^{<lambda, alpha>}.
Rational chi(const Coweight& lambda, const RootSystem& rs, const ThicknessVector& q);

/// N_lambda = W0(q^{-1}) / Stab(lambda)(q^{-1}) * chi(lambda); throws NotDominant.
Rational n_lambda(const Coweight& lambda, const WeylGroup& group, const ThicknessVector& q);

std::vector<WeylElement> stabilizer_subgroup(const Coweight& lambda, const WeylGroup& group);

/// Type of a coweight in P/Q; type 0 is the coroot lattice Q.
class CoweightTypes {
 public:
  explicit CoweightTypes(const RootSystem& rs);
  int type_of(const Coweight& c) const;
  bool in_coroot_lattice(const Coweight& c) const { return type_of(c) == 0; }
  int count() const { return static_cast<int>(classes_.size()); }

 private:
  RationalVector key(const Coweight& c) const;
  RationalMatrix inverse_cartan_;
  std::vector<RationalVector> classes_;
};

/// All dominant coweights mu with mu <= lambda in the dominance order.
std::vector<Coweight> dominated_dominant(const Coweight& lambda, const RootSystem& rs);

/// Cartan data document {type, rank, q: [q0..qn]}.
struct CartanSpec {
  std::string type;
  int rank = 0;
  std::vector<long> q;
};

CartanSpec parse_cartan_spec(const std::string& json_text);

}  // namespace chamberwalk::coxeter
