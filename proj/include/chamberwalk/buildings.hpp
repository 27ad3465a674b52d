#pragma once

// Concrete building models: regular trees, truncated balls of the p-adic
// building of SL3 and projective-plane flag complexes.

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "chamberwalk/action.hpp"
#include "chamberwalk/coxeter.hpp"
#include "chamberwalk/rng.hpp"
#include "json.hpp"

namespace chamberwalk::buildings {

using coxeter::Coweight;
using netwalk::NodeKey;

/// Raised when a construction would exceed its configured size.
struct SizeGuard : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a query needs more of the building than the truncation holds.
struct InsufficientDepth : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shared root-system data for a rank-1 or rank-2 building type.
struct TypeData {
  explicit TypeData(const char* label, long q);
  coxeter::RootSystem rs;
  std::unique_ptr<coxeter::WeylGroup> group;
  std::unique_ptr<coxeter::ThicknessVector> thickness;
  Rational n_lambda(const Coweight& c) const { return coxeter::n_lambda(c, *group, *thickness); }
  Rational chi(const Coweight& c) const { return coxeter::chi(c, rs, *thickness); }
};

// ---------------------------------------------------------------------------
// Regular trees.

/// Finite vertex path; for a ray, consecutive vertices are adjacent and the
/// path never backtracks.
using VertexPath = std::vector<NodeKey>;

/// The (q+1)-regular tree, vertices encoded as reduced words over q+1
/// involutions (the free product of q+1 copies of Z/2 acts simply transitively).
class TreeBuilding {
 public:
  explicit TreeBuilding(int q);

  int q() const { return q_; }
  const action::CayleyTree& network() const { return tree_; }
  const action::LeftMultiplication& automorphisms() const { return auts_; }
  const TypeData& type_data() const { return *data_; }

  unsigned distance(const NodeKey& x, const NodeKey& y) const;
  /// sigma(x, y) = d(x, y) lambda_1.
  Coweight sigma(const NodeKey& x, const NodeKey& y) const;
  /// All vertices at distance k from x.
  std::vector<NodeKey> v_lambda(const NodeKey& x, unsigned k) const;
  /// The neighbour of x on the geodesic towards y (x != y).
  NodeKey step_towards(const NodeKey& x, const NodeKey& y) const;
  /// Geodesic from x to y inclusive.
  VertexPath geodesic(const NodeKey& x, const NodeKey& y) const;
  bool is_ray(const VertexPath& path) const;
  /// Extends a geodesic path by `extra` vertices, never backtracking.
  VertexPath extend(const VertexPath& path, unsigned extra, RngStream& rng) const;

 private:
  int q_;
  action::CayleyTree tree_;
  action::LeftMultiplication auts_;
  std::shared_ptr<TypeData> data_;
};

/// h(x, y; omega) = d(x, z) - d(y, z) for z deep in the ray. The ray is a
/// finite segment; z ranges over every ray vertex past both projections and
/// all values must agree. Throws InsufficientDepth when x or y projects to
/// the last vertex of the segment.
long busemann_h(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, const VertexPath& ray);

struct BetaReport {
  long beta_x = 0;
  long beta_y = 0;
  long distance_x = 0;  // d(x, geodesic)
  /// beta_x - beta_y = h(x, y; omega) + h(x, y; omega').
  bool basepoint_identity = false;
};

/// beta_x(omega, omega') = h(x, z; omega) + h(x, z; omega') for z on the
/// geodesic. The geodesic is a finite segment g_0 .. g_L with omega' beyond
/// g_0 and omega beyond g_L.
long beta(const TreeBuilding& t, const NodeKey& x, const VertexPath& geodesic);
BetaReport beta_report(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, const VertexPath& geodesic);

// ---------------------------------------------------------------------------
// Truncated ball of the building of SL3(Q_p).

/// A homothety class of Z_p-lattices in Q_p^3, as the Hermite normal form of
/// its representative L with L in Z_p^3 and L not in pZ_p^3. Rows span L;
/// diagonal entries are p^e, entries above the diagonal are reduced modulo
/// the diagonal entry of their column.
struct LatticeClass {
  std::array<int, 3> exps{0, 0, 0};
  std::array<std::int64_t, 3> off{0, 0, 0};  // (0,1), (0,2), (1,2)

  std::array<std::array<std::int64_t, 3>, 3> matrix(std::int64_t p) const;
  std::string label() const;
  static LatticeClass parse(const std::string& label);
  bool operator==(const LatticeClass&) const = default;
};

struct BallOptions {
  bool store_adjacency = true;
  std::uint64_t vertex_limit = 3000000;
};

class A2Ball {
 public:
  /// All classes y with sigma(o, y) in the box max(m1, m2) <= radius, where
  /// o = [Z_p^3]. Requires p prime and radius <= 4; throws SizeGuard when the
  /// predicted vertex count exceeds the limit.
  static A2Ball build(int p, int radius, const BallOptions& options = {});

  /// Predicted vertex count: sum of N_lambda over the box.
  static Rational predicted_size(int p, int radius);

  int p() const { return p_; }
  int radius() const { return radius_; }
  std::size_t size() const { return classes_.size(); }
  std::size_t base() const { return 0; }
  const LatticeClass& lattice(std::size_t i) const { return classes_.at(i); }
  std::optional<std::size_t> index_of(const LatticeClass& c) const;
  int type(std::size_t i) const { return types_.at(i); }
  Coweight sigma_from_base(std::size_t i) const;
  const TypeData& type_data() const { return *data_; }

  bool has_adjacency() const { return !adjacency_.empty(); }
  std::vector<std::size_t> neighbors(std::size_t i) const;
  bool is_adjacent(std::size_t x, std::size_t y) const { return adjacent(x, y); }
  /// Raw adjacency row; absent neighbours (outside the ball) are kNoVertex.
  static constexpr std::uint32_t kNoVertex = 0xffffffffu;
  std::span<const std::uint32_t> neighbor_slots(std::size_t i) const {
    return {adjacency_.data() + i * stride_, stride_};
  }
  /// Every neighbour of i lies in the ball.
  bool interior(std::size_t i) const { return interior_.at(i) != 0; }

  /// Elementary-divisor distance, exact for any two vertices of the ball.
  Coweight sigma(std::size_t x, std::size_t y) const;
  /// V_lambda(x). For x = o any lambda in the box works; otherwise the
  /// sphere is found by search in the ball and InsufficientDepth is thrown
  /// when the search reaches a vertex on the truncation boundary.
  std::vector<std::size_t> v_lambda(std::size_t x, const Coweight& lambda) const;
  /// Chambers {x, y1, y2} with sigma(x, y1) = lambda_1, sigma(x, y2) = lambda_2.
  std::vector<std::pair<std::size_t, std::size_t>> chambers_at(std::size_t x) const;

  /// Vertices with labels and types, unit-conductance edges.
  nlohmann::json to_json() const;

  /// Neighbouring classes of an arbitrary class (points and lines of L/pL).
  static std::vector<LatticeClass> neighbor_classes(const LatticeClass& c, int p, int precision);

 private:
  int p_ = 2;
  int radius_ = 0;
  std::shared_ptr<TypeData> data_;
  std::vector<LatticeClass> classes_;
  std::vector<std::uint8_t> types_;
  std::vector<std::array<std::uint8_t, 2>> sigma_;
  std::vector<std::uint8_t> interior_;
  std::vector<std::uint32_t> adjacency_;  // fixed stride, kNone for absent slots
  std::size_t stride_ = 0;
  // Open-addressing index from packed classes to vertex ids.
  std::vector<unsigned __int128> slot_keys_;
  std::vector<std::uint32_t> slot_ids_;
  std::size_t slot_mask_ = 0;
  std::uint32_t find_slot(unsigned __int128 key) const;
  void insert_slot(unsigned __int128 key, std::uint32_t id);
  unsigned __int128 pack(const LatticeClass& c) const;
  bool adjacent(std::size_t x, std::size_t y) const;
};

/// sigma between two lattice classes from elementary divisors.
Coweight lattice_sigma(const LatticeClass& x, const LatticeClass& y, int p);

/// A sector segment at o: the pair (o, z) with sigma(o, z) regular. Its first
/// chamber is the unique chamber {o, y1, y2} of the convex hull of o and z.
struct SectorGerm {
  std::size_t y1 = 0;  // sigma(o, y1) = lambda_1
  std::size_t y2 = 0;  // sigma(o, y2) = lambda_2
};

/// First chamber of the sector segment from o through z.
SectorGerm sector_germ(const A2Ball& b, std::size_t o, std::size_t z);

struct LinkOpposition {
  SectorGerm first;
  SectorGerm second;
  bool opposite = false;  // opposition of the germs in the link of o
  bool apartment = false; // sigma(z, z') = sigma(z, o) + sigma(o, z')
};

/// Link-projection test for two sector segments at o, with the convex-hull
/// apartment test computed alongside as an independent check.
LinkOpposition link_opposition_check(const A2Ball& b, std::size_t o, std::size_t z, std::size_t z_prime);

// ---------------------------------------------------------------------------
// Spherical A2 buildings: flag complexes of projective planes over GF(q).

/// Finite field of prime-power order, with arithmetic tables.
class GaloisField {
 public:
  explicit GaloisField(int q);
  int order() const { return q_; }
  int characteristic() const { return p_; }
  int add(int a, int b) const { return add_[static_cast<std::size_t>(a * q_ + b)]; }
  int mul(int a, int b) const { return mul_[static_cast<std::size_t>(a * q_ + b)]; }
  int neg(int a) const;
  int inv(int a) const;

 private:
  int q_, p_, k_;
  std::vector<int> add_, mul_;
};

class SphericalA2 {
 public:
  explicit SphericalA2(int q);

  int q() const { return field_.order(); }
  std::size_t num_points() const { return points_.size(); }
  std::size_t num_lines() const { return lines_.size(); }
  std::size_t num_chambers() const { return chambers_.size(); }
  bool incident(std::size_t point, std::size_t line) const;
  /// Chamber c is the flag (point, line).
  std::pair<std::size_t, std::size_t> flag(std::size_t c) const { return chambers_.at(c); }
  const coxeter::WeylGroup& weyl() const { return *data_->group; }

  /// s1 changes the point on a fixed line; s2 changes the line through a fixed point.
  coxeter::WeylElement weyl_distance(std::size_t c, std::size_t d) const;
  /// Length of a shortest gallery, by breadth-first search (independent oracle).
  int gallery_distance(std::size_t c, std::size_t d) const;
  /// {D : delta(C, D) in W_J}; J subset of {1, 2}.
  std::vector<std::size_t> residue(std::size_t c, const std::set<int>& j) const;
  /// Unique chamber of the residue closest to c; throws if not unique.
  std::size_t proj_residue(const std::vector<std::size_t>& residue, std::size_t c) const;
  std::vector<std::size_t> chambers_adjacent(std::size_t c, int type) const;

 private:
  GaloisField field_;
  std::shared_ptr<TypeData> data_;
  std::vector<std::array<int, 3>> points_, lines_;
  std::vector<std::vector<char>> incidence_;
  std::vector<std::pair<std::size_t, std::size_t>> chambers_;
  std::vector<std::vector<std::size_t>> flags_on_line_, flags_at_point_;
  std::vector<std::vector<std::size_t>> flag_index_;  // [point][line] -> chamber or npos
};

struct OppositeResult {
  std::size_t chamber = 0;
  int iterations = 0;
};

/// Chamber opposite both c and c_prime, by the residue-walking construction.
OppositeResult opposite_to_both(const SphericalA2& s, std::size_t c, std::size_t c_prime);

}  // namespace chamberwalk::buildings
