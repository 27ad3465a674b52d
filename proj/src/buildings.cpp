#include "chamberwalk/buildings.hpp"

#include <gmpxx.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <sstream>

namespace chamberwalk::buildings {

TypeData::TypeData(const char* label, long q)
    : rs(coxeter::RootSystem::from_type(label)),
      group(std::make_unique<coxeter::WeylGroup>(rs)),
      thickness(std::make_unique<coxeter::ThicknessVector>(coxeter::ThicknessVector::uniform(rs, q))) {}

// ---------------------------------------------------------------------------
// Trees

TreeBuilding::TreeBuilding(int q)
    : q_(q),
      tree_(action::CayleyTree::regular(q)),
      auts_(tree_.alphabet()),
      data_(std::make_shared<TypeData>("A1", q)) {}

unsigned TreeBuilding::distance(const NodeKey& x, const NodeKey& y) const {
  return static_cast<unsigned>(*tree_.known_distance(x, y));
}

Coweight TreeBuilding::sigma(const NodeKey& x, const NodeKey& y) const {
  return Coweight(coxeter::IntVector{static_cast<long>(distance(x, y))});
}

std::vector<NodeKey> TreeBuilding::v_lambda(const NodeKey& x, unsigned k) const {
  const std::string& letters = tree_.alphabet().letters();
  std::vector<std::string> words{""};
  for (unsigned step = 0; step < k; ++step) {
    std::vector<std::string> next;
    for (const auto& w : words)
      for (char c : letters)
        if (w.empty() || w.back() != c) next.push_back(w + c);
    words.swap(next);
  }
  std::vector<NodeKey> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(tree_.alphabet().multiply(x, action::WordAlphabet::dress(w)));
  std::sort(out.begin(), out.end());
  return out;
}

NodeKey TreeBuilding::step_towards(const NodeKey& x, const NodeKey& y) const {
  const auto& a = tree_.alphabet();
  const std::string w = action::WordAlphabet::strip(a.multiply(a.invert(x), y));
  if (w.empty()) throw std::invalid_argument("step_towards needs distinct vertices");
  return a.multiply(x, std::string(1, w.front()));
}

VertexPath TreeBuilding::geodesic(const NodeKey& x, const NodeKey& y) const {
  VertexPath path{x};
  while (path.back() != y) path.push_back(step_towards(path.back(), y));
  return path;
}

bool TreeBuilding::is_ray(const VertexPath& path) const {
  if (path.empty()) return false;
  for (const auto& v : path)
    if (!tree_.alphabet().valid(v)) return false;
  for (std::size_t i = 0; i + 1 < path.size(); ++i)
    if (distance(path[i], path[i + 1]) != 1) return false;
  for (std::size_t i = 0; i + 2 < path.size(); ++i)
    if (path[i] == path[i + 2]) return false;
  return true;
}

VertexPath TreeBuilding::extend(const VertexPath& path, unsigned extra, RngStream& rng) const {
  if (!is_ray(path)) throw std::invalid_argument("path is not a geodesic");
  VertexPath out = path;
  for (unsigned i = 0; i < extra; ++i) {
    std::vector<NodeKey> options;
    for (const auto& [y, a] : tree_.neighbors(out.back()))
      if (out.size() < 2 || y != out[out.size() - 2]) options.push_back(y);
    out.push_back(options[rng.below(options.size())]);
  }
  return out;
}

namespace {

std::size_t projection_index(const TreeBuilding& t, const NodeKey& x, const VertexPath& path) {
  std::size_t best = 0;
  unsigned best_d = std::numeric_limits<unsigned>::max();
  for (std::size_t i = 0; i < path.size(); ++i) {
    const unsigned d = t.distance(x, path[i]);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

}  // namespace

long busemann_h(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, const VertexPath& ray) {
  if (!t.is_ray(ray)) throw std::invalid_argument("ray segment is not a geodesic");
  const std::size_t last = ray.size() - 1;
  const std::size_t start = std::max(projection_index(t, x, ray), projection_index(t, y, ray));
  if (start >= last) throw InsufficientDepth("ray segment too short for the Busemann function");
  std::optional<long> value;
  for (std::size_t i = start; i <= last; ++i) {
    const long h = static_cast<long>(t.distance(x, ray[i])) - static_cast<long>(t.distance(y, ray[i]));
    if (value && *value != h) throw std::logic_error("Busemann function depends on the ray vertex");
    value = h;
  }
  return *value;
}

long beta(const TreeBuilding& t, const NodeKey& x, const VertexPath& geodesic) {
  if (!t.is_ray(geodesic)) throw std::invalid_argument("geodesic segment is not a geodesic");
  const std::size_t j = projection_index(t, x, geodesic);
  if (j == 0 || j + 1 >= geodesic.size())
    throw InsufficientDepth("point projects to an end of the geodesic segment");
  const NodeKey& z = geodesic[j];
  VertexPath reversed(geodesic.rbegin(), geodesic.rend());
  return busemann_h(t, x, z, geodesic) + busemann_h(t, x, z, reversed);
}

BetaReport beta_report(const TreeBuilding& t, const NodeKey& x, const NodeKey& y, const VertexPath& geodesic) {
  BetaReport r;
  r.beta_x = beta(t, x, geodesic);
  r.beta_y = beta(t, y, geodesic);
  r.distance_x = t.distance(x, geodesic[projection_index(t, x, geodesic)]);
  VertexPath reversed(geodesic.rbegin(), geodesic.rend());
  r.basepoint_identity = r.beta_x - r.beta_y == busemann_h(t, x, y, geodesic) + busemann_h(t, x, y, reversed);
  return r;
}

// ---------------------------------------------------------------------------
// Lattice classes

namespace {

using Row = std::array<std::int64_t, 3>;
using i128 = __int128;

std::int64_t ipow(std::int64_t p, int k) {
  std::int64_t r = 1;
  for (int i = 0; i < k; ++i) r *= p;
  return r;
}

int valuation(std::int64_t a, std::int64_t p, int cap) {
  if (a == 0) return cap;
  int v = 0;
  while (a % p == 0 && v < cap) {
    a /= p;
    ++v;
  }
  return v;
}

int valuation128(i128 a, std::int64_t p) {
  if (a == 0) return std::numeric_limits<int>::max();
  if (a < 0) a = -a;
  if (a <= std::numeric_limits<std::int64_t>::max()) return valuation(static_cast<std::int64_t>(a), p, 127);
  int v = 0;
  while (a % p == 0) {
    a /= p;
    ++v;
  }
  return v;
}

int valuation_mpz(const mpz_class& a, std::int64_t p) {
  if (a == 0) return std::numeric_limits<int>::max();
  mpz_class r;
  const mpz_class pz(static_cast<long>(p));
  return static_cast<int>(mpz_remove(r.get_mpz_t(), a.get_mpz_t(), pz.get_mpz_t()));
}

std::int64_t mod(i128 a, std::int64_t m) {
  i128 r = a % m;
  if (r < 0) r += m;
  return static_cast<std::int64_t>(r);
}

std::int64_t inverse_mod(std::int64_t a, std::int64_t m) {
  std::int64_t g = m, x = 0, x1 = 1, b = a;
  while (b != 0) {
    const std::int64_t q = g / b;
    std::tie(g, b) = std::make_pair(b, g - q * b);
    std::tie(x, x1) = std::make_pair(x1, x - q * x1);
  }
  if (g != 1) throw std::logic_error("element is not a unit");
  return mod(x, m);
}

bool is_prime(int p) {
  if (p < 2) return false;
  for (int d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

/// Arithmetic modulo p^M on residues in [0, p^M).
struct ModRing {
  std::int64_t p;
  int precision;
  std::int64_t big;
  bool narrow;  // products fit in 64 bits

  // Lookup tables for small moduli.
  std::vector<std::uint8_t> val;
  std::vector<std::int64_t> inv;

  ModRing(std::int64_t p_, int precision_)
      : p(p_), precision(precision_), big(ipow(p_, precision_)), narrow(big < (std::int64_t{1} << 31)) {
    if (big > (std::int64_t{1} << 20)) return;
    val.assign(static_cast<std::size_t>(big), static_cast<std::uint8_t>(precision));
    inv.assign(static_cast<std::size_t>(big), 0);
    for (std::int64_t a = 1; a < big; ++a) {
      val[static_cast<std::size_t>(a)] = static_cast<std::uint8_t>(valuation(a, p, precision));
      if (a % p != 0 && inv[static_cast<std::size_t>(a)] == 0) {
        const std::int64_t b = inverse_mod(a, big);
        inv[static_cast<std::size_t>(a)] = b;
        inv[static_cast<std::size_t>(b)] = a;
      }
    }
  }

  int valuation_of(std::int64_t a) const {
    return val.empty() ? valuation(a, p, precision) : val[static_cast<std::size_t>(a)];
  }
  std::int64_t unit_inverse(std::int64_t a) const {
    return inv.empty() ? inverse_mod(a, big) : inv[static_cast<std::size_t>(a)];
  }

  std::int64_t mul(std::int64_t a, std::int64_t b) const {
    return narrow ? (a * b) % big : static_cast<std::int64_t>(static_cast<i128>(a) * b % big);
  }
  std::int64_t sub_mul(std::int64_t a, std::int64_t f, std::int64_t b) const {
    const std::int64_t r = a - mul(f, b);
    return r < 0 ? r + big : r;
  }
};

/// Hermite normal form of the lattice spanned by rows together with p^M Z^3,
/// scaled into Z_p^3 \ pZ_p^3. Row entries must lie in [0, p^M).
LatticeClass hnf_class(std::array<Row, 8> rows, std::size_t count, const ModRing& ring) {
  const std::int64_t p = ring.p;
  std::array<Row, 3> b{};
  LatticeClass c;
  for (int j = 0; j < 3; ++j) {
    std::size_t best = count;
    int best_v = ring.precision;
    for (std::size_t r = 0; r < count; ++r) {
      const int v = ring.valuation_of(rows[r][j]);
      if (v < best_v) {
        best_v = v;
        best = r;
        if (v == 0) break;
      }
    }
    if (best == count) throw std::logic_error("lattice precision exhausted");
    Row pivot = rows[best];
    rows[best] = rows[--count];
    const std::int64_t pe = ipow(p, best_v);
    const std::int64_t unit = pivot[j] / pe;
    if (unit != 1) {
      const std::int64_t u_inv = ring.unit_inverse(unit);
      for (auto& x : pivot) x = ring.mul(x, u_inv);
    }
    std::size_t kept = 0;
    for (std::size_t r = 0; r < count; ++r) {
      Row row = rows[r];
      const std::int64_t f = row[j] / pe;
      if (f != 0)
        for (int k = j; k < 3; ++k) row[k] = ring.sub_mul(row[k], f, pivot[k]);
      if (row[0] != 0 || row[1] != 0 || row[2] != 0) rows[kept++] = row;
    }
    count = kept;
    const std::int64_t scale = ipow(p, ring.precision - best_v);
    Row torsion{0, 0, 0};
    for (int k = j + 1; k < 3; ++k) torsion[k] = ring.mul(pivot[k], scale);
    if (torsion[1] != 0 || torsion[2] != 0) rows[count++] = torsion;
    b[j] = pivot;
    c.exps[j] = best_v;
  }
  auto reduce = [&](int row, int col) {
    const std::int64_t f = b[row][col] / ipow(p, c.exps[col]);
    if (f == 0) return;
    for (int k = col; k < 3; ++k) b[row][k] = ring.sub_mul(b[row][k], f, b[col][k]);
  };
  reduce(0, 1);
  reduce(0, 2);
  reduce(1, 2);
  c.off = {b[0][1], b[0][2], b[1][2]};
  int v = std::min({c.exps[0], c.exps[1], c.exps[2]});
  for (auto o : c.off)
    if (o != 0) v = std::min(v, valuation(o, p, ring.precision));
  if (v > 0) {
    const std::int64_t pv = ipow(p, v);
    for (auto& e : c.exps) e -= v;
    for (auto& o : c.off) o /= pv;
  }
  return c;
}

/// Bases of the proper nonzero subspaces of F_p^3: points then lines.
std::vector<std::vector<Row>> subspaces(int p) {
  std::vector<Row> normalized;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b)
      for (int c = 0; c < p; ++c) {
        const Row v{a, b, c};
        const auto first = std::find_if(v.begin(), v.end(), [](std::int64_t x) { return x != 0; });
        if (first != v.end() && *first == 1) normalized.push_back(v);
      }
  std::vector<std::vector<Row>> out;
  for (const auto& v : normalized) out.push_back({v});
  for (const auto& u : normalized) {
    const std::size_t k = static_cast<std::size_t>(std::find(u.begin(), u.end(), 1) - u.begin());
    std::vector<Row> basis;
    for (std::size_t l = 0; l < 3; ++l) {
      if (l == k) continue;
      Row w{0, 0, 0};
      w[l] = 1;
      w[k] = (p - u[l]) % p;
      basis.push_back(w);
    }
    out.push_back(basis);
  }
  return out;
}

int precision_for(int radius) { return 2 * radius + 4; }

/// Elementary divisor exponents (d1 <= d2 <= d3) from minor valuations.
Coweight sigma_from_minors(int k1, int k12, int k123) {
  const long d1 = k1, d2 = k12 - k1, d3 = k123 - k12;
  return Coweight(coxeter::IntVector{d3 - d2, d2 - d1});
}

Coweight sigma_base(const LatticeClass& c, std::int64_t p) {
  const auto m = c.matrix(p);
  // Normalized classes have an entry of valuation zero, so k1 = 0.
  int k12 = std::numeric_limits<int>::max();
  const bool narrow = std::max({m[0][0], m[1][1], m[2][2], m[0][1], m[0][2], m[1][2]}) < (std::int64_t{1} << 31);
  for (int r1 = 0; r1 < 3; ++r1)
    for (int r2 = r1 + 1; r2 < 3; ++r2)
      for (int c1 = 0; c1 < 3; ++c1)
        for (int c2 = c1 + 1; c2 < 3; ++c2) {
          if (narrow) {
            const std::int64_t minor = m[r1][c1] * m[r2][c2] - m[r1][c2] * m[r2][c1];
            if (minor != 0) k12 = std::min(k12, valuation(minor < 0 ? -minor : minor, p, 127));
          } else {
            const i128 minor = static_cast<i128>(m[r1][c1]) * m[r2][c2] - static_cast<i128>(m[r1][c2]) * m[r2][c1];
            k12 = std::min(k12, valuation128(minor, p));
          }
        }
  return sigma_from_minors(0, k12, c.exps[0] + c.exps[1] + c.exps[2]);
}

}  // namespace

std::array<std::array<std::int64_t, 3>, 3> LatticeClass::matrix(std::int64_t p) const {
  std::array<std::array<std::int64_t, 3>, 3> m{};
  for (int i = 0; i < 3; ++i) m[i][i] = ipow(p, exps[i]);
  m[0][1] = off[0];
  m[0][2] = off[1];
  m[1][2] = off[2];
  return m;
}

std::string LatticeClass::label() const {
  std::ostringstream os;
  os << exps[0] << '.' << exps[1] << '.' << exps[2] << ':' << off[0] << '.' << off[1] << '.' << off[2];
  return os.str();
}

LatticeClass LatticeClass::parse(const std::string& label) {
  LatticeClass c;
  char d1, d2, colon, d3, d4;
  std::istringstream is(label);
  if (!(is >> c.exps[0] >> d1 >> c.exps[1] >> d2 >> c.exps[2] >> colon >> c.off[0] >> d3 >> c.off[1] >> d4 >>
        c.off[2]) ||
      d1 != '.' || d2 != '.' || colon != ':' || d3 != '.' || d4 != '.')
    throw std::invalid_argument("malformed lattice label: " + label);
  return c;
}

Coweight lattice_sigma(const LatticeClass& x, const LatticeClass& y, int p) {
  const auto bx = x.matrix(p);
  const auto by = y.matrix(p);
  std::array<std::array<mpz_class, 3>, 3> mx, my, adj, d;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      mx[i][j] = static_cast<long>(bx[i][j]);
      my[i][j] = static_cast<long>(by[i][j]);
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const int r1 = (j + 1) % 3, r2 = (j + 2) % 3, c1 = (i + 1) % 3, c2 = (i + 2) % 3;
      adj[i][j] = mx[r1][c1] * mx[r2][c2] - mx[r1][c2] * mx[r2][c1];
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d[i][j] = my[i][0] * adj[0][j] + my[i][1] * adj[1][j] + my[i][2] * adj[2][j];
  int k1 = std::numeric_limits<int>::max();
  for (const auto& r : d)
    for (const auto& v : r) k1 = std::min(k1, valuation_mpz(v, p));
  int k12 = std::numeric_limits<int>::max();
  for (int r1 = 0; r1 < 3; ++r1)
    for (int r2 = r1 + 1; r2 < 3; ++r2)
      for (int c1 = 0; c1 < 3; ++c1)
        for (int c2 = c1 + 1; c2 < 3; ++c2)
          k12 = std::min(k12, valuation_mpz(mpz_class(d[r1][c1] * d[r2][c2] - d[r1][c2] * d[r2][c1]), p));
  const int vx = x.exps[0] + x.exps[1] + x.exps[2];
  const int vy = y.exps[0] + y.exps[1] + y.exps[2];
  return sigma_from_minors(k1, k12, vy + 2 * vx);
}

namespace {

using Matrix3 = std::array<Row, 3>;

/// Hermite matrices of the neighbours of the standard lattice; the
/// neighbours of L = rowspan(B) are the row spans of H B.
std::vector<Matrix3> base_neighbor_matrices(const ModRing& ring) {
  std::vector<Matrix3> out;
  for (const auto& basis : subspaces(static_cast<int>(ring.p))) {
    std::array<Row, 8> rows{};
    std::size_t count = 0;
    for (const auto& s : basis) rows[count++] = s;
    for (int i = 0; i < 3; ++i) {
      Row r{0, 0, 0};
      r[static_cast<std::size_t>(i)] = ring.p;
      rows[count++] = r;
    }
    out.push_back(hnf_class(rows, count, ring).matrix(ring.p));
  }
  return out;
}

void neighbor_classes_into(const LatticeClass& c, const ModRing& ring, const std::vector<Matrix3>& hs,
                           std::vector<LatticeClass>& out) {
  const auto m = c.matrix(ring.p);
  out.clear();
  for (const auto& h : hs) {
    std::array<Row, 8> rows{};
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        std::int64_t acc = 0;
        for (int l = 0; l < 3; ++l)
          if (h[i][l] != 0) acc += ring.mul(h[i][l] % ring.big, m[l][k]);
        rows[i][k] = acc % ring.big;
      }
    out.push_back(hnf_class(rows, 3, ring));
  }
}

}  // namespace

std::vector<LatticeClass> A2Ball::neighbor_classes(const LatticeClass& c, int p, int precision) {
  std::vector<LatticeClass> out;
  const ModRing ring(p, precision);
  neighbor_classes_into(c, ring, base_neighbor_matrices(ring), out);
  return out;
}

Rational A2Ball::predicted_size(int p, int radius) {
  TypeData data("A2", p);
  Rational total = 0;
  for (long a = 0; a <= radius; ++a)
    for (long b = 0; b <= radius; ++b) total += data.n_lambda(Coweight(coxeter::IntVector{a, b}));
  return total;
}

unsigned __int128 A2Ball::pack(const LatticeClass& c) const {
  unsigned __int128 k = 0;
  for (int e : c.exps) k = (k << 4) | static_cast<unsigned>(e);
  for (auto o : c.off) k = (k << 36) | static_cast<std::uint64_t>(o);
  return k;
}

namespace {
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

std::size_t slot_hash(unsigned __int128 k) {
  return static_cast<std::size_t>(splitmix64(static_cast<std::uint64_t>(k) ^ splitmix64(static_cast<std::uint64_t>(k >> 64))));
}
}  // namespace

std::uint32_t A2Ball::find_slot(unsigned __int128 key) const {
  for (std::size_t s = slot_hash(key) & slot_mask_;; s = (s + 1) & slot_mask_) {
    if (slot_ids_[s] == kNone) return kNone;
    if (slot_keys_[s] == key) return slot_ids_[s];
  }
}

void A2Ball::insert_slot(unsigned __int128 key, std::uint32_t id) {
  std::size_t s = slot_hash(key) & slot_mask_;
  while (slot_ids_[s] != kNone) s = (s + 1) & slot_mask_;
  slot_keys_[s] = key;
  slot_ids_[s] = id;
}

A2Ball A2Ball::build(int p, int radius, const BallOptions& options) {
  if (!is_prime(p)) throw std::invalid_argument("p must be prime");
  if (radius < 0 || radius > 4) throw std::invalid_argument("radius must lie in 0..4");
  const int precision = precision_for(radius);
  const Rational predicted = predicted_size(p, radius);
  if (predicted > Rational(static_cast<unsigned long>(options.vertex_limit)))
    throw SizeGuard("ball of radius " + std::to_string(radius) + " at p = " + std::to_string(p) + " would hold " +
                    predicted.get_str() + " vertices");
  if (std::pow(static_cast<double>(p), 2 * radius + 2) >= 0x1.0p36 ||
      std::pow(static_cast<double>(p), precision) >= 0x1.0p40)
    throw SizeGuard("lattice entries exceed the supported precision");

  A2Ball ball;
  ball.p_ = p;
  ball.radius_ = radius;
  ball.data_ = std::make_shared<TypeData>("A2", p);
  const std::size_t degree = 2 * static_cast<std::size_t>(p * p + p + 1);
  ball.stride_ = options.store_adjacency ? degree : 0;
  const std::size_t expected = static_cast<std::size_t>(predicted.get_d());
  ball.classes_.reserve(expected);
  std::size_t slots = 16;
  while (slots < 2 * expected + 2) slots *= 2;
  ball.slot_keys_.assign(slots, 0);
  ball.slot_ids_.assign(slots, kNone);
  ball.slot_mask_ = slots - 1;

  auto add = [&](const LatticeClass& c, const Coweight& s) {
    const auto id = static_cast<std::uint32_t>(ball.classes_.size());
    ball.classes_.push_back(c);
    ball.types_.push_back(static_cast<std::uint8_t>((c.exps[0] + c.exps[1] + c.exps[2]) % 3));
    ball.sigma_.push_back({static_cast<std::uint8_t>(s.coords[0]), static_cast<std::uint8_t>(s.coords[1])});
    ball.interior_.push_back(0);
    ball.insert_slot(ball.pack(c), id);
    return id;
  };
  add(LatticeClass{}, Coweight::zero(2));
  std::vector<std::uint32_t> row(degree);
  const ModRing ring(p, precision);
  const auto spaces = base_neighbor_matrices(ring);
  std::vector<LatticeClass> nbrs;
  for (std::size_t head = 0; head < ball.classes_.size(); ++head) {
    const LatticeClass current = ball.classes_[head];
    neighbor_classes_into(current, ring, spaces, nbrs);
    bool inside_all = true;
    for (std::size_t k = 0; k < nbrs.size(); ++k) {
      const std::uint32_t known = ball.find_slot(ball.pack(nbrs[k]));
      if (known != kNone) {
        row[k] = known;
        continue;
      }
      const Coweight s = sigma_base(nbrs[k], p);
      if (s.coords[0] <= radius && s.coords[1] <= radius) {
        row[k] = add(nbrs[k], s);
      } else {
        row[k] = kNone;
        inside_all = false;
      }
    }
    ball.interior_[head] = inside_all ? 1 : 0;
    if (options.store_adjacency) ball.adjacency_.insert(ball.adjacency_.end(), row.begin(), row.end());
  }
  return ball;
}

std::optional<std::size_t> A2Ball::index_of(const LatticeClass& c) const {
  const std::uint32_t id = find_slot(pack(c));
  if (id == kNone) return std::nullopt;
  return id;
}

Coweight A2Ball::sigma_from_base(std::size_t i) const {
  const auto& s = sigma_.at(i);
  return Coweight(coxeter::IntVector{s[0], s[1]});
}

std::vector<std::size_t> A2Ball::neighbors(std::size_t i) const {
  if (!has_adjacency()) throw std::logic_error("ball was built without adjacency");
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < stride_; ++k) {
    const auto v = adjacency_[i * stride_ + k];
    if (v != kNone) out.push_back(v);
  }
  return out;
}

bool A2Ball::adjacent(std::size_t x, std::size_t y) const {
  if (!has_adjacency()) {
    const Coweight s = sigma(x, y);
    return (s.coords[0] == 1 && s.coords[1] == 0) || (s.coords[0] == 0 && s.coords[1] == 1);
  }
  for (std::size_t k = 0; k < stride_; ++k)
    if (adjacency_[x * stride_ + k] == y) return true;
  return false;
}

Coweight A2Ball::sigma(std::size_t x, std::size_t y) const {
  if (x == base()) return sigma_from_base(y);
  return lattice_sigma(classes_.at(x), classes_.at(y), p_);
}

std::vector<std::size_t> A2Ball::v_lambda(std::size_t x, const Coweight& lambda) const {
  if (lambda.rank() != 2 || !lambda.is_dominant()) throw std::invalid_argument("lambda must be a dominant A2 coweight");
  std::vector<std::size_t> out;
  if (x == base()) {
    if (lambda.coords[0] > radius_ || lambda.coords[1] > radius_)
      throw InsufficientDepth("sphere " + to_string(lambda) + " exceeds the ball");
    for (std::size_t i = 0; i < size(); ++i)
      if (sigma_[i][0] == lambda.coords[0] && sigma_[i][1] == lambda.coords[1]) out.push_back(i);
    return out;
  }
  const long depth = lambda.coords[0] + lambda.coords[1];
  std::unordered_map<std::size_t, long> seen{{x, 0}};
  std::deque<std::size_t> queue{x};
  while (!queue.empty()) {
    const std::size_t v = queue.front();
    queue.pop_front();
    const long d = seen[v];
    if (sigma(x, v) == lambda) out.push_back(v);
    if (d == depth) continue;
    if (!interior(v)) throw InsufficientDepth("sphere search reached the truncation boundary");
    for (auto w : neighbors(v))
      if (seen.emplace(w, d + 1).second) queue.push_back(w);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> A2Ball::chambers_at(std::size_t x) const {
  if (!interior(x)) throw InsufficientDepth("vertex lies on the truncation boundary");
  std::vector<std::size_t> ones, twos;
  for (auto y : neighbors(x)) ((type(y) - type(x) + 3) % 3 == 1 ? ones : twos).push_back(y);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto a : ones)
    for (auto b : twos)
      if (adjacent(a, b)) out.emplace_back(a, b);
  return out;
}

nlohmann::json A2Ball::to_json() const {
  if (!has_adjacency()) throw std::logic_error("ball was built without adjacency");
  nlohmann::json doc;
  auto nodes = nlohmann::json::array();
  auto types = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i) {
    nodes.push_back(classes_[i].label());
    types.push_back(types_[i]);
  }
  auto edges = nlohmann::json::array();
  for (std::size_t i = 0; i < size(); ++i)
    for (auto j : neighbors(i))
      if (i < j) edges.push_back({classes_[i].label(), classes_[j].label(), 1});
  doc["nodes"] = nodes;
  doc["edges"] = edges;
  doc["types"] = types;
  doc["p"] = p_;
  doc["radius"] = radius_;
  return doc;
}

SectorGerm sector_germ(const A2Ball& b, std::size_t o, std::size_t z) {
  const Coweight s = b.sigma(o, z);
  if (s.coords[0] <= 0 || s.coords[1] <= 0) throw std::invalid_argument("sector segment needs a regular sigma(o, z)");
  if (!b.interior(o)) throw InsufficientDepth("sector base lies on the truncation boundary");
  const Coweight l1 = Coweight::fundamental(2, 1), l2 = Coweight::fundamental(2, 2);
  std::vector<std::size_t> ones, twos;
  for (auto y : b.neighbors(o)) {
    const Coweight sy = b.sigma(o, y);
    if (sy + b.sigma(y, z) != s) continue;
    (sy == l1 ? ones : twos).push_back(y);
  }
  if (ones.size() != 1 || twos.size() != 1) throw std::logic_error("sector germ is not unique");
  if (b.sigma(o, ones[0]) != l1 || b.sigma(o, twos[0]) != l2) throw std::logic_error("sector germ has wrong types");
  return {ones[0], twos[0]};
}

LinkOpposition link_opposition_check(const A2Ball& b, std::size_t o, std::size_t z, std::size_t z_prime) {
  LinkOpposition r;
  r.first = sector_germ(b, o, z);
  r.second = sector_germ(b, o, z_prime);
  r.opposite = !b.is_adjacent(r.first.y1, r.second.y2) && !b.is_adjacent(r.second.y1, r.first.y2);
  r.apartment = b.sigma(z, z_prime) == b.sigma(z, o) + b.sigma(o, z_prime);
  return r;
}

// ---------------------------------------------------------------------------
// Finite fields and projective planes

GaloisField::GaloisField(int q) : q_(q), p_(0), k_(0) {
  if (q < 2) throw std::invalid_argument("field order must be at least 2");
  for (int d = 2; d <= q; ++d)
    if (q % d == 0) {
      p_ = d;
      break;
    }
  int m = q;
  while (m % p_ == 0) {
    m /= p_;
    ++k_;
  }
  if (m != 1) throw std::invalid_argument("field order must be a prime power");
  auto digits = [&](int a) {
    std::vector<int> d(static_cast<std::size_t>(k_));
    for (auto& x : d) {
      x = a % p_;
      a /= p_;
    }
    return d;
  };
  auto number = [&](const std::vector<int>& d) {
    int a = 0;
    for (std::size_t i = d.size(); i-- > 0;) a = a * p_ + d[i];
    return a;
  };
  // Monic modulus of degree k: coefficients of x^0..x^{k-1}; irreducible iff
  // no monic factor of degree 1..k/2.
  auto polymod = [&](std::vector<int> a, const std::vector<int>& m) {
    const std::size_t dm = m.size() - 1;
    for (std::size_t i = a.size(); i-- > dm;) {
      const int c = a[i];
      if (c == 0) continue;
      for (std::size_t j = 0; j <= dm; ++j) a[i - dm + j] = ((a[i - dm + j] - c * m[j]) % p_ + p_) % p_;
    }
    a.resize(std::min(a.size(), dm));
    return a;
  };
  std::vector<int> modulus;
  if (k_ > 1) {
    const int count = q;  // candidate low coefficients
    for (int cand = 0; cand < count && modulus.empty(); ++cand) {
      auto m = digits(cand);
      m.push_back(1);
      bool irreducible = true;
      for (int deg = 1; deg <= k_ / 2 && irreducible; ++deg) {
        int total = 1;
        for (int i = 0; i < deg; ++i) total *= p_;
        for (int f = 0; f < total && irreducible; ++f) {
          std::vector<int> g(static_cast<std::size_t>(deg));
          int t = f;
          for (auto& x : g) {
            x = t % p_;
            t /= p_;
          }
          g.push_back(1);
          const auto r = polymod(m, g);
          if (std::all_of(r.begin(), r.end(), [](int x) { return x == 0; })) irreducible = false;
        }
      }
      if (irreducible) modulus = m;
    }
  }
  add_.resize(static_cast<std::size_t>(q * q));
  mul_.resize(static_cast<std::size_t>(q * q));
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b) {
      const auto da = digits(a), db = digits(b);
      std::vector<int> s(static_cast<std::size_t>(k_));
      for (std::size_t i = 0; i < s.size(); ++i) s[i] = (da[i] + db[i]) % p_;
      add_[static_cast<std::size_t>(a * q + b)] = number(s);
      if (k_ == 1) {
        mul_[static_cast<std::size_t>(a * q + b)] = (a * b) % p_;
        continue;
      }
      std::vector<int> prod(static_cast<std::size_t>(2 * k_ - 1), 0);
      for (std::size_t i = 0; i < da.size(); ++i)
        for (std::size_t j = 0; j < db.size(); ++j) prod[i + j] = (prod[i + j] + da[i] * db[j]) % p_;
      auto r = polymod(prod, modulus);
      r.resize(static_cast<std::size_t>(k_), 0);
      mul_[static_cast<std::size_t>(a * q + b)] = number(r);
    }
}

int GaloisField::neg(int a) const {
  for (int b = 0; b < q_; ++b)
    if (add(a, b) == 0) return b;
  throw std::logic_error("no additive inverse");
}

int GaloisField::inv(int a) const {
  for (int b = 1; b < q_; ++b)
    if (mul(a, b) == 1) return b;
  throw std::invalid_argument("zero has no inverse");
}

SphericalA2::SphericalA2(int q) : field_(q), data_(std::make_shared<TypeData>("A2", q)) {
  for (int a = 0; a < q; ++a)
    for (int b = 0; b < q; ++b)
      for (int c = 0; c < q; ++c) {
        const std::array<int, 3> v{a, b, c};
        const auto first = std::find_if(v.begin(), v.end(), [](int x) { return x != 0; });
        if (first != v.end() && *first == 1) points_.push_back(v);
      }
  lines_ = points_;
  const std::size_t n = points_.size();
  incidence_.assign(n, std::vector<char>(n, 0));
  flag_index_.assign(n, std::vector<std::size_t>(n, std::numeric_limits<std::size_t>::max()));
  flags_on_line_.assign(n, {});
  flags_at_point_.assign(n, {});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      int dot = 0;
      for (int k = 0; k < 3; ++k) dot = field_.add(dot, field_.mul(points_[i][k], lines_[j][k]));
      if (dot != 0) continue;
      incidence_[i][j] = 1;
      flag_index_[i][j] = chambers_.size();
      flags_on_line_[j].push_back(chambers_.size());
      flags_at_point_[i].push_back(chambers_.size());
      chambers_.emplace_back(i, j);
    }
}

bool SphericalA2::incident(std::size_t point, std::size_t line) const { return incidence_.at(point).at(line) != 0; }

coxeter::WeylElement SphericalA2::weyl_distance(std::size_t c, std::size_t d) const {
  const auto [p, l] = chambers_.at(c);
  const auto [p2, l2] = chambers_.at(d);
  const auto& w = *data_->group;
  if (p == p2 && l == l2) return w.identity();
  if (l == l2) return w.from_word({1});
  if (p == p2) return w.from_word({2});
  if (incident(p2, l)) return w.from_word({1, 2});
  if (incident(p, l2)) return w.from_word({2, 1});
  return w.longest();
}

int SphericalA2::gallery_distance(std::size_t c, std::size_t d) const {
  std::vector<int> dist(chambers_.size(), -1);
  std::deque<std::size_t> queue{c};
  dist[c] = 0;
  while (!queue.empty()) {
    const auto v = queue.front();
    queue.pop_front();
    if (v == d) return dist[v];
    for (int t = 1; t <= 2; ++t)
      for (auto w : chambers_adjacent(v, t))
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
  }
  throw std::logic_error("chamber graph is disconnected");
}

std::vector<std::size_t> SphericalA2::chambers_adjacent(std::size_t c, int type) const {
  const auto [p, l] = chambers_.at(c);
  std::vector<std::size_t> out;
  if (type == 1) {
    for (auto d : flags_on_line_[l])
      if (d != c) out.push_back(d);
  } else if (type == 2) {
    for (auto d : flags_at_point_[p])
      if (d != c) out.push_back(d);
  } else {
    throw std::invalid_argument("panel type must be 1 or 2");
  }
  return out;
}

std::vector<std::size_t> SphericalA2::residue(std::size_t c, const std::set<int>& j) const {
  std::vector<std::size_t> out;
  for (std::size_t d = 0; d < chambers_.size(); ++d)
    if (data_->group->in_parabolic(weyl_distance(c, d), j)) out.push_back(d);
  return out;
}

std::size_t SphericalA2::proj_residue(const std::vector<std::size_t>& residue, std::size_t c) const {
  if (residue.empty()) throw std::invalid_argument("empty residue");
  int best = std::numeric_limits<int>::max();
  std::vector<std::size_t> winners;
  for (auto d : residue) {
    const int len = weyl_distance(c, d).length();
    if (len < best) {
      best = len;
      winners = {d};
    } else if (len == best) {
      winners.push_back(d);
    }
  }
  if (winners.size() != 1) throw std::logic_error("projection onto residue is not unique");
  return winners.front();
}

OppositeResult opposite_to_both(const SphericalA2& s, std::size_t c, std::size_t c_prime) {
  const int top = s.weyl().longest().length();
  std::size_t current = s.num_chambers();
  for (std::size_t d = 0; d < s.num_chambers(); ++d)
    if (s.weyl_distance(d, c).length() == top) {
      current = d;
      break;
    }
  if (current == s.num_chambers()) throw std::logic_error("no chamber opposite the first");
  OppositeResult r;
  while (s.weyl_distance(current, c_prime).length() < top) {
    if (++r.iterations > top) throw std::logic_error("residue walk did not terminate");
    const int len = s.weyl_distance(current, c_prime).length();
    bool moved = false;
    for (int t = 1; t <= 2 && !moved; ++t)
      for (auto d : s.chambers_adjacent(current, t))
        if (s.weyl_distance(d, c).length() == top && s.weyl_distance(d, c_prime).length() == len + 1) {
          current = d;
          moved = true;
          break;
        }
    if (!moved) throw std::logic_error("residue walk is stuck");
  }
  r.chamber = current;
  return r;
}

}  // namespace chamberwalk::buildings
