#include "chamberwalk/coxeter.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <numeric>
#include <sstream>

#include "chamberwalk/linalg.hpp"
#include "json.hpp"

namespace chamberwalk::coxeter {

namespace {

IntMatrix cartan_for(std::string_view label) {
  if (label == "A1") return {{2}};
  if (label == "A2") return {{2, -1}, {-1, 2}};
  if (label == "A3") return {{2, -1, 0}, {-1, 2, -1}, {0, -1, 2}};
  // alpha_1 long, alpha_2 short.
  if (label == "B2") return {{2, -1}, {-2, 2}};
  // alpha_1 short, alpha_2 long.
  if (label == "C2") return {{2, -2}, {-1, 2}};
  // alpha_1 short, alpha_2 long.
  if (label == "G2") return {{2, -3}, {-1, 2}};
  throw UnsupportedType("unsupported Cartan type: " + std::string(label));
}

IntMatrix identity_int(std::size_t n) {
  IntMatrix m(n, IntVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) m[i][i] = 1;
  return m;
}

IntMatrix mat_mul(const IntMatrix& a, const IntMatrix& b) {
  const std::size_t n = a.size();
  IntMatrix c(n, IntVector(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k) {
      if (a[i][k] == 0) continue;
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
    }
  return c;
}

bool all_nonneg(const IntVector& v) {
  return std::all_of(v.begin(), v.end(), [](long x) { return x >= 0; });
}

bool all_nonpos(const IntVector& v) {
  return std::all_of(v.begin(), v.end(), [](long x) { return x <= 0; });
}

long height(const IntVector& v) { return std::accumulate(v.begin(), v.end(), 0L); }

// s_i(beta) = beta - <beta, alpha_i^vee> alpha_i, with <alpha_j, alpha_i^vee> = A_ij.
IntVector reflect_root(const IntMatrix& cartan, int i, IntVector beta) {
  long pairing = 0;
  for (std::size_t j = 0; j < beta.size(); ++j) pairing += beta[j] * cartan[static_cast<std::size_t>(i)][j];
  beta[static_cast<std::size_t>(i)] -= pairing;
  return beta;
}

}  // namespace

RootSystem RootSystem::from_type(std::string_view label) {
  return from_cartan(std::string(label), cartan_for(label));
}

RootSystem RootSystem::from_cartan(std::string label, IntMatrix cartan) {
  const std::size_t n = cartan.size();
  if (n == 0) throw UnsupportedType("empty Cartan matrix");
  for (const auto& row : cartan)
    if (row.size() != n) throw UnsupportedType("Cartan matrix must be square");
  for (std::size_t i = 0; i < n; ++i) {
    if (cartan[i][i] != 2) throw UnsupportedType("Cartan diagonal must be 2");
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (cartan[i][j] > 0 || (cartan[i][j] == 0) != (cartan[j][i] == 0))
        throw UnsupportedType("invalid off-diagonal Cartan entry");
      if (cartan[i][j] * cartan[j][i] > 3) throw UnsupportedType("affine or hyperbolic bond in " + label);
    }
  }
  RootSystem rs;
  rs.label_ = std::move(label);
  rs.cartan_ = std::move(cartan);
  rs.build();
  return rs;
}

void RootSystem::build() {
  const std::size_t n = cartan_.size();

  // Symmetrizer d_i with d_i A_ij = d_j A_ji; (alpha_i, alpha_i) = 2 d_i.
  std::vector<Rational> d(n, 0);
  for (std::size_t start = 0; start < n; ++start) {
    if (sgn(d[start]) != 0) continue;
    d[start] = 1;
    std::deque<std::size_t> queue{start};
    while (!queue.empty()) {
      const std::size_t i = queue.front();
      queue.pop_front();
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i || cartan_[i][j] == 0) continue;
        const Rational dj = d[i] * Rational(cartan_[i][j]) / Rational(cartan_[j][i]);
        if (sgn(d[j]) == 0) {
          d[j] = dj;
          queue.push_back(j);
        } else if (d[j] != dj) {
          throw UnsupportedType("Cartan matrix is not symmetrizable");
        }
      }
    }
  }
  const Rational smallest = *std::min_element(d.begin(), d.end());
  for (auto& v : d) v /= smallest;

  gram_.assign(n, RationalVector(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) gram_[i][j] = d[i] * cartan_[i][j];

  // det(A) by exact elimination.
  {
    RationalMatrix a(n, RationalVector(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) a[i][j] = cartan_[i][j];
    Rational det = 1;
    for (std::size_t c = 0; c < n; ++c) {
      std::size_t p = c;
      while (p < n && sgn(a[p][c]) == 0) ++p;
      if (p == n) throw UnsupportedType("singular Cartan matrix");
      if (p != c) {
        std::swap(a[p], a[c]);
        det = -det;
      }
      det *= a[c][c];
      for (std::size_t r = c + 1; r < n; ++r) {
        const Rational f = a[r][c] / a[c][c];
        for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      }
    }
    det_ = det.get_num().get_si();
  }

  // Roots: closure of the simple roots under simple reflections.
  std::set<IntVector> roots;
  std::vector<IntVector> frontier;
  for (std::size_t i = 0; i < n; ++i) {
    IntVector e(n, 0);
    e[i] = 1;
    frontier.push_back(e);
    roots.insert(e);
  }
  while (!frontier.empty()) {
    std::vector<IntVector> next;
    for (const auto& beta : frontier)
      for (std::size_t i = 0; i < n; ++i) {
        IntVector img = reflect_root(cartan_, static_cast<int>(i), beta);
        if (roots.insert(img).second) next.push_back(std::move(img));
      }
    frontier = std::move(next);
  }
  positive_.clear();
  for (const auto& r : roots)
    if (all_nonneg(r)) positive_.push_back(r);
  std::sort(positive_.begin(), positive_.end(), [](const IntVector& a, const IntVector& b) {
    const long ha = height(a), hb = height(b);
    return ha != hb ? ha < hb : a < b;
  });
  highest_ = positive_.back();

  // W0-orbit of each simple root.
  positive_class_.assign(positive_.size(), 0);
  for (std::size_t i = 0; i < n; ++i) {
    IntVector e(n, 0);
    e[i] = 1;
    std::set<IntVector> orbit{e};
    std::vector<IntVector> todo{e};
    while (!todo.empty()) {
      IntVector beta = todo.back();
      todo.pop_back();
      for (std::size_t k = 0; k < n; ++k) {
        IntVector img = reflect_root(cartan_, static_cast<int>(k), beta);
        if (orbit.insert(img).second) todo.push_back(img);
      }
    }
    for (std::size_t r = 0; r < positive_.size(); ++r)
      if (positive_class_[r] == 0 && orbit.count(positive_[r])) positive_class_[r] = static_cast<int>(i + 1);
  }

  // Fundamental coweights: rows of the inverse Gram matrix.
  coweights_ = linalg::solve_exact(gram_, identity_matrix(n));
  // solve_exact returns G^{-1}; G symmetric so rows and columns agree.
}

std::vector<RationalVector> RootSystem::simple_roots() const {
  const std::size_t n = cartan_.size();
  std::vector<RationalVector> out(n, RationalVector(n, 0));
  for (std::size_t i = 0; i < n; ++i) out[i][i] = 1;
  return out;
}

Rational RootSystem::inner(const RationalVector& x, const RationalVector& y) const {
  Rational s = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j) s += x[i] * gram_[i][j] * y[j];
  return s;
}

int RootSystem::simple_class_of(const IntVector& root) const {
  const IntVector pos = all_nonpos(root) ? [&] {
    IntVector r = root;
    for (auto& x : r) x = -x;
    return r;
  }()
                                         : root;
  for (std::size_t r = 0; r < positive_.size(); ++r)
    if (positive_[r] == pos) return positive_class_[r];
  throw std::invalid_argument("not a root");
}

bool RootSystem::is_root(const IntVector& v) const {
  IntVector neg = v;
  for (auto& x : neg) x = -x;
  return std::find(positive_.begin(), positive_.end(), v) != positive_.end() ||
         std::find(positive_.begin(), positive_.end(), neg) != positive_.end();
}

// ---------------------------------------------------------------------------

Coweight Coweight::fundamental(int rank, int i) {
  Coweight c = zero(rank);
  c.coords.at(static_cast<std::size_t>(i - 1)) = 1;
  return c;
}

bool Coweight::is_dominant() const { return all_nonneg(coords); }

bool Coweight::is_zero() const {
  return std::all_of(coords.begin(), coords.end(), [](long x) { return x == 0; });
}

Coweight Coweight::operator+(const Coweight& o) const {
  Coweight r = *this;
  for (std::size_t i = 0; i < coords.size(); ++i) r.coords[i] += o.coords.at(i);
  return r;
}

Coweight Coweight::operator-(const Coweight& o) const { return *this + (-o); }

Coweight Coweight::operator-() const { return scaled(-1); }

Coweight Coweight::scaled(long k) const {
  Coweight r = *this;
  for (auto& x : r.coords) x *= k;
  return r;
}

std::string to_string(const Coweight& c) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < c.coords.size(); ++i) os << (i ? "," : "") << c.coords[i];
  os << ')';
  return os.str();
}

std::string to_string(const Word& w) {
  if (w.empty()) return "e";
  std::string s;
  for (int i : w) s += std::to_string(i);
  return s;
}

IntVector WeylElement::apply(const IntVector& v) const {
  IntVector out(v.size(), 0);
  for (std::size_t r = 0; r < v.size(); ++r)
    for (std::size_t c = 0; c < v.size(); ++c) out[r] += matrix_[r][c] * v[c];
  return out;
}

// ---------------------------------------------------------------------------

WeylGroup::WeylGroup(const RootSystem& rs) : rs_(&rs) {
  const std::size_t n = static_cast<std::size_t>(rs.rank());
  const auto& a = rs.cartan();
  for (std::size_t i = 0; i < n; ++i) {
    IntMatrix m = identity_int(n);
    for (std::size_t j = 0; j < n; ++j) m[i][j] -= a[i][j];
    simple_.push_back(m);
    IntMatrix cw = identity_int(n);
    // On coweight coordinates: c_j -> c_j - c_i A_ij.
    for (std::size_t j = 0; j < n; ++j) cw[j][i] -= a[i][j];
    simple_coweight_.push_back(cw);
  }
  // Breadth-first closure; BFS depth is the Coxeter length.
  elements_.emplace_back(identity_int(n), Word{});
  index_[elements_.back().matrix()] = 0;
  for (std::size_t head = 0; head < elements_.size(); ++head) {
    if (elements_.size() > 100000) throw UnsupportedType("Weyl group too large");
    for (std::size_t i = 0; i < n; ++i) {
      IntMatrix m = mat_mul(simple_[i], elements_[head].matrix());
      if (index_.count(m)) continue;
      Word w{static_cast<int>(i + 1)};
      const Word& tail = elements_[head].word();
      w.insert(w.end(), tail.begin(), tail.end());
      index_[m] = elements_.size();
      elements_.emplace_back(std::move(m), std::move(w));
    }
  }
}

std::size_t WeylGroup::index_of(const IntMatrix& m) const {
  auto it = index_.find(m);
  if (it == index_.end()) throw std::logic_error("matrix is not an element of W0");
  return it->second;
}

WeylElement WeylGroup::generator(int i) const {
  return elements_[index_of(simple_.at(static_cast<std::size_t>(i - 1)))];
}

WeylElement WeylGroup::longest() const {
  return *std::max_element(elements_.begin(), elements_.end(),
                           [](const WeylElement& a, const WeylElement& b) { return a.length() < b.length(); });
}

WeylElement WeylGroup::multiply(const WeylElement& a, const WeylElement& b) const {
  return elements_[index_of(mat_mul(a.matrix(), b.matrix()))];
}

WeylElement WeylGroup::inverse(const WeylElement& w) const {
  Word rev(w.word().rbegin(), w.word().rend());
  return from_word(rev);
}

WeylElement WeylGroup::from_word(const Word& word) const {
  IntMatrix m = identity_int(static_cast<std::size_t>(rs_->rank()));
  for (int i : word) m = mat_mul(m, simple_.at(static_cast<std::size_t>(i - 1)));
  return elements_[index_of(m)];
}

int WeylGroup::inversion_count(const WeylElement& w) const {
  int count = 0;
  for (const auto& beta : rs_->positive_roots())
    if (all_nonpos(w.apply(beta))) ++count;
  return count;
}

Word WeylGroup::reduced_word(const WeylElement& w) const {
  Word word;
  IntMatrix current = w.matrix();
  int len = inversion_count(w);
  while (len > 0) {
    bool found = false;
    for (std::size_t i = 0; i < simple_.size(); ++i) {
      IntMatrix shorter = mat_mul(simple_[i], current);
      const int l = inversion_count(elements_[index_of(shorter)]);
      if (l < len) {
        word.push_back(static_cast<int>(i + 1));
        current = std::move(shorter);
        len = l;
        found = true;
        break;
      }
    }
    if (!found) throw std::logic_error("descent algorithm stalled");
  }
  return word;
}

std::vector<Word> WeylGroup::all_reduced_words(const WeylElement& w) const {
  std::vector<Word> out;
  const int len = inversion_count(w);
  if (len == 0) return {Word{}};
  for (std::size_t i = 0; i < simple_.size(); ++i) {
    const WeylElement shorter = elements_[index_of(mat_mul(simple_[i], w.matrix()))];
    if (inversion_count(shorter) >= len) continue;
    for (Word tail : all_reduced_words(shorter)) {
      tail.insert(tail.begin(), static_cast<int>(i + 1));
      out.push_back(std::move(tail));
    }
  }
  return out;
}

Coweight WeylGroup::act(const WeylElement& w, const Coweight& c) const {
  Coweight out = c;
  for (auto it = w.word().rbegin(); it != w.word().rend(); ++it) {
    const auto& m = simple_coweight_[static_cast<std::size_t>(*it - 1)];
    IntVector next(out.coords.size(), 0);
    for (std::size_t r = 0; r < next.size(); ++r)
      for (std::size_t k = 0; k < next.size(); ++k) next[r] += m[r][k] * out.coords[k];
    out.coords = std::move(next);
  }
  return out;
}

Coweight WeylGroup::iota(const Coweight& c) const { return -act(longest(), c); }

Coweight WeylGroup::dominant_representative(const Coweight& c) const {
  for (const auto& w : elements_) {
    Coweight img = act(w, c);
    if (img.is_dominant()) return img;
  }
  throw std::logic_error("no dominant representative");
}

std::vector<WeylElement> WeylGroup::stabilizer(const Coweight& c) const {
  std::vector<WeylElement> out;
  for (const auto& w : elements_)
    if (act(w, c) == c) out.push_back(w);
  return out;
}

bool WeylGroup::in_parabolic(const WeylElement& w, const std::set<int>& generators) const {
  return std::all_of(w.word().begin(), w.word().end(), [&](int i) { return generators.count(i) > 0; });
}

std::vector<WeylElement> WeylGroup::parabolic(const std::set<int>& generators) const {
  for (int i : generators)
    if (i < 1 || i > rs_->rank()) throw std::invalid_argument("generator index out of range");
  std::vector<WeylElement> out;
  for (const auto& w : elements_)
    if (in_parabolic(w, generators)) out.push_back(w);
  return out;
}

WeylElement WeylGroup::longest_element(const std::set<int>& generators) const {
  const auto sub = parabolic(generators);
  return *std::max_element(sub.begin(), sub.end(),
                           [](const WeylElement& a, const WeylElement& b) { return a.length() < b.length(); });
}

std::vector<WeylElement> enumerate_weyl(const WeylGroup& group) { return group.elements(); }

// ---------------------------------------------------------------------------

std::vector<int> affine_reflection_classes(const RootSystem& rs) {
  const int n = rs.rank();
  // Node 0 is alpha_0 = -highest root.
  std::vector<RationalVector> nodes;
  RationalVector a0(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) a0[static_cast<std::size_t>(i)] = -rs.highest_root()[static_cast<std::size_t>(i)];
  nodes.push_back(a0);
  for (const auto& s : rs.simple_roots()) nodes.push_back(s);

  std::vector<int> parent(static_cast<std::size_t>(n + 1));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)];
    return x;
  };
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const auto& x = nodes[static_cast<std::size_t>(i)];
      const auto& y = nodes[static_cast<std::size_t>(j)];
      const Rational xy = rs.inner(x, y);
      const Rational product = 4 * xy * xy / (rs.inner(x, x) * rs.inner(y, y));
      if (product == 1) parent[static_cast<std::size_t>(find(i))] = find(j);  // m_ij = 3
    }
  std::vector<int> classes(static_cast<std::size_t>(n + 1));
  for (int i = 0; i <= n; ++i) classes[static_cast<std::size_t>(i)] = find(i);
  return classes;
}

ThicknessVector::ThicknessVector(const RootSystem& rs, std::vector<long> q) : q_(std::move(q)) {
  if (q_.size() != static_cast<std::size_t>(rs.rank() + 1))
    throw std::invalid_argument("thickness vector needs rank+1 entries");
  for (long v : q_)
    if (v < 1) throw std::invalid_argument("thickness parameters must be positive");
  const auto classes = affine_reflection_classes(rs);
  for (std::size_t i = 0; i < q_.size(); ++i)
    for (std::size_t j = 0; j < q_.size(); ++j)
      if (classes[i] == classes[j] && q_[i] != q_[j])
        throw std::invalid_argument("thickness must be constant on conjugate reflections");
}

ThicknessVector ThicknessVector::uniform(const RootSystem& rs, long q) {
  return ThicknessVector(rs, std::vector<long>(static_cast<std::size_t>(rs.rank() + 1), q));
}

long ThicknessVector::for_root(const RootSystem& rs, const IntVector& root) const {
  return at(rs.simple_class_of(root));
}

Rational ThicknessVector::for_word(const Word& w) const {
  Rational r = 1;
  for (int i : w) r *= at(i);
  return r;
}

Rational poincare_sum(const std::vector<WeylElement>& subset, const ThicknessVector& q) {
  Rational s = 0;
  for (const auto& w : subset) s += 1 / q.for_word(w.word());
  return s;
}

Rational chi(const Coweight& lambda, const RootSystem& rs, const ThicknessVector& q) {
  Rational r = 1;
  for (const auto& alpha : rs.positive_roots()) {
    long pairing = 0;
    for (std::size_t j = 0; j < alpha.size(); ++j) pairing += alpha[j] * lambda.coords.at(j);
    r *= power(Rational(q.for_root(rs, alpha)), pairing);
  }
  return r;
}

std::vector<WeylElement> stabilizer_subgroup(const Coweight& lambda, const WeylGroup& group) {
  return group.stabilizer(lambda);
}

Rational n_lambda(const Coweight& lambda, const WeylGroup& group, const ThicknessVector& q) {
  if (!lambda.is_dominant()) throw NotDominant("N_lambda requires a dominant coweight, got " + to_string(lambda));
  const Rational value = poincare_sum(group.elements(), q) / poincare_sum(group.stabilizer(lambda), q) *
                         chi(lambda, group.root_system(), q);
  if (value.get_den() != 1) throw std::logic_error("N_lambda is not an integer: " + value.get_str());
  return value;
}

// ---------------------------------------------------------------------------

CoweightTypes::CoweightTypes(const RootSystem& rs) {
  const std::size_t n = static_cast<std::size_t>(rs.rank());
  RationalMatrix a(n, RationalVector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = rs.cartan()[i][j];
  inverse_cartan_ = linalg::solve_exact(a, identity_matrix(n));
  // Q first, then the fundamental coweights in order, then anything else.
  auto add = [&](const Coweight& c) {
    RationalVector k = key(c);
    if (std::find(classes_.begin(), classes_.end(), k) == classes_.end()) classes_.push_back(std::move(k));
  };
  add(Coweight::zero(rs.rank()));
  for (int i = 1; i <= rs.rank(); ++i) add(Coweight::fundamental(rs.rank(), i));
  const long det = rs.fundamental_group_order();
  IntVector c(n, 0);
  std::function<void(std::size_t)> scan = [&](std::size_t pos) {
    if (pos == n) {
      add(Coweight(c));
      return;
    }
    for (long v = 0; v < det; ++v) {
      c[pos] = v;
      scan(pos + 1);
    }
  };
  scan(0);
}

RationalVector CoweightTypes::key(const Coweight& c) const {
  // c = x^T A, so x = c A^{-1}; the class in P/Q is x mod Z^n.
  const std::size_t n = c.coords.size();
  RationalVector x(n, 0);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) x[j] += Rational(c.coords[i]) * inverse_cartan_[i][j];
  for (auto& v : x) {
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), v.get_num_mpz_t(), v.get_den_mpz_t());
    v -= fl;
  }
  return x;
}

int CoweightTypes::type_of(const Coweight& c) const {
  const RationalVector k = key(c);
  auto it = std::find(classes_.begin(), classes_.end(), k);
  if (it == classes_.end()) throw std::logic_error("coweight type not enumerated");
  return static_cast<int>(it - classes_.begin());
}

std::vector<Coweight> dominated_dominant(const Coweight& lambda, const RootSystem& rs) {
  if (!lambda.is_dominant()) throw NotDominant("dominance enumeration needs a dominant coweight");
  const std::size_t n = lambda.coords.size();
  RationalMatrix a(n, RationalVector(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = rs.cartan()[i][j];
  const RationalMatrix inv = linalg::solve_exact(a, identity_matrix(n));
  // lambda = sum x_i alpha_i^vee; a dominant mu <= lambda has lambda - mu = sum n_i alpha_i^vee
  // with 0 <= n_i <= x_i.
  std::vector<long> bound(n, 0);
  for (std::size_t j = 0; j < n; ++j) {
    Rational x = 0;
    for (std::size_t i = 0; i < n; ++i) x += Rational(lambda.coords[i]) * inv[i][j];
    mpz_class fl;
    mpz_fdiv_q(fl.get_mpz_t(), x.get_num_mpz_t(), x.get_den_mpz_t());
    bound[j] = fl.get_si();
  }
  std::vector<Coweight> out;
  IntVector counts(n, 0);
  std::function<void(std::size_t)> scan = [&](std::size_t pos) {
    if (pos == n) {
      Coweight mu = lambda;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) mu.coords[j] -= counts[i] * rs.cartan()[i][j];
      if (mu.is_dominant()) out.push_back(mu);
      return;
    }
    for (long v = 0; v <= bound[pos]; ++v) {
      counts[pos] = v;
      scan(pos + 1);
    }
  };
  scan(0);
  std::sort(out.begin(), out.end());
  return out;
}

CartanSpec parse_cartan_spec(const std::string& json_text) {
  const auto doc = nlohmann::json::parse(json_text);
  CartanSpec spec;
  spec.type = doc.at("type").get<std::string>();
  spec.rank = doc.at("rank").get<int>();
  spec.q = doc.at("q").get<std::vector<long>>();
  if (static_cast<int>(spec.q.size()) != spec.rank + 1)
    throw std::invalid_argument("cartan spec: q must have rank+1 entries");
  return spec;
}

}  // namespace chamberwalk::coxeter
