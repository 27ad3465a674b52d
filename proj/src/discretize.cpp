#include "chamberwalk/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <unordered_map>

namespace chamberwalk::discretize {

namespace {

constexpr std::size_t kAlwaysExact = std::numeric_limits<std::size_t>::max();

Rational max_abs(const Rational& a, const Rational& b) { return std::max<Rational>(a, abs(b)); }

}  // namespace

InducedKernel induced_kernel_exact(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y) {
  if (y.empty()) throw std::invalid_argument("induced kernel: Y is empty");
  const auto a = netwalk::absorption(k, y, kAlwaysExact);
  InducedKernel out;
  out.subset.assign(y.begin(), y.end());
  out.provenance = "exact-solve";
  std::vector<std::map<std::size_t, Rational>> rows(out.subset.size());
  for (std::size_t i = 0; i < out.subset.size(); ++i) {
    for (const auto& [z, p] : k.row(out.subset[i])) {
      Rational reached = 0;
      for (std::size_t j = 0; j < out.subset.size(); ++j) {
        const Rational& h = a.exact[z][j];
        if (sgn(h) == 0) continue;
        rows[i][j] += p * h;
        reached += h;
      }
      if (reached != 1) throw std::invalid_argument("induced kernel: Y is not reached with probability one");
    }
  }
  out.kernel = netwalk::MarkovKernel::from_rows(std::move(rows));
  return out;
}

InducedRowEstimate induced_row_mc(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y, std::size_t x,
                                  std::uint64_t samples, std::uint64_t seed, unsigned workers,
                                  std::uint64_t horizon) {
  InducedRowEstimate out;
  out.subset.assign(y.begin(), y.end());
  out.samples = samples;
  std::vector<long> pos(k.size(), -1);
  for (std::size_t i = 0; i < out.subset.size(); ++i) pos[out.subset[i]] = static_cast<long>(i);
  struct Partial {
    std::vector<std::uint64_t> counts;
    std::uint64_t unresolved = 0;
  };
  const std::size_t cells = out.subset.size();
  auto parts = run_chunks<Partial>(samples, seed, workers, [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
    Partial p;
    p.counts.assign(cells, 0);
    for (std::uint64_t s = 0; s < count; ++s) {
      std::size_t z = x;
      std::uint64_t t = 0;
      do {
        z = k.sample_next(z, rng);
        ++t;
      } while (pos[z] < 0 && t < horizon);
      if (pos[z] >= 0) ++p.counts[static_cast<std::size_t>(pos[z])];
      else ++p.unresolved;
    }
    return p;
  });
  out.counts.assign(cells, 0);
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < cells; ++i) out.counts[i] += p.counts[i];
    out.unresolved += p.unresolved;
  }
  return out;
}

TransferReport harmonic_transfer_check(const netwalk::MarkovKernel& k, const std::set<std::size_t>& y,
                                       const RationalVector& f) {
  if (f.size() != y.size()) throw std::invalid_argument("harmonic transfer: f must have one value per element of Y");
  const auto a = netwalk::absorption(k, y, kAlwaysExact);
  const std::vector<std::size_t> ys(y.begin(), y.end());
  TransferReport r;
  r.extension.assign(k.size(), 0);
  for (std::size_t x = 0; x < k.size(); ++x)
    for (std::size_t j = 0; j < ys.size(); ++j) r.extension[x] += a.exact[x][j] * f[j];

  RationalVector ph(k.size(), 0);
  for (std::size_t x = 0; x < k.size(); ++x)
    for (const auto& [z, p] : k.row(x)) ph[x] += p * r.extension[z];

  const auto q = induced_kernel_exact(k, y);
  r.f_q_harmonic = true;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    Rational qf = 0;
    for (const auto& [j, p] : q.kernel.row(i)) qf += p * f[j];
    if (qf != f[i]) r.f_q_harmonic = false;
    r.defect_on_y = max_abs(r.defect_on_y, r.extension[ys[i]] - f[i]);
    r.transfer_defect = max_abs(r.transfer_defect, ph[ys[i]] - qf);
  }
  for (std::size_t x = 0; x < k.size(); ++x) {
    const Rational d = ph[x] - r.extension[x];
    r.defect_everywhere = max_abs(r.defect_everywhere, d);
    if (!y.count(x)) r.defect_off_y = max_abs(r.defect_off_y, d);
  }
  return r;
}

// ---------------------------------------------------------------------------

std::optional<LatticeEntry> LatticeMeasure::find(const action::GroupWord& g) const {
  for (const auto& e : entries)
    if (e.element == g) return e;
  return std::nullopt;
}

double LatticeMeasure::total_mass() const {
  double total = 0.0;
  for (const auto& e : entries) total += e.prob;
  return total;
}

nlohmann::json LatticeMeasure::to_json() const {
  nlohmann::json doc;
  doc["base"] = base;
  doc["stabilizer_order"] = stabilizer_order;
  doc["provenance"] = provenance;
  doc["symmetric"] = symmetry_checked ? nlohmann::json(symmetric) : nlohmann::json("unchecked");
  doc["admissibility"] = action::to_string(admissibility);
  if (provenance == "monte-carlo") {
    doc["samples"] = samples;
    doc["unresolved"] = unresolved;
  }
  auto list = nlohmann::json::array();
  for (const auto& e : entries) {
    nlohmann::json item{{"element", e.element}, {"prob", e.prob}};
    if (e.exact) item["exact"] = e.exact->get_str();
    list.push_back(item);
  }
  doc["measure"] = list;
  return doc;
}

namespace {

struct Accumulator {
  std::map<action::GroupWord, double> prob;
  std::map<action::GroupWord, Rational> exact;
  bool all_exact = true;
};

void spread(Accumulator& acc, const action::GroupAction& act, const netwalk::NodeKey& o, const netwalk::NodeKey& y,
            double p, const std::optional<Rational>& exact, std::uint64_t stab) {
  const auto words = act.elements_to(o, y);
  if (words.size() != stab) throw action::InvalidAction("stabilizer order disagrees with the elements mapping o to " + y);
  for (const auto& w : words) {
    acc.prob[w] += p / static_cast<double>(stab);
    if (exact) acc.exact[w] += *exact / Rational(stab);
  }
  if (!exact) acc.all_exact = false;
}

}  // namespace

LatticeMeasure discretize_lattice(const netwalk::LazyNetwork& net, const action::GroupAction& act,
                                  const netwalk::NodeKey& o, const DiscretizeOptions& options) {
  const auto cov = action::covolume(net, act);
  if (cov.verdict != "finite") throw action::InvalidAction("recurrence verdict unknown: covolume not certified");
  LatticeMeasure mu;
  mu.base = o;
  mu.stabilizer_order = act.stabilizer_order(o);
  const std::uint64_t stab = mu.stabilizer_order;
  const netwalk::NodeKey orbit = act.canonical(o);
  auto in_orbit = [&](const netwalk::NodeKey& z) { return act.canonical(z) == orbit; };

  Accumulator acc;
  const auto start = net.neighbors(o);
  Rational m_o = 0;
  for (const auto& [z, a] : start) m_o += a;

  if (options.allow_fast_path && cov.domain.size() == 1) {
    mu.provenance = "transitive-fast-path";
    std::map<netwalk::NodeKey, Rational> step;
    for (const auto& [z, a] : start) step[z] += a / m_o;
    for (const auto& [z, p] : step) spread(acc, act, o, z, p.get_d(), p, stab);
  } else {
    // Excursion region: nodes reachable from o without touching the orbit.
    std::unordered_map<netwalk::NodeKey, std::size_t> region_index, target_index;
    std::vector<netwalk::NodeKey> region, targets;
    std::deque<netwalk::NodeKey> queue;
    auto visit = [&](const netwalk::NodeKey& z) {
      if (in_orbit(z)) {
        if (target_index.emplace(z, targets.size()).second) targets.push_back(z);
      } else if (region_index.emplace(z, region.size()).second) {
        region.push_back(z);
        queue.push_back(z);
      }
    };
    for (const auto& [z, a] : start) visit(z);
    bool too_large = false;
    while (!queue.empty() && !too_large) {
      const auto z = queue.front();
      queue.pop_front();
      for (const auto& [w, a] : net.neighbors(z)) {
        visit(w);
        if (region.size() > options.region_limit) {
          too_large = true;
          break;
        }
      }
    }
    if (!too_large) {
      mu.provenance = "exact-solve";
      const std::size_t r = region.size(), t = targets.size();
      std::vector<std::map<std::size_t, Rational>> rows(r + t);
      auto node_index = [&](const netwalk::NodeKey& z) {
        auto it = region_index.find(z);
        return it != region_index.end() ? it->second : r + target_index.at(z);
      };
      for (std::size_t i = 0; i < r; ++i) {
        const auto nb = net.neighbors(region[i]);
        Rational m = 0;
        for (const auto& [w, a] : nb) m += a;
        for (const auto& [w, a] : nb) rows[i][node_index(w)] += a / m;
      }
      for (std::size_t j = 0; j < t; ++j) rows[r + j][r + j] = 1;
      const auto chain = netwalk::MarkovKernel::from_rows(std::move(rows));
      std::set<std::size_t> absorbing;
      for (std::size_t j = 0; j < t; ++j) absorbing.insert(r + j);
      const auto h = netwalk::absorption(chain, absorbing);
      if (h.substochastic) throw action::InvalidAction("the orbit of o is not reached with probability one");
      std::vector<double> q(t, 0.0);
      RationalVector qx(t, 0);
      for (const auto& [z, a] : start) {
        const std::size_t i = node_index(z);
        for (std::size_t j = 0; j < t; ++j) {
          q[j] += Rational(a / m_o).get_d() * h.approx[i][j];
          if (h.exact_path) qx[j] += a / m_o * h.exact[i][j];
        }
      }
      for (std::size_t j = 0; j < t; ++j) {
        if (h.exact_path) {
          if (sgn(qx[j]) != 0) spread(acc, act, o, targets[j], qx[j].get_d(), qx[j], stab);
        } else if (q[j] > 0.0) {
          spread(acc, act, o, targets[j], q[j], std::nullopt, stab);
        }
      }
    } else {
      mu.provenance = "monte-carlo";
      mu.samples = options.mc_samples;
      const netwalk::NetworkKernel walk(net);
      struct Partial {
        std::map<netwalk::NodeKey, std::uint64_t> landing;
        std::uint64_t unresolved = 0;
      };
      auto parts = run_chunks<Partial>(options.mc_samples, options.seed, options.workers,
                                       [&](RngStream& rng, std::uint64_t, std::uint64_t count) {
                                         Partial p;
                                         for (std::uint64_t s = 0; s < count; ++s) {
                                           netwalk::NodeKey z = o;
                                           std::uint64_t steps = 0;
                                           do {
                                             z = walk.sample_next(z, rng);
                                             ++steps;
                                           } while (!in_orbit(z) && steps < options.horizon);
                                           if (in_orbit(z)) ++p.landing[z];
                                           else ++p.unresolved;
                                         }
                                         return p;
                                       });
      std::map<netwalk::NodeKey, std::uint64_t> landing;
      for (const auto& p : parts) {
        for (const auto& [z, c] : p.landing) landing[z] += c;
        mu.unresolved += p.unresolved;
      }
      for (const auto& [z, c] : landing)
        spread(acc, act, o, z, static_cast<double>(c) / static_cast<double>(options.mc_samples), std::nullopt, stab);
    }
  }

  std::vector<action::GroupWord> support;
  for (const auto& [w, p] : acc.prob) {
    LatticeEntry e{w, p, std::nullopt};
    if (acc.all_exact) {
      e.exact = acc.exact[w];
      e.prob = e.exact->get_d();
    }
    mu.entries.push_back(e);
    if (p > 0.0) support.push_back(w);
  }
  if (acc.all_exact) {
    mu.symmetry_checked = true;
    mu.symmetric = true;
    for (const auto& e : mu.entries) {
      const auto inv = acc.exact.find(act.inverse(e.element));
      const Rational other = inv == acc.exact.end() ? Rational(0) : inv->second;
      if (other != *e.exact) mu.symmetric = false;
    }
  }
  mu.admissibility = act.generated_by(support);
  return mu;
}

Moment moment(const LatticeMeasure& mu, const netwalk::LazyNetwork& net, const action::GroupAction& act,
              const std::string& kind, double c) {
  if (kind != "first" && kind != "exponential") throw std::invalid_argument("moment kind must be first or exponential");
  Moment out;
  Rational exact = 0;
  bool all_exact = true;
  for (const auto& e : mu.entries) {
    const auto d = netwalk::graph_distance(net, mu.base, act.apply(e.element, mu.base), 4096);
    if (!d) throw std::invalid_argument("moment: displacement of " + e.element + " is out of reach");
    if (kind == "first") {
      out.value += e.prob * static_cast<double>(*d);
      if (e.exact) exact += *e.exact * Rational(*d);
      else all_exact = false;
    } else {
      out.value += e.prob * std::exp(c * static_cast<double>(*d));
    }
  }
  if (kind == "first" && all_exact) {
    out.exact = exact;
    out.value = exact.get_d();
  }
  return out;
}

}  // namespace chamberwalk::discretize
