#include "chamberwalk/cli.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "chamberwalk/action.hpp"
#include "chamberwalk/buildings.hpp"
#include "chamberwalk/coxeter.hpp"
#include "chamberwalk/discretize.hpp"
#include "chamberwalk/netwalk.hpp"
#include "chamberwalk/stats.hpp"
#include "chamberwalk/suites.hpp"
#include "json.hpp"

namespace chamberwalk::cli {

using nlohmann::json;

namespace {

struct SchemaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Kind { integer, count, text, flag, list, network, object };

struct Key {
  std::string name;
  Kind kind;
  std::string help;
};

const std::vector<Key>& common_keys() {
  static const std::vector<Key> keys{{"seed", Kind::count, "master seed (required by stochastic commands)"},
                                     {"samples", Kind::count, "Monte Carlo sample count"},
                                     {"workers", Kind::count, "worker threads; reports do not depend on it"},
                                     {"out", Kind::text, "output directory (report.json or report.csv)"},
                                     {"format", Kind::text, "json or csv"}};
  return keys;
}

const std::map<std::string, std::vector<Key>>& command_keys() {
  static const std::map<std::string, std::vector<Key>> keys{
      {"coxeter-tables",
       {{"type", Kind::text, "Cartan type: A1, A2, A3, B2, C2, G2"},
        {"q", Kind::integer, "uniform thickness"},
        {"max", Kind::integer, "largest coweight coordinate"}}},
      {"ball",
       {{"p", Kind::integer, "prime (2 or 3)"},
        {"radius", Kind::integer, "box radius R"},
        {"vertex_limit", Kind::count, "size guard"},
        {"export", Kind::flag, "include nodes and edges in the report"}}},
      {"simulate",
       {{"network", Kind::network, "network JSON file"},
        {"start", Kind::text, "start node label"},
        {"steps", Kind::count, "trajectory length"}}},
      {"induce",
       {{"network", Kind::network, "network JSON file"},
        {"subset", Kind::list, "comma-separated node labels of Y"},
        {"start", Kind::text, "row estimated by Monte Carlo when samples are given"}}},
      {"quotient",
       {{"family", Kind::text, "z-line, tree, free2-tree or network"},
        {"action", Kind::text, "translation or dihedral (z-line)"},
        {"k", Kind::integer, "translation step"},
        {"q", Kind::integer, "tree thickness"},
        {"network", Kind::network, "network JSON file (family network)"},
        {"action_file", Kind::network, "permutation generators JSON file (family network)"},
        {"start", Kind::text, "start node of the quotient-law check"},
        {"steps", Kind::count, "steps of the quotient-law check"}}},
      {"discretize",
       {{"family", Kind::text, "z-line, tree, free2-tree or network"},
        {"action", Kind::text, "translation or dihedral (z-line)"},
        {"k", Kind::integer, "translation step"},
        {"q", Kind::integer, "tree thickness"},
        {"network", Kind::network, "network JSON file (family network)"},
        {"action_file", Kind::network, "permutation generators JSON file (family network)"},
        {"base", Kind::text, "base point o"}}},
      {"verify",
       {{"suite", Kind::text, "suite name"},
        {"suites", Kind::list, "comma-separated suite names"},
        {"q", Kind::integer, "thickness parameter passed to the suites"},
        {"p", Kind::integer, "prime parameter passed to the suites"},
        {"radius", Kind::integer, "ball radius passed to the suites"},
        {"params", Kind::object, "suite parameters (config file only)"}}}};
  return keys;
}

const Key* find_key(const std::string& command, const std::string& name) {
  for (const auto& k : common_keys())
    if (k.name == name) return &k;
  for (const auto& k : command_keys().at(command))
    if (k.name == name) return &k;
  return nullptr;
}

std::string flag_name(const std::string& key) {
  std::string s = key;
  for (auto& c : s)
    if (c == '_') c = '-';
  return "--" + s;
}

void check_type(const Key& key, const json& v) {
  bool ok = false;
  switch (key.kind) {
    case Kind::integer: ok = v.is_number_integer(); break;
    case Kind::count: ok = v.is_number_unsigned() || (v.is_number_integer() && v.get<long long>() >= 0); break;
    case Kind::text: ok = v.is_string(); break;
    case Kind::flag: ok = v.is_boolean(); break;
    case Kind::list:
      ok = v.is_array();
      for (const auto& e : v) ok = ok && e.is_string();
      break;
    case Kind::network: ok = v.is_string() || v.is_object(); break;
    case Kind::object: ok = v.is_object(); break;
  }
  if (!ok) throw SchemaError("key '" + key.name + "' has the wrong type");
}

json from_flag(const Key& key, const std::string& text) {
  auto integer = [&](bool non_negative) -> json {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
      throw SchemaError(flag_name(key.name) + " expects an integer, got '" + text + "'");
    if (non_negative && v < 0) throw SchemaError(flag_name(key.name) + " must be non-negative");
    return non_negative ? json(static_cast<std::uint64_t>(v)) : json(v);
  };
  switch (key.kind) {
    case Kind::integer: return integer(false);
    case Kind::count: return integer(true);
    case Kind::flag: return true;
    case Kind::list: {
      auto arr = json::array();
      std::stringstream ss(text);
      for (std::string item; std::getline(ss, item, ',');)
        if (!item.empty()) arr.push_back(item);
      return arr;
    }
    case Kind::object: throw SchemaError(flag_name(key.name) + " is only accepted in a config file");
    default: return text;
  }
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

/// Network-valued keys hold a path or an inline document.
json load_document(const json& v) { return v.is_string() ? read_json_file(v.get<std::string>()) : v; }

template <class T>
T get_or(const json& cfg, const std::string& key, T fallback) {
  return cfg.contains(key) ? cfg.at(key).get<T>() : fallback;
}

std::optional<std::uint64_t> seed_of(const json& cfg) {
  if (!cfg.contains("seed")) return std::nullopt;
  return cfg.at("seed").get<std::uint64_t>();
}

std::uint64_t require_seed(const json& cfg, const std::string& why) {
  const auto s = seed_of(cfg);
  if (!s) throw SchemaError(why + " is stochastic: --seed is required");
  return *s;
}

// ---------------------------------------------------------------------------

struct Outcome {
  json report = json::object();
  std::vector<suites::Check> checks;
  std::string csv;
  bool verdict = true;
};

void finish_checks(Outcome& o) {
  auto list = json::array();
  for (const auto& c : o.checks) {
    list.push_back(c.to_json());
    o.verdict = o.verdict && c.verdict;
  }
  o.report["checks"] = list;
}

suites::Check exact(std::string name, const Rational& defect) {
  suites::Check c;
  c.name = std::move(name);
  c.defect = abs(defect);
  c.verdict = defect == 0;
  return c;
}

Outcome coxeter_tables(const json& cfg) {
  Outcome o;
  const auto type = get_or<std::string>(cfg, "type", "A2");
  const long q = get_or<long>(cfg, "q", 2);
  const long max = get_or<long>(cfg, "max", 2);
  if (q < 1) throw SchemaError("q must be positive");
  if (max < 0 || max > 6) throw SchemaError("max must lie in [0, 6]");
  const auto rs = [&] {
    try {
      return coxeter::RootSystem::from_type(type);
    } catch (const coxeter::UnsupportedType& e) {
      throw SchemaError(e.what());
    }
  }();
  const coxeter::WeylGroup w(rs);
  const auto thickness = coxeter::ThicknessVector::uniform(rs, q);
  const Rational total = coxeter::poincare_sum(w.elements(), thickness);
  auto rows = json::array();
  std::ostringstream csv;
  csv << "lambda,chi,n_lambda,poincare_stabilizer\n";
  const int rank = rs.rank();
  std::vector<long> coords(static_cast<std::size_t>(rank), 0);
  Rational non_integral = 0;
  while (true) {
    const coxeter::Coweight lambda{coxeter::IntVector(coords.begin(), coords.end())};
    const Rational chi = coxeter::chi(lambda, rs, thickness);
    const Rational n = coxeter::n_lambda(lambda, w, thickness);
    const Rational stab = coxeter::poincare_sum(coxeter::stabilizer_subgroup(lambda, w), thickness);
    if (n.get_den() != 1) non_integral += 1;
    const std::string label = coxeter::to_string(lambda);
    rows.push_back({{"lambda", coords}, {"chi", chi.get_str()}, {"n_lambda", n.get_str()}, {"poincare_stabilizer", stab.get_str()}});
    csv << '"' << label << '"' << ',' << chi.get_str() << ',' << n.get_str() << ',' << stab.get_str() << '\n';
    std::size_t i = 0;
    while (i < coords.size() && coords[i] == max) coords[i++] = 0;
    if (i == coords.size()) break;
    ++coords[i];
  }
  o.report["type"] = type;
  o.report["weyl_order"] = w.order();
  o.report["poincare_sum"] = total.get_str();
  o.report["rows"] = rows;
  o.checks.push_back(exact("N_lambda is an integer", non_integral));
  o.checks.back().inputs = {{"type", type}, {"q", q}, {"max", max}};
  o.checks.push_back(exact("N_0 = 1", coxeter::n_lambda(coxeter::Coweight::zero(rank), w, thickness) - 1));
  o.csv = csv.str();
  return o;
}

Outcome ball(const json& cfg) {
  Outcome o;
  const long p = get_or<long>(cfg, "p", 2);
  const long radius = get_or<long>(cfg, "radius", 2);
  buildings::BallOptions opts;
  opts.vertex_limit = get_or<std::uint64_t>(cfg, "vertex_limit", opts.vertex_limit);
  const bool do_export = get_or<bool>(cfg, "export", false);
  if (radius < 0) throw SchemaError("radius must be non-negative");
  std::optional<buildings::A2Ball> b;
  try {
    b.emplace(buildings::A2Ball::build(static_cast<int>(p), static_cast<int>(radius), opts));
  } catch (const buildings::SizeGuard&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw SchemaError(e.what());
  }
  const Rational predicted = buildings::A2Ball::predicted_size(static_cast<int>(p), static_cast<int>(radius));
  o.report["p"] = p;
  o.report["radius"] = radius;
  o.report["vertices"] = b->size();
  o.report["predicted_vertices"] = predicted.get_str();
  o.checks.push_back(exact("vertex count equals the sum of N_lambda over the box", predicted - Rational(static_cast<long>(b->size()))));
  if (radius >= 1) {
    const long expected = 2 * (p * p + p + 1);
    o.checks.push_back(exact("base vertex has 2(p^2+p+1) neighbours",
                             Rational(static_cast<long>(b->neighbors(b->base()).size()) - expected)));
  }
  if (do_export) o.report["ball"] = b->to_json();
  std::ostringstream csv;
  csv << "node,type,m1,m2\n";
  for (std::size_t i = 0; i < b->size(); ++i) {
    const auto s = b->sigma_from_base(i);
    csv << b->lattice(i).label() << ',' << b->type(i) << ',' << s.coords[0] << ',' << s.coords[1] << '\n';
  }
  o.csv = csv.str();
  return o;
}

netwalk::FiniteNetwork network_of(const json& cfg) {
  if (!cfg.contains("network")) throw SchemaError("--network is required");
  try {
    return netwalk::FiniteNetwork::from_json(load_document(cfg.at("network")));
  } catch (const netwalk::InvalidNetwork& e) {
    throw SchemaError(e.what());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("network: ") + e.what());
  }
}

std::size_t node_of(const netwalk::FiniteNetwork& net, const std::string& label) {
  const auto i = net.index_of(label);
  if (!i) throw SchemaError("unknown node '" + label + "'");
  return *i;
}

Outcome simulate(const json& cfg) {
  Outcome o;
  const auto seed = require_seed(cfg, "simulate");
  const auto net = network_of(cfg);
  const auto k = netwalk::kernel_from_network(net);
  const std::size_t start = node_of(net, get_or<std::string>(cfg, "start", net.label(0)));
  const auto steps = get_or<std::uint64_t>(cfg, "steps", 10000);
  RngStream rng(seed, 0);
  const auto traj = netwalk::simulate(k, start, steps, rng);
  std::vector<std::uint64_t> counts(net.size(), 0);
  for (auto x : traj.nodes) ++counts[x];
  Rational total = 0;
  for (std::size_t x = 0; x < net.size(); ++x) total += net.total_conductance(x);
  auto occupation = json::array();
  double tv = 0;
  for (std::size_t x = 0; x < net.size(); ++x) {
    const Rational pi = net.total_conductance(x) / total;
    const double freq = static_cast<double>(counts[x]) / static_cast<double>(traj.nodes.size());
    tv += std::abs(freq - pi.get_d()) / 2;
    occupation.push_back({{"node", net.label(x)}, {"count", counts[x]}, {"frequency", freq}, {"stationary", pi.get_str()}});
  }
  o.report["steps"] = steps;
  o.report["occupation"] = occupation;
  o.report["total_variation"] = tv;
  RationalVector m;
  for (std::size_t x = 0; x < net.size(); ++x) m.push_back(net.total_conductance(x));
  o.checks.push_back(exact("m is stationary", netwalk::check_stationary(k, m)));
  o.csv = netwalk::occupation_csv(traj, &net);
  return o;
}

Outcome induce(const json& cfg) {
  Outcome o;
  const auto net = network_of(cfg);
  const auto k = netwalk::kernel_from_network(net);
  if (!cfg.contains("subset")) throw SchemaError("--subset is required");
  std::set<std::size_t> y;
  for (const auto& label : cfg.at("subset")) y.insert(node_of(net, label.get<std::string>()));
  const auto q = [&] {
    try {
      return discretize::induced_kernel_exact(k, y);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(e.what());
    }
  }();
  auto rows = json::array();
  std::ostringstream csv;
  csv << "from,to,prob\n";
  Rational row_defect = 0;
  for (std::size_t i = 0; i < q.subset.size(); ++i) {
    Rational sum = 0;
    for (const auto& [j, p] : q.kernel.row(i)) {
      sum += p;
      rows.push_back({{"from", net.label(q.subset[i])}, {"to", net.label(q.subset[j])}, {"prob", p.get_str()}});
      csv << net.label(q.subset[i]) << ',' << net.label(q.subset[j]) << ',' << p.get_str() << '\n';
    }
    row_defect = std::max<Rational>(row_defect, abs(sum - 1));
  }
  o.report["provenance"] = q.provenance;
  o.report["kernel"] = rows;
  o.checks.push_back(exact("rows of Q sum to one", row_defect));
  RationalVector m;
  for (auto x : q.subset) m.push_back(k.reversing_measure()[x]);
  o.checks.push_back(exact("Q reversible for m restricted to Y", q.kernel.reversibility_defect(m)));
  if (k.symmetric()) {
    Rational asym = 0;
    for (std::size_t i = 0; i < q.subset.size(); ++i)
      for (std::size_t j = 0; j < q.subset.size(); ++j) asym = std::max<Rational>(asym, abs(q.kernel.prob(i, j) - q.kernel.prob(j, i)));
    o.checks.push_back(exact("Q symmetric", asym));
  }
  if (cfg.contains("samples")) {
    const auto seed = require_seed(cfg, "induce with --samples");
    const auto samples = cfg.at("samples").get<std::uint64_t>();
    const std::size_t start = node_of(net, get_or<std::string>(cfg, "start", net.label(*y.begin())));
    if (!y.count(start)) throw SchemaError("--start must lie in the subset");
    const auto est = discretize::induced_row_mc(k, y, start, samples, seed, get_or<unsigned>(cfg, "workers", 1));
    const std::size_t pos = static_cast<std::size_t>(std::distance(q.subset.begin(), std::find(q.subset.begin(), q.subset.end(), start)));
    std::vector<double> expected;
    for (std::size_t j = 0; j < q.subset.size(); ++j) expected.push_back(q.kernel.prob(pos, j).get_d());
    const auto chi = stats::goodness_of_fit(est.counts, expected);
    suites::Check c;
    c.name = "Monte Carlo row agrees with the exact row";
    c.kind = "statistical";
    c.inputs = {{"start", net.label(start)}, {"samples", samples}};
    c.p_value = chi.p_value;
    c.verdict = chi.passes() && est.unresolved == 0;
    c.detail = {{"counts", est.counts}, {"unresolved", est.unresolved}};
    o.checks.push_back(std::move(c));
  }
  o.csv = csv.str();
  return o;
}

/// A network with a group action, built from the family keys.
struct Model {
  std::unique_ptr<netwalk::FiniteNetwork> finite;
  std::unique_ptr<netwalk::LazyNetwork> net;
  std::unique_ptr<action::GroupAction> act;
  std::unique_ptr<action::PermutationAction> perm;  // owned by act when set
  std::string family;
};

Model model_of(const json& cfg, const std::string& fallback_family) {
  Model m;
  m.family = get_or<std::string>(cfg, "family", fallback_family);
  const auto action_name = get_or<std::string>(cfg, "action", m.family == "z-line" ? "translation" : "");
  if (m.family != "z-line" && cfg.contains("action")) throw SchemaError("--action applies to the z-line family only");
  try {
    if (m.family == "z-line") {
      const long k = get_or<long>(cfg, "k", 2);
      m.net = std::make_unique<action::IntegerLine>();
      if (action_name == "translation") m.act = std::make_unique<action::TranslationAction>(k);
      else if (action_name == "dihedral") m.act = std::make_unique<action::DihedralAction>(k);
      else throw SchemaError("unknown action '" + action_name + "'");
    } else if (m.family == "tree" || m.family == "free2-tree") {
      auto tree = m.family == "tree" ? action::CayleyTree::regular(static_cast<int>(get_or<long>(cfg, "q", 2)))
                                     : action::CayleyTree::free2();
      m.act = std::make_unique<action::LeftMultiplication>(tree.alphabet());
      m.net = std::make_unique<action::CayleyTree>(std::move(tree));
    } else if (m.family == "network") {
      m.finite = std::make_unique<netwalk::FiniteNetwork>(network_of(cfg));
      if (!cfg.contains("action_file")) throw SchemaError("--action-file is required for the network family");
      m.act = std::make_unique<action::PermutationAction>(
          action::PermutationAction::from_json(*m.finite, load_document(cfg.at("action_file"))));
      m.net = std::make_unique<netwalk::FiniteAsLazy>(*m.finite);
    } else {
      throw SchemaError("unknown family '" + m.family + "'");
    }
  } catch (const action::InvalidAction& e) {
    throw SchemaError(e.what());
  } catch (const json::exception& e) {
    throw SchemaError(std::string("action: ") + e.what());
  }
  return m;
}

Outcome quotient(const json& cfg) {
  Outcome o;
  const auto seed = require_seed(cfg, "quotient");
  const auto m = model_of(cfg, "z-line");
  const auto q = [&] {
    try {
      return action::quotient_network(*m.net, *m.act);
    } catch (const action::InvalidAction& e) {
      throw SchemaError(e.what());
    }
  }();
  RngStream rng(seed, 0);
  o.report["family"] = m.family;
  o.report["quotient"] = q.network().to_json();
  o.report["stabilizer_orders"] = q.stabilizer_orders();
  const auto cov = action::covolume(*m.net, *m.act);
  o.report["covolume"] = {{"value", cov.value.get_str()}, {"verdict", cov.verdict}};
  o.checks.push_back(exact("quotient conductance symmetry", q.symmetry_defect()));
  o.checks.push_back(exact("m' = m / |Gamma_x|", q.measure_defect()));
  o.checks.push_back(exact("m' stationary for the quotient kernel", netwalk::check_stationary(q.kernel(), q.total_conductance())));
  o.checks.push_back(exact("a' independent of the lift", action::second_lift_defect(*m.net, *m.act, q, 20, rng)));
  const auto edges = m.finite ? action::conductance_check(*m.finite, dynamic_cast<const action::PermutationAction&>(*m.act))
                              : action::conductance_check(*m.net, *m.act, 10000, rng);
  auto c = exact("conductance preserved", Rational(static_cast<long>(edges.violations)));
  c.kind = edges.label;
  c.detail = {{"edges_checked", edges.checked}};
  o.checks.push_back(std::move(c));
  if (cfg.contains("samples")) {
    const auto samples = cfg.at("samples").get<std::uint64_t>();
    const auto start = get_or<std::string>(cfg, "start", m.net->origin());
    const auto steps = get_or<std::uint64_t>(cfg, "steps", 5);
    const auto law = action::quotient_law_check(*m.net, *m.act, q, start, static_cast<unsigned>(steps), samples,
                                                splitmix64(seed + 1), get_or<unsigned>(cfg, "workers", 1));
    suites::Check l;
    l.name = "quotient law of pi(Z_n)";
    l.kind = "statistical";
    l.inputs = {{"start", start}, {"steps", steps}, {"samples", samples}};
    l.p_value = law.chi.p_value;
    l.verdict = law.chi.passes();
    l.detail = {{"observed", law.observed}, {"expected", law.expected}};
    o.checks.push_back(std::move(l));
  }
  std::ostringstream csv;
  csv << "from,to,conductance\n";
  const auto& a = q.conductance();
  for (std::size_t i = 0; i < q.size(); ++i)
    for (std::size_t j = i; j < q.size(); ++j)
      if (a[i][j] != 0) csv << q.representatives()[i] << ',' << q.representatives()[j] << ',' << a[i][j].get_str() << '\n';
  o.csv = csv.str();
  return o;
}

Outcome discretize_command(const json& cfg) {
  Outcome o;
  const auto seed = require_seed(cfg, "discretize");
  const auto m = model_of(cfg, "free2-tree");
  discretize::DiscretizeOptions opts;
  opts.seed = seed;
  opts.workers = get_or<unsigned>(cfg, "workers", 1);
  opts.mc_samples = get_or<std::uint64_t>(cfg, "samples", opts.mc_samples);
  const auto base = get_or<std::string>(cfg, "base", m.net->origin());
  const auto mu = discretize::discretize_lattice(*m.net, *m.act, base, opts);
  o.report["family"] = m.family;
  o.report["mu"] = mu.to_json();
  const auto first = discretize::moment(mu, *m.net, *m.act, "first");
  o.report["first_moment"] = first.exact ? json(first.exact->get_str()) : json(first.value);
  bool all_exact = true;
  Rational mass = 0;
  for (const auto& e : mu.entries) {
    all_exact = all_exact && e.exact.has_value();
    if (e.exact) mass += *e.exact;
  }
  if (all_exact) {
    o.checks.push_back(exact("total mass one", mass - 1));
  } else {
    suites::Check c;
    c.name = "every trajectory resolved";
    c.kind = "statistical";
    c.verdict = mu.unresolved == 0;
    c.detail = {{"unresolved", mu.unresolved}, {"total_mass", mu.total_mass()}};
    o.checks.push_back(std::move(c));
  }
  if (mu.symmetry_checked) o.checks.push_back(exact("mu symmetric", Rational(mu.symmetric ? 0 : 1)));
  std::ostringstream csv;
  csv.precision(17);
  csv << "element,prob,exact\n";
  for (const auto& e : mu.entries) csv << e.element << ',' << e.prob << ',' << (e.exact ? e.exact->get_str() : "") << '\n';
  o.csv = csv.str();
  return o;
}

Outcome verify(const json& cfg) {
  Outcome o;
  std::vector<std::string> names;
  if (cfg.contains("suite")) names.push_back(cfg.at("suite").get<std::string>());
  if (cfg.contains("suites"))
    for (const auto& s : cfg.at("suites")) names.push_back(s.get<std::string>());
  suites::SuiteOptions opts;
  opts.seed = seed_of(cfg);
  if (cfg.contains("samples")) opts.samples = cfg.at("samples").get<std::uint64_t>();
  opts.workers = get_or<unsigned>(cfg, "workers", 1);
  const json params = cfg.value("params", json::object());
  auto reports = json::array();
  std::string csv = "suite,check,kind,verdict,defect,p_value\n";
  for (const auto& name : names) {
    // Parameters may be flat (one suite) or keyed by suite name.
    opts.params = params.contains(name) && params.at(name).is_object() ? params.at(name)
                  : names.size() == 1                                  ? params
                                                                       : json::object();
    for (const auto* key : {"q", "p", "radius"})
      if (cfg.contains(key)) opts.params[key] = cfg.at(key);
    suites::SuiteReport r;
    try {
      r = suites::run_suite(name, opts);
    } catch (const suites::SuiteError& e) {
      throw SchemaError(e.what());
    }
    reports.push_back(r.to_json());
    csv += r.to_csv(false);
    o.verdict = o.verdict && r.passed();
  }
  o.report["reports"] = reports;
  o.csv = csv;
  return o;
}

json resolve_config(const std::string& command, const std::string& config_path, const std::map<std::string, std::string>& flags) {
  json cfg = json::object();
  if (!config_path.empty()) {
    const json doc = read_json_file(config_path);
    if (!doc.is_object()) throw SchemaError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
      if (key == "command") {
        if (!value.is_string() || value.get<std::string>() != command) throw SchemaError("config command does not match");
        continue;
      }
      const Key* k = find_key(command, key);
      if (!k) throw SchemaError("unknown config key '" + key + "' for " + command);
      check_type(*k, value);
      cfg[key] = value;
    }
  }
  for (const auto& [key, text] : flags) cfg[key] = from_flag(*find_key(command, key), text);
  const auto format = get_or<std::string>(cfg, "format", "json");
  if (format != "json" && format != "csv") throw SchemaError("format must be json or csv");
  return cfg;
}

std::string command_of_config(const std::string& path) {
  const json doc = read_json_file(path);
  if (!doc.is_object() || !doc.contains("command") || !doc.at("command").is_string())
    throw SchemaError("config needs a command when no subcommand is given");
  const auto c = doc.at("command").get<std::string>();
  if (!command_keys().count(c)) throw SchemaError("unknown command '" + c + "'");
  return c;
}

int execute(const std::string& command, const std::string& config_path, const std::map<std::string, std::string>& flags,
            std::ostream& out) {
  const json cfg = resolve_config(command, config_path, flags);
  Outcome o;
  if (command == "coxeter-tables") o = coxeter_tables(cfg);
  else if (command == "ball") o = ball(cfg);
  else if (command == "simulate") o = simulate(cfg);
  else if (command == "induce") o = induce(cfg);
  else if (command == "quotient") o = quotient(cfg);
  else if (command == "discretize") o = discretize_command(cfg);
  else o = verify(cfg);
  finish_checks(o);
  if (command == "verify" && o.report["checks"].empty()) o.report.erase("checks");

  json config = cfg;
  for (const auto* k : {"out", "workers", "format"}) config.erase(k);
  json report{{"schema", kSchema}, {"command", command}, {"config", config}};
  for (const auto& [key, value] : o.report.items()) report[key] = value;
  report["verdict"] = o.verdict;

  const bool csv = get_or<std::string>(cfg, "format", "json") == "csv";
  const std::string body = csv ? o.csv : report.dump(2) + "\n";
  if (cfg.contains("out")) {
    const std::filesystem::path dir = cfg.at("out").get<std::string>();
    std::filesystem::create_directories(dir);
    std::ofstream file(dir / (csv ? "report.csv" : "report.json"), std::ios::binary);
    if (!file) throw std::runtime_error("cannot write to " + dir.string());
    file << body;
  } else {
    out << body;
  }
  return o.verdict ? kExitOk : kExitCheckFailed;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"chamberwalk: random walks on networks with group actions and on affine buildings"};
  app.require_subcommand(0, 1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file; flags override its keys");

  std::map<std::string, std::map<std::string, std::string>> values;
  std::map<std::string, std::string> sub_config;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, keys] : command_keys()) {
    auto* sub = app.add_subcommand(name);
    subs[name] = sub;
    sub->add_option("--config", sub_config[name], "JSON config file; flags override its keys");
    std::vector<Key> all = common_keys();
    all.insert(all.end(), keys.begin(), keys.end());
    for (const auto& k : all) {
      if (k.kind == Kind::object) continue;
      auto& slot = values[name][k.name];
      if (k.kind == Kind::flag) sub->add_flag_callback(flag_name(k.name), [&slot] { slot = "true"; }, k.help);
      else sub->add_option(flag_name(k.name), slot, k.help);
    }
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitSchema;
  }

  try {
    std::string command;
    for (const auto& [name, sub] : subs)
      if (sub->parsed()) command = name;
    std::string path = config_path;
    if (!command.empty() && !sub_config[command].empty()) path = sub_config[command];
    if (command.empty()) {
      if (path.empty()) {
        err << app.help();
        return kExitSchema;
      }
      command = command_of_config(path);
    }
    std::map<std::string, std::string> flags;
    if (subs[command]->parsed())
      for (const auto& [key, text] : values[command]) {
        const auto* opt = subs[command]->get_option_no_throw(flag_name(key));
        if (opt && opt->count() > 0) flags[key] = text;
      }
    return execute(command, path, flags, out);
  } catch (const SchemaError& e) {
    err << "schema error: " << e.what() << '\n';
    return kExitSchema;
  } catch (const buildings::SizeGuard& e) {
    err << "size guard: " << e.what() << '\n';
    return kExitSizeGuard;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace chamberwalk::cli
