#pragma once

// Named invariant suites. Each suite builds its models, runs exact and
// statistical checks and returns a report whose bytes depend only on the
// parameters and the seed.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "chamberwalk/rational.hpp"
#include "json.hpp"

namespace chamberwalk::suites {

/// Bad suite name or parameter; the CLI maps it to a schema error.
struct SuiteError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Check {
  std::string name;
  /// "exact", "statistical", "statistical, truncation-limited" or "sampled invariant".
  std::string kind = "exact";
  nlohmann::json inputs = nlohmann::json::object();
  std::optional<Rational> defect;
  std::optional<double> p_value;
  bool verdict = false;
  nlohmann::json detail;  // null when there is nothing to add

  nlohmann::json to_json() const;
};

struct SuiteReport {
  std::string suite;
  nlohmann::json parameters = nlohmann::json::object();
  std::vector<Check> checks;

  bool passed() const;
  nlohmann::json to_json() const;
  /// One row per check: suite,check,kind,verdict,defect,p_value.
  std::string to_csv(bool header = true) const;
};

struct SuiteOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> samples;
  unsigned workers = 1;
  /// Suite-specific parameters; unknown keys are rejected.
  nlohmann::json params = nlohmann::json::object();
};

const std::vector<std::string>& suite_names();
/// Stochastic suites refuse to run without a seed.
bool is_stochastic(const std::string& suite);

SuiteReport run_suite(const std::string& suite, const SuiteOptions& options);

}  // namespace chamberwalk::suites
