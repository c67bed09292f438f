#pragma once

// JSON scenario files: model, Lyapunov candidates, observables, states,
// time grid and tolerances for the command-line tool.

#include "qds/dynamics.hpp"
#include "qds/errors.hpp"
#include "qds/fock.hpp"
#include "qds/gksl.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qds::cli {

/// Parse or validation failure. Syntax errors carry line and column;
/// semantic errors carry the JSON pointer of the offending value.
class ScenarioError : public InvalidInput {
 public:
  ScenarioError(const std::string& what, std::string pointer, int line = 0, int column = 0)
      : InvalidInput(what), pointer_(std::move(pointer)), line_(line), column_(column) {}
  const std::string& pointer() const noexcept { return pointer_; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  std::string pointer_;
  int line_;
  int column_;
};

struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int points = 101;

  std::vector<double> times() const { return dynamics::uniform_grid(t0, t1, points); }
};

/// Parses "t0:t1:points".
TimeGrid parse_grid(const std::string& text);

struct NamedState {
  std::string name;
  std::string kind;  // number, coherent, cat, matrix
  gksl::DensityOperator state;
};

struct Tolerances {
  double rk_rel_tol = 1e-9;
  double psd = 1e-7;
  double trace_fail = 1e-6;
  double null_tol_rel = 1e-8;
  double psd_tol_rel = 1e-9;
  double kernel_tol_rel = 1e-8;
};

struct Overrides {
  std::optional<int> dim;
  std::optional<TimeGrid> grid;
  std::optional<std::uint64_t> seed;
};

struct Scenario {
  std::string name;
  std::string source;  // file path or "<text>"
  int dim = 0;
  double tail_tol = fock::kDefaultTailTol;
  gksl::SystemModel model{ComplexMatrix::Zero(2, 2), {}};
  std::vector<dynamics::NamedObservable> lyapunov;     // candidates in file order
  std::vector<dynamics::NamedObservable> observables;  // q and p always present
  std::vector<NamedState> initial_states;
  std::vector<NamedState> reference_states;
  TimeGrid grid;
  Tolerances tolerances;
  std::uint64_t seed = 0x5EED;
  fock::QuadratureConvention quadrature = fock::QuadratureConvention::unit;
  int boundary_levels = 2;
  nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
  std::vector<std::string> notes;

  const dynamics::NamedObservable& observable(const std::string& name) const;
};

/// Terms {coeff: [re, im], ops: [...]} with tokens a, ad, n, id multiplied
/// left to right, summed.
ComplexMatrix build_operator(const nlohmann::ordered_json& terms, int dim, const std::string& pointer);

Scenario parse_scenario(const std::string& text, const Overrides& overrides = {}, const std::string& source = "<text>");
Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides = {});

}  // namespace qds::cli
