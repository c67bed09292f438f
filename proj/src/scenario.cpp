#include "qds/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace qds::cli {

using json = nlohmann::ordered_json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
  throw ScenarioError("scenario " + (pointer.empty() ? std::string("/") : pointer) + ": " + what, pointer);
}

std::string child(const std::string& pointer, const std::string& key) {
  std::string escaped;
  for (char c : key) {
    if (c == '~') escaped += "~0";
    else if (c == '/') escaped += "~1";
    else escaped += c;
  }
  return pointer + "/" + escaped;
}

std::string child(const std::string& pointer, std::size_t index) { return pointer + "/" + std::to_string(index); }

double get_number(const json& j, const std::string& pointer) {
  if (!j.is_number()) fail(pointer, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(pointer, "expected a finite number");
  return v;
}

int get_int(const json& j, const std::string& pointer) {
  if (!j.is_number_integer()) fail(pointer, "expected an integer");
  return j.get<int>();
}

Complex get_complex(const json& j, const std::string& pointer) {
  if (j.is_number()) return {get_number(j, pointer), 0.0};
  if (!j.is_array() || j.size() != 2) fail(pointer, "expected a complex scalar [re, im]");
  return {get_number(j[0], child(pointer, 0)), get_number(j[1], child(pointer, 1))};
}

std::string get_string(const json& j, const std::string& pointer) {
  if (!j.is_string()) fail(pointer, "expected a string");
  return j.get<std::string>();
}

void check_keys(const json& obj, const std::string& pointer, const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(pointer, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key)) fail(child(pointer, key), "unknown key '" + key + "'");
  }
}

const json& require(const json& obj, const std::string& key, const std::string& pointer) {
  if (!obj.contains(key)) fail(child(pointer, key), "missing required key '" + key + "'");
  return obj.at(key);
}

template <class F>
auto with_pointer(const std::string& pointer, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ScenarioError&) {
    throw;
  } catch (const Error& e) {
    fail(pointer, e.what());
  }
}

ComplexMatrix parse_matrix(const json& j, int dim, const std::string& pointer) {
  check_keys(j, pointer, {"name", "type", "re", "im"});
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (const char* part : {"re", "im"}) {
    if (!j.contains(part)) {
      if (std::string(part) == "re") fail(child(pointer, part), "missing required key 're'");
      continue;
    }
    const std::string p = child(pointer, part);
    const json& rows = j.at(part);
    if (!rows.is_array() || static_cast<int>(rows.size()) != dim) {
      fail(p, "expected " + std::to_string(dim) + " rows");
    }
    for (int r = 0; r < dim; ++r) {
      const json& row = rows[static_cast<std::size_t>(r)];
      if (!row.is_array() || static_cast<int>(row.size()) != dim) {
        fail(child(p, static_cast<std::size_t>(r)), "expected " + std::to_string(dim) + " columns");
      }
      for (int c = 0; c < dim; ++c) {
        const double v = get_number(row[static_cast<std::size_t>(c)], child(child(p, static_cast<std::size_t>(r)), static_cast<std::size_t>(c)));
        if (std::string(part) == "re") m(r, c) += v;
        else m(r, c) += Complex(0.0, v);
      }
    }
  }
  return m;
}

NamedState parse_state(const json& j, int dim, double tail_tol, const std::string& pointer, std::size_t index) {
  if (!j.is_object()) fail(pointer, "expected a state object");
  const std::string type = get_string(require(j, "type", pointer), child(pointer, "type"));
  NamedState s{j.contains("name") ? get_string(j.at("name"), child(pointer, "name")) : type + std::to_string(index),
               type, gksl::DensityOperator::number_state(2, 0)};
  if (type == "number") {
    check_keys(j, pointer, {"name", "type", "n"});
    const int n = get_int(require(j, "n", pointer), child(pointer, "n"));
    if (n < 0 || n >= dim) fail(child(pointer, "n"), "number state outside the truncated space");
    s.state = gksl::DensityOperator::number_state(dim, n);
  } else if (type == "coherent") {
    check_keys(j, pointer, {"name", "type", "alpha"});
    const Complex alpha = get_complex(require(j, "alpha", pointer), child(pointer, "alpha"));
    s.state = with_pointer(child(pointer, "alpha"),
                           [&] { return gksl::DensityOperator::pure(fock::coherent_vector(dim, alpha, tail_tol)); });
  } else if (type == "cat") {
    check_keys(j, pointer, {"name", "type", "alpha", "parity"});
    const Complex alpha = get_complex(require(j, "alpha", pointer), child(pointer, "alpha"));
    const std::string parity =
        j.contains("parity") ? get_string(j.at("parity"), child(pointer, "parity")) : std::string("even");
    if (parity != "even" && parity != "odd") fail(child(pointer, "parity"), "expected 'even' or 'odd'");
    const fock::CatPair cats = with_pointer(child(pointer, "alpha"), [&] { return fock::cat_vectors(dim, alpha, tail_tol); });
    if (parity == "odd" && cats.odd_degenerate) fail(child(pointer, "alpha"), "odd cat state is undefined for alpha = 0");
    s.state = gksl::DensityOperator::pure(parity == "even" ? cats.even : cats.odd);
  } else if (type == "matrix") {
    const ComplexMatrix m = parse_matrix(j, dim, pointer);
    s.state = with_pointer(pointer, [&] { return gksl::DensityOperator::from_matrix(m); });
  } else {
    fail(child(pointer, "type"), "unknown state type '" + type + "' (expected number, coherent, cat or matrix)");
  }
  return s;
}

std::vector<NamedState> parse_states(const json& root, const char* key, int dim, double tail_tol) {
  std::vector<NamedState> out;
  if (!root.contains(key)) return out;
  const std::string pointer = child("", key);
  const json& arr = root.at(key);
  if (!arr.is_array()) fail(pointer, "expected an array of states");
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    NamedState s = parse_state(arr[i], dim, tail_tol, child(pointer, i), i);
    if (!names.insert(s.name).second) fail(child(pointer, i), "duplicate state name '" + s.name + "'");
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<dynamics::NamedObservable> parse_named_operators(const json& root, const char* key, int dim) {
  std::vector<dynamics::NamedObservable> out;
  if (!root.contains(key)) return out;
  const std::string pointer = child("", key);
  const json& obj = root.at(key);
  if (!obj.is_object()) fail(pointer, "expected an object mapping names to operator terms");
  for (const auto& [name, terms] : obj.items()) out.push_back({name, build_operator(terms, dim, child(pointer, name))});
  return out;
}

TimeGrid parse_grid_json(const json& j, const std::string& pointer) {
  check_keys(j, pointer, {"t0", "t1", "points"});
  TimeGrid g;
  g.t0 = get_number(require(j, "t0", pointer), child(pointer, "t0"));
  g.t1 = get_number(require(j, "t1", pointer), child(pointer, "t1"));
  g.points = get_int(require(j, "points", pointer), child(pointer, "points"));
  if (g.t0 < 0.0 || !(g.t1 > g.t0) || g.points < 2) fail(pointer, "grid needs 0 <= t0 < t1 and points >= 2");
  return g;
}

void location(const std::string& text, std::size_t byte, int& line, int& column) {
  line = 1;
  column = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
}

}  // namespace

TimeGrid parse_grid(const std::string& text) {
  std::istringstream in(text);
  std::string a, b, c;
  if (!std::getline(in, a, ':') || !std::getline(in, b, ':') || !std::getline(in, c) ) {
    throw InvalidInput("grid '" + text + "': expected t0:t1:points");
  }
  TimeGrid g;
  try {
    std::size_t pa = 0, pb = 0, pc = 0;
    g.t0 = std::stod(a, &pa);
    g.t1 = std::stod(b, &pb);
    g.points = std::stoi(c, &pc);
    if (pa != a.size() || pb != b.size() || pc != c.size()) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidInput("grid '" + text + "': expected t0:t1:points");
  }
  if (g.t0 < 0.0 || !(g.t1 > g.t0) || g.points < 2) throw InvalidInput("grid '" + text + "': need 0 <= t0 < t1, points >= 2");
  return g;
}

const dynamics::NamedObservable& Scenario::observable(const std::string& n) const {
  for (const auto& o : observables) {
    if (o.name == n) return o;
  }
  throw InvalidInput("scenario '" + name + "' has no observable '" + n + "'");
}

ComplexMatrix build_operator(const json& terms, int dim, const std::string& pointer) {
  if (!terms.is_array()) fail(pointer, "expected an array of terms");
  const ComplexMatrix a = fock::annihilation(dim);
  const ComplexMatrix ad = fock::creation(dim);
  const ComplexMatrix n = fock::number(dim);
  ComplexMatrix sum = ComplexMatrix::Zero(dim, dim);
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const std::string tp = child(pointer, t);
    const json& term = terms[t];
    check_keys(term, tp, {"coeff", "ops"});
    const Complex coeff = term.contains("coeff") ? get_complex(term.at("coeff"), child(tp, "coeff")) : Complex(1.0);
    const json& ops = require(term, "ops", tp);
    if (!ops.is_array()) fail(child(tp, "ops"), "expected an array of operator tokens");
    ComplexMatrix product = ComplexMatrix::Identity(dim, dim);
    for (std::size_t k = 0; k < ops.size(); ++k) {
      const std::string token = get_string(ops[k], child(child(tp, "ops"), k));
      if (token == "a") product = product * a;
      else if (token == "ad") product = product * ad;
      else if (token == "n") product = product * n;
      else if (token == "id") continue;
      else fail(child(child(tp, "ops"), k), "unknown operator token '" + token + "' (expected a, ad, n or id)");
    }
    sum += coeff * product;
  }
  return sum;
}

Scenario parse_scenario(const std::string& text, const Overrides& overrides, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    int line = 0;
    int column = 0;
    location(text, e.byte > 0 ? e.byte - 1 : 0, line, column);
    std::string msg = e.what();
    throw ScenarioError(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": syntax error: " + msg,
                        "", line, column);
  }
  check_keys(root, "",
             {"name", "dim", "tail_tol", "hamiltonian", "couplings", "lyapunov", "observables", "initial_states",
              "reference_states", "grid", "tolerances", "seed", "quadrature", "boundary_levels", "parameters",
              "notes"});
  Scenario s;
  s.source = source;
  s.name = get_string(require(root, "name", ""), "/name");
  s.dim = overrides.dim ? *overrides.dim : get_int(require(root, "dim", ""), "/dim");
  if (s.dim < 2 || s.dim > gksl::kMaxSuperoperatorDim) {
    fail("/dim", "dimension must lie in [2, " + std::to_string(gksl::kMaxSuperoperatorDim) + "]");
  }
  if (root.contains("tail_tol")) {
    s.tail_tol = get_number(root.at("tail_tol"), "/tail_tol");
    if (!(s.tail_tol > 0.0)) fail("/tail_tol", "tail_tol must be positive");
  }
  if (root.contains("quadrature")) {
    const std::string q = get_string(root.at("quadrature"), "/quadrature");
    s.quadrature = with_pointer("/quadrature", [&] { return fock::quadrature_convention_from_string(q); });
  }
  if (root.contains("boundary_levels")) {
    s.boundary_levels = get_int(root.at("boundary_levels"), "/boundary_levels");
    if (s.boundary_levels < 0 || s.boundary_levels >= s.dim - 1) fail("/boundary_levels", "out of range");
  }
  if (overrides.seed) {
    s.seed = *overrides.seed;
  } else if (root.contains("seed")) {
    const json& seed = root.at("seed");
    if (!seed.is_number_unsigned()) fail("/seed", "expected a non-negative integer");
    s.seed = seed.get<std::uint64_t>();
  }

  const ComplexMatrix h = build_operator(require(root, "hamiltonian", ""), s.dim, "/hamiltonian");
  std::vector<ComplexMatrix> couplings;
  const json& cl = require(root, "couplings", "");
  if (!cl.is_array()) fail("/couplings", "expected an array of operators");
  for (std::size_t i = 0; i < cl.size(); ++i) couplings.push_back(build_operator(cl[i], s.dim, child("/couplings", i)));
  s.model = with_pointer("/hamiltonian", [&] { return gksl::SystemModel(h, couplings, s.name); });

  s.lyapunov = parse_named_operators(root, "lyapunov", s.dim);
  for (std::size_t i = 0; i < s.lyapunov.size(); ++i) {
    const auto& v = s.lyapunov[i];
    if ((v.op - v.op.adjoint()).norm() > 1e-10 * std::max(1.0, v.op.norm())) {
      fail(child("/lyapunov", v.name), "Lyapunov candidate must be Hermitian");
    }
  }
  s.observables = parse_named_operators(root, "observables", s.dim);
  const fock::Quadratures quad = fock::quadratures(s.dim, s.quadrature);
  auto has = [&](const char* n) {
    return std::any_of(s.observables.begin(), s.observables.end(), [&](const auto& o) { return o.name == n; });
  };
  if (!has("p")) s.observables.insert(s.observables.begin(), {"p", quad.p});
  if (!has("q")) s.observables.insert(s.observables.begin(), {"q", quad.q});

  s.initial_states = parse_states(root, "initial_states", s.dim, s.tail_tol);
  s.reference_states = parse_states(root, "reference_states", s.dim, s.tail_tol);

  if (overrides.grid) {
    s.grid = *overrides.grid;
  } else if (root.contains("grid")) {
    s.grid = parse_grid_json(root.at("grid"), "/grid");
  }

  if (root.contains("tolerances")) {
    const json& t = root.at("tolerances");
    check_keys(t, "/tolerances", {"rk_rel_tol", "psd", "trace_fail", "null_tol_rel", "psd_tol_rel", "kernel_tol_rel"});
    auto read = [&](const char* key, double& target) {
      if (t.contains(key)) {
        target = get_number(t.at(key), child("/tolerances", key));
        if (!(target > 0.0)) fail(child("/tolerances", key), "tolerance must be positive");
      }
    };
    read("rk_rel_tol", s.tolerances.rk_rel_tol);
    read("psd", s.tolerances.psd);
    read("trace_fail", s.tolerances.trace_fail);
    read("null_tol_rel", s.tolerances.null_tol_rel);
    read("psd_tol_rel", s.tolerances.psd_tol_rel);
    read("kernel_tol_rel", s.tolerances.kernel_tol_rel);
  }
  if (root.contains("parameters")) {
    if (!root.at("parameters").is_object()) fail("/parameters", "expected an object");
    s.parameters = root.at("parameters");
  }
  if (root.contains("notes")) {
    const json& notes = root.at("notes");
    if (!notes.is_array()) fail("/notes", "expected an array of strings");
    for (std::size_t i = 0; i < notes.size(); ++i) s.notes.push_back(get_string(notes[i], child("/notes", i)));
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidInput("cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), overrides, path.string());
}

}  // namespace qds::cli
