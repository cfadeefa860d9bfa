// Copyright 2026 The brs Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     https://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "brs/problem.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

namespace brs {

namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_double(const std::string& s, int line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw SpecError("line " + std::to_string(line) + ": expected a number, got '" + s + "'");
  }
  return v;
}

int parse_int(const std::string& s, int line) {
  int v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw SpecError("line " + std::to_string(line) + ": expected an integer, got '" + s + "'");
  }
  return v;
}

std::vector<double> parse_doubles(const std::string& s, int line) {
  std::vector<double> out;
  for (const auto& tok : split_ws(s)) out.push_back(parse_double(tok, line));
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v[i]);
  }
  return out;
}

// Variables of `vars` on which p depends.
std::set<std::string> used_vars(const Polynomial& p) {
  std::set<std::string> out;
  for (std::size_t i = 0; i < p.vars().size(); ++i) {
    if (p.depends_on(i)) out.insert(p.vars().name(i));
  }
  return out;
}

bool is_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

}  // namespace

// ---------------------------------------------------------------------------

Polynomial ProblemSpec::horizon_poly() const {
  const Polynomial t = Polynomial::variable(vars, vars.name(t_index()));
  return (t - t0) * (T - t);
}

Polynomial ProblemSpec::budget_poly() const {
  if (!w_active() || !q) return Polynomial(vars);
  return *q * (R * R);
}

bool ProblemSpec::d_active(int i) const {
  if (i < 0 || i >= nd) return false;
  if (delta_encoding == DeltaEncoding::kBall) return delta_bar > 0.0;
  return i < static_cast<int>(delta_bounds.size()) && delta_bounds[i] > 0.0;
}

bool ProblemSpec::any_d_active() const {
  for (int i = 0; i < nd; ++i) {
    if (d_active(i)) return true;
  }
  return false;
}

VarSet make_vars(const std::vector<std::string>& states, const std::vector<std::string>& w,
                 const std::vector<std::string>& d) {
  std::vector<std::string> names{"t"};
  names.insert(names.end(), states.begin(), states.end());
  names.insert(names.end(), w.begin(), w.end());
  names.insert(names.end(), d.begin(), d.end());
  return VarSet(std::move(names));
}

std::vector<Monomial> template_basis(const VarSet& vars,
                                     const std::vector<std::size_t>& var_indices, int d,
                                     int dt, std::optional<std::size_t> time) {
  std::vector<Monomial> out;
  if (d < 0) return out;
  const bool split =
      time && std::find(var_indices.begin(), var_indices.end(), *time) != var_indices.end();
  if (!split) return monomial_basis(vars, var_indices, d);
  // Degree d in the other variables, times t^j for j <= dt.
  std::vector<std::size_t> rest;
  for (auto i : var_indices) {
    if (i != *time) rest.push_back(i);
  }
  const auto base = monomial_basis(vars, rest, d);
  for (int j = 0; j <= std::max(dt, 0); ++j) {
    Monomial tj(vars.size());
    tj.set(*time, j);
    for (const auto& m : base) out.push_back(m * tj);
  }
  return out;
}

void split_control_affine(ProblemSpec& spec, const std::vector<std::string>& rhs) {
  std::vector<std::string> names = spec.vars.names();
  names.insert(names.end(), spec.inputs.begin(), spec.inputs.end());
  const VarSet ext(names);
  const int m = spec.m();
  spec.f.clear();
  spec.g.assign(rhs.size(), {});
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    Polynomial p = Polynomial::parse(ext, rhs[i]);
    Polynomial fi = p;
    for (int j = 0; j < m; ++j) fi = fi.substitute(spec.vars.size() + j, 0.0);
    Polynomial rebuilt = fi;
    for (int j = 0; j < m; ++j) {
      const std::size_t uj = spec.vars.size() + j;
      Polynomial gij = p.diff(uj);
      for (int l = 0; l < m; ++l) gij = gij.substitute(spec.vars.size() + l, 0.0);
      rebuilt += gij * Polynomial::variable(ext, spec.inputs[j]);
      spec.g[i].push_back(gij.rebase(spec.vars));
    }
    if ((p - rebuilt).pruned(1e-12 * std::max(1.0, p.max_abs_coefficient())).degree() >= 0) {
      throw SpecError("dynamics for state " + std::to_string(i + 1) +
                      " are not affine in the inputs: " + rhs[i]);
    }
    spec.f.push_back(fi.rebase(spec.vars));
  }
}

// ---------------------------------------------------------------------------

void validate(const ProblemSpec& s) {
  auto fail = [&](const std::string& what) { throw SpecError(s.name + ": " + what); };
  if (s.n < 1) fail("at least one state is required");
  if (s.vars.size() != static_cast<std::size_t>(1 + s.n + s.nw + s.nd)) {
    fail("variable set does not match the state/disturbance/parameter counts");
  }
  if (s.vars.name(0) != "t") fail("the first variable must be t");
  const int m = s.m();
  if (static_cast<int>(s.f.size()) != s.n) fail("f must have one entry per state");
  if (static_cast<int>(s.g.size()) != s.n) fail("g must have one row per state");
  for (const auto& row : s.g) {
    if (static_cast<int>(row.size()) != m) fail("every row of g needs one entry per input");
  }
  auto same_vars = [&](const Polynomial& p, const std::string& what) {
    if (!(p.vars() == s.vars)) fail(what + " is not over the problem variables");
  };
  for (const auto& p : s.f) same_vars(p, "f");
  for (const auto& row : s.g) {
    for (const auto& p : row) same_vars(p, "g");
  }
  if (!std::isfinite(s.t0) || !std::isfinite(s.T)) fail("horizon must be finite");
  if (s.T < s.t0) fail("T must be >= t0");

  std::set<std::string> tx{"t"};
  for (int i = 0; i < s.n; ++i) tx.insert(s.vars.name(s.x_index(i)));
  auto only_tx = [&](const Polynomial& p, const std::string& what) {
    same_vars(p, what);
    for (const auto& v : used_vars(p)) {
      if (!tx.count(v)) fail(what + " may only depend on t and the states (uses " + v + ")");
    }
  };
  if (s.tube.empty()) fail("the tube needs at least one term");
  for (const auto& term : s.tube) only_tx(term.r, "tube term");
  for (std::size_t i = 0; i < s.input_rows.size(); ++i) {
    const auto& row = s.input_rows[i];
    if (static_cast<int>(row.a.size()) != m) {
      fail("input row " + std::to_string(i + 1) + " has the wrong number of coefficients");
    }
    for (const auto& a : row.a) only_tx(a, "input row");
    only_tx(row.b, "input row");
  }

  if (!(s.R >= 0.0) || !std::isfinite(s.R)) fail("R must be finite and >= 0");
  if (!(s.wbar >= 0.0) || !std::isfinite(s.wbar)) fail("wbar must be finite and >= 0");
  if (s.R > 0.0 && s.nw == 0) fail("R > 0 needs at least one disturbance variable");
  if (s.w_active()) {
    if (!s.q) fail("R > 0 needs q(t)");
    same_vars(*s.q, "q");
    for (const auto& v : used_vars(*s.q)) {
      if (v != "t") fail("q may only depend on t");
    }
    std::vector<double> pt(s.vars.size(), 0.0);
    pt[0] = s.t0;
    const double q0 = s.q->eval(pt);
    pt[0] = s.T;
    const double qT = s.q->eval(pt);
    if (std::abs(q0) > 1e-12) fail("q(t0) must be 0");
    if (std::abs(qT - 1.0) > 1e-12) fail("q(T) must be 1");
    const Polynomial dq = s.q->diff(std::size_t{0});
    for (int i = 0; i <= 1000; ++i) {
      pt[0] = s.t0 + (s.T - s.t0) * i / 1000.0;
      if (dq.eval(pt) < -1e-12) fail("q must be nondecreasing on [t0, T]");
    }
  }
  if (s.delta_encoding == DeltaEncoding::kBox) {
    if (static_cast<int>(s.delta_bounds.size()) != s.nd) {
      fail("delta_bounds needs one bound per uncertain parameter");
    }
    for (double b : s.delta_bounds) {
      if (!(b >= 0.0) || !std::isfinite(b)) fail("delta bounds must be finite and >= 0");
    }
  } else {
    if (!(s.delta_bar >= 0.0) || !std::isfinite(s.delta_bar)) fail("delta_bar must be >= 0");
  }
  if (!(s.eps > 0.0)) fail("eps must be > 0");

  const auto& d = s.degrees;
  if (d.V < 1) fail("deg_V must be >= 1");
  if (d.V_t < 0 || d.k < 0 || d.k_t < 0) fail("template degrees must be >= 0");
  if (d.s < 0 || d.s % 2) fail("deg_s must be even and >= 0");
  for (const auto& [fam, deg] : d.family) {
    static const std::set<std::string> known{"s1", "s2", "s3", "s4", "s5", "s6",
                                             "s7", "s8", "s9", "s10", "s11", "sa"};
    if (!known.count(fam)) fail("unknown multiplier family '" + fam + "'");
    if (deg < 0 || deg % 2) fail("multiplier degrees must be even and >= 0");
  }
  if (!s.k_dep.t && !s.k_dep.x) fail("k must depend on t or x");
  if (s.k_dep.w && s.nw == 0) fail("k cannot depend on w without disturbances");
  if (s.k_dep.d && s.nd == 0) fail("k cannot depend on d without uncertain parameters");

  if (!s.x_eq.empty() && static_cast<int>(s.x_eq.size()) != s.n) fail("x_eq has the wrong size");
  if (!s.u_eq.empty() && static_cast<int>(s.u_eq.size()) != m) fail("u_eq has the wrong size");
  if (s.V0) only_tx(*s.V0, "V0");
}

// ---------------------------------------------------------------------------

std::string write_spec(const ProblemSpec& s) {
  std::ostringstream out;
  out << "name = " << s.name << "\n\n[variables]\n";
  auto names = [&](std::size_t first, int count) {
    std::string r;
    for (int i = 0; i < count; ++i) {
      if (i) r += ' ';
      r += s.vars.name(first + i);
    }
    return r;
  };
  out << "states = " << names(1, s.n) << "\n";
  if (s.m() > 0) {
    out << "inputs =";
    for (const auto& u : s.inputs) out << ' ' << u;
    out << "\n";
  }
  if (s.nw > 0) out << "disturbances = " << names(1 + s.n, s.nw) << "\n";
  if (s.nd > 0) out << "parameters = " << names(1 + s.n + s.nw, s.nd) << "\n";

  std::vector<std::string> ext_names = s.vars.names();
  ext_names.insert(ext_names.end(), s.inputs.begin(), s.inputs.end());
  const VarSet ext(ext_names);
  out << "\n[dynamics]\n";
  for (int i = 0; i < s.n; ++i) {
    Polynomial rhs = s.f[i].rebase(ext);
    for (int j = 0; j < s.m(); ++j) {
      rhs += s.g[i][j].rebase(ext) * Polynomial::variable(ext, s.inputs[j]);
    }
    out << s.vars.name(s.x_index(i)) << "' = " << rhs.to_string() << "\n";
  }
  out << "\n[horizon]\nt0 = " << format_double(s.t0) << "\nT = " << format_double(s.T) << "\n";
  out << "\n[tube]\n";
  for (const auto& term : s.tube) {
    out << (term.terminal_only ? "terminal: " : "always: ") << term.r.to_string() << "\n";
  }
  if (!s.input_rows.empty()) {
    out << "\n[inputs]\n";
    for (const auto& row : s.input_rows) {
      Polynomial lhs(ext);
      for (int j = 0; j < s.m(); ++j) {
        lhs += row.a[j].rebase(ext) * Polynomial::variable(ext, s.inputs[j]);
      }
      lhs -= row.b.rebase(ext);
      out << lhs.to_string() << " <= 0\n";
    }
  }
  if (s.nw > 0 || s.nd > 0 || s.R > 0.0) {
    out << "\n[uncertainty]\n";
    out << "R = " << format_double(s.R) << "\n";
    if (s.q) out << "q = " << s.q->to_string() << "\n";
    out << "wbar = " << format_double(s.wbar) << "\n";
    if (s.nd > 0) {
      out << "delta_encoding = "
          << (s.delta_encoding == DeltaEncoding::kBall ? "ball" : "box") << "\n";
      if (!s.delta_bounds.empty()) out << "delta_bounds = " << join_doubles(s.delta_bounds) << "\n";
      if (s.delta_encoding == DeltaEncoding::kBall) {
        out << "delta_bar = " << format_double(s.delta_bar) << "\n";
      }
    }
  }
  const auto& d = s.degrees;
  out << "\n[templates]\n";
  out << "deg_V = " << d.V << "\ndeg_V_t = " << d.V_t << "\ndeg_k = " << d.k
      << "\ndeg_k_t = " << d.k_t << "\ndeg_s = " << d.s << "\n";
  for (const auto& [fam, deg] : d.family) out << "deg_" << fam << " = " << deg << "\n";
  out << "k_depends =";
  if (s.k_dep.t) out << " t";
  if (s.k_dep.x) out << " x";
  if (s.k_dep.w) out << " w";
  if (s.k_dep.d) out << " d";
  out << "\n\n[options]\neps = " << format_double(s.eps) << "\n";
  if (!s.x_eq.empty()) out << "x_eq = " << join_doubles(s.x_eq) << "\n";
  if (!s.u_eq.empty()) out << "u_eq = " << join_doubles(s.u_eq) << "\n";
  if (s.V0) out << "V0 = " << s.V0->to_string() << "\n";
  return out.str();
}

ProblemSpec parse_spec(std::string_view text) {
  // First pass: collect (section, key/line) entries so the variable set is
  // known before any polynomial is parsed.
  struct Entry {
    std::string section;
    std::string key;
    std::string value;
    int line;
  };
  std::vector<Entry> entries;
  std::string section;
  int lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  static const std::set<std::string> sections{"", "variables", "dynamics", "horizon", "tube",
                                              "inputs", "uncertainty", "templates", "options"};
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw SpecError("line " + std::to_string(lineno) + ": bad section");
      section = trim(line.substr(1, line.size() - 2));
      if (!sections.count(section)) {
        throw SpecError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      }
      continue;
    }
    if (section == "tube") {
      const auto colon = line.find(':');
      if (colon == std::string::npos) {
        throw SpecError("line " + std::to_string(lineno) +
                        ": tube lines look like 'terminal: <poly>' or 'always: <poly>'");
      }
      entries.push_back({section, trim(line.substr(0, colon)), trim(line.substr(colon + 1)), lineno});
      continue;
    }
    if (section == "inputs") {
      entries.push_back({section, "", line, lineno});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw SpecError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    entries.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1)), lineno});
  }

  ProblemSpec s;
  std::vector<std::string> states, dist, params;
  for (const auto& e : entries) {
    if (e.section == "" && e.key == "name") {
      s.name = e.value;
    } else if (e.section == "") {
      throw SpecError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    } else if (e.section == "variables") {
      auto list = split_ws(e.value);
      for (const auto& v : list) {
        if (!is_identifier(v) || v == "t") {
          throw SpecError("line " + std::to_string(e.line) + ": bad variable name '" + v + "'");
        }
      }
      if (e.key == "states") states = list;
      else if (e.key == "inputs") s.inputs = list;
      else if (e.key == "disturbances") dist = list;
      else if (e.key == "parameters") params = list;
      else throw SpecError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
    }
  }
  if (states.empty()) throw SpecError("[variables] must list the states");
  s.n = static_cast<int>(states.size());
  s.nw = static_cast<int>(dist.size());
  s.nd = static_cast<int>(params.size());
  try {
    s.vars = make_vars(states, dist, params);
  } catch (const PolynomialError& err) {
    throw SpecError(std::string("duplicate variable names: ") + err.what());
  }
  std::vector<std::string> ext_names = s.vars.names();
  ext_names.insert(ext_names.end(), s.inputs.begin(), s.inputs.end());
  VarSet ext;
  try {
    ext = VarSet(ext_names);
  } catch (const PolynomialError& err) {
    throw SpecError(std::string("duplicate variable names: ") + err.what());
  }

  std::vector<std::string> rhs(s.n);
  std::vector<bool> have_rhs(s.n, false);
  bool have_t0 = false, have_T = false;
  auto poly = [&](const Entry& e, const VarSet& vs) {
    try {
      return Polynomial::parse(vs, e.value);
    } catch (const PolynomialError& err) {
      throw SpecError("line " + std::to_string(e.line) + ": " + err.what());
    }
  };
  for (const auto& e : entries) {
    const std::string where = "line " + std::to_string(e.line) + ": ";
    if (e.section == "dynamics") {
      if (e.key.size() < 2 || e.key.back() != '\'') {
        throw SpecError(where + "dynamics lines look like \"x' = ...\"");
      }
      const std::string st = e.key.substr(0, e.key.size() - 1);
      auto it = std::find(states.begin(), states.end(), st);
      if (it == states.end()) throw SpecError(where + "unknown state '" + st + "'");
      const auto i = it - states.begin();
      if (have_rhs[i]) throw SpecError(where + "duplicate dynamics for '" + st + "'");
      poly(e, ext);  // syntax check with a line number
      rhs[i] = e.value;
      have_rhs[i] = true;
    } else if (e.section == "horizon") {
      if (e.key == "t0") s.t0 = parse_double(e.value, e.line), have_t0 = true;
      else if (e.key == "T") s.T = parse_double(e.value, e.line), have_T = true;
      else throw SpecError(where + "unknown key '" + e.key + "'");
    } else if (e.section == "tube") {
      if (e.key != "terminal" && e.key != "always") {
        throw SpecError(where + "tube terms are 'terminal' or 'always'");
      }
      s.tube.push_back({poly(e, s.vars), e.key == "terminal"});
    } else if (e.section == "inputs") {
      std::string lhs_text, rhs_text;
      double sign = 1.0;
      if (auto p = e.value.find("<="); p != std::string::npos) {
        lhs_text = e.value.substr(0, p);
        rhs_text = e.value.substr(p + 2);
      } else if (auto p2 = e.value.find(">="); p2 != std::string::npos) {
        lhs_text = e.value.substr(0, p2);
        rhs_text = e.value.substr(p2 + 2);
        sign = -1.0;
      } else {
        throw SpecError(where + "input constraints look like '<lhs> <= <rhs>'");
      }
      Entry le = e, re = e;
      le.value = lhs_text;
      re.value = rhs_text;
      const Polynomial diff = (poly(le, ext) - poly(re, ext)) * sign;  // <= 0
      InputRow row{{}, Polynomial(s.vars)};
      Polynomial rest = diff;
      for (std::size_t j = 0; j < s.inputs.size(); ++j) rest = rest.substitute(s.vars.size() + j, 0.0);
      Polynomial rebuilt = rest;
      for (std::size_t j = 0; j < s.inputs.size(); ++j) {
        Polynomial a = diff.diff(s.vars.size() + j);
        for (std::size_t l = 0; l < s.inputs.size(); ++l) a = a.substitute(s.vars.size() + l, 0.0);
        rebuilt += a * Polynomial::variable(ext, s.inputs[j]);
        row.a.push_back(a.rebase(s.vars));
      }
      if ((diff - rebuilt).degree() >= 0) {
        throw SpecError(where + "input constraint is not affine in the inputs");
      }
      row.b = (-rest).rebase(s.vars);
      s.input_rows.push_back(std::move(row));
    } else if (e.section == "uncertainty") {
      if (e.key == "R") s.R = parse_double(e.value, e.line);
      else if (e.key == "q") s.q = poly(e, s.vars);
      else if (e.key == "wbar") s.wbar = parse_double(e.value, e.line);
      else if (e.key == "delta_bounds") s.delta_bounds = parse_doubles(e.value, e.line);
      else if (e.key == "delta_bar") s.delta_bar = parse_double(e.value, e.line);
      else if (e.key == "delta_encoding") {
        if (e.value == "box") s.delta_encoding = DeltaEncoding::kBox;
        else if (e.value == "ball") s.delta_encoding = DeltaEncoding::kBall;
        else throw SpecError(where + "delta_encoding is 'box' or 'ball'");
      } else {
        throw SpecError(where + "unknown key '" + e.key + "'");
      }
    } else if (e.section == "templates") {
      auto& d = s.degrees;
      if (e.key == "deg_V") d.V = parse_int(e.value, e.line);
      else if (e.key == "deg_V_t") d.V_t = parse_int(e.value, e.line);
      else if (e.key == "deg_k") d.k = parse_int(e.value, e.line);
      else if (e.key == "deg_k_t") d.k_t = parse_int(e.value, e.line);
      else if (e.key == "deg_s") d.s = parse_int(e.value, e.line);
      else if (e.key.rfind("deg_s", 0) == 0) d.family[e.key.substr(4)] = parse_int(e.value, e.line);
      else if (e.key == "k_depends") {
        s.k_dep = KDependence{false, false, false, false};
        for (const auto& tok : split_ws(e.value)) {
          if (tok == "t") s.k_dep.t = true;
          else if (tok == "x") s.k_dep.x = true;
          else if (tok == "w") s.k_dep.w = true;
          else if (tok == "d") s.k_dep.d = true;
          else throw SpecError(where + "k_depends takes a subset of t x w d");
        }
      } else {
        throw SpecError(where + "unknown key '" + e.key + "'");
      }
    } else if (e.section == "options") {
      if (e.key == "eps") s.eps = parse_double(e.value, e.line);
      else if (e.key == "x_eq") s.x_eq = parse_doubles(e.value, e.line);
      else if (e.key == "u_eq") s.u_eq = parse_doubles(e.value, e.line);
      else if (e.key == "V0") s.V0 = poly(e, s.vars);
      else throw SpecError(where + "unknown key '" + e.key + "'");
    }
  }
  for (int i = 0; i < s.n; ++i) {
    if (!have_rhs[i]) throw SpecError("missing dynamics for state '" + states[i] + "'");
  }
  if (!have_t0 || !have_T) throw SpecError("[horizon] needs t0 and T");
  if (s.nd > 0 && s.delta_encoding == DeltaEncoding::kBox && s.delta_bounds.empty()) {
    throw SpecError("uncertain parameters need delta_bounds");
  }
  split_control_affine(s, rhs);
  validate(s);
  return s;
}

std::uint64_t spec_hash(const ProblemSpec& spec) {
  const std::string text = write_spec(spec);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace brs
