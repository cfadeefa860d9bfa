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

#include "brs/certificate.h"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "brs/sos.h"

namespace brs {

namespace names {
std::string tube(int j) { return "tube[" + std::to_string(j) + "]"; }
std::string terminal(int j) { return "terminal[" + std::to_string(j) + "]"; }
std::string input(int i) { return "input[" + std::to_string(i) + "]"; }
std::string indexed(const std::string& family, int i) {
  return family + "[" + std::to_string(i) + "]";
}
std::string indexed(const std::string& family, int i, int j) {
  return family + "[" + std::to_string(i) + "," + std::to_string(j) + "]";
}
}  // namespace names

Polynomial GramForm::poly(const VarSet& vars) const {
  Polynomial p = basis.empty() ? Polynomial(vars) : gram_polynomial(vars, Q, basis);
  return offset == 0.0 ? p : p + offset;
}

const GramForm* Certificate::multiplier(std::string_view name) const {
  for (const auto& m : multipliers) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

GramForm* Certificate::multiplier(std::string_view name) {
  for (auto& m : multipliers) {
    if (m.name == name) return &m;
  }
  return nullptr;
}

const GramForm* Certificate::constraint(std::string_view name) const {
  for (const auto& c : constraints) {
    if (c.name == name) return &c;
  }
  return nullptr;
}

namespace {

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_form(std::ostringstream& out, const char* kind, const GramForm& f, const VarSet& vars) {
  out << kind << ' ' << f.name << "\noffset " << g17(f.offset) << "\nbasis " << f.basis.size();
  for (const auto& m : f.basis) out << ' ' << monomial_to_string(vars, m);
  out << "\ngram " << f.Q.rows() << "\n";
  for (Eigen::Index i = 0; i < f.Q.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.Q.cols(); ++j) {
      if (j) out << ' ';
      out << g17(f.Q(i, j));
    }
    out << "\n";
  }
  out << "end\n";
}

class Reader {
 public:
  explicit Reader(std::string_view text) : in_{std::string(text)} {}

  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++lineno_;
      if (!line.empty()) return true;
    }
    return false;
  }

  std::string expect(const std::string& key) {
    std::string line;
    if (!next(line)) fail("unexpected end of file, wanted '" + key + "'");
    if (line.rfind(key, 0) != 0) fail("expected '" + key + "', got '" + line + "'");
    return line.size() > key.size() ? line.substr(key.size() + 1) : std::string();
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw CertificateError("certificate line " + std::to_string(lineno_) + ": " + what);
  }

  double number(const std::string& s) const {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc()) fail("bad number '" + s + "'");
    return v;
  }

  std::istringstream& stream() { return in_; }

 private:
  std::istringstream in_;
  int lineno_ = 0;
};

Monomial single_monomial(const VarSet& vars, const std::string& text, const Reader& r) {
  Polynomial p = Polynomial::parse(vars, text);
  if (p.terms().size() != 1 || p.terms().begin()->second != 1.0) {
    r.fail("basis entry '" + text + "' is not a monomial");
  }
  return p.terms().begin()->first;
}

GramForm read_form(Reader& r, const std::string& name, const VarSet& vars) {
  GramForm f;
  f.name = name;
  f.offset = r.number(r.expect("offset"));
  std::istringstream basis(r.expect("basis"));
  std::size_t count = 0;
  if (!(basis >> count)) r.fail("bad basis count");
  for (std::size_t i = 0; i < count; ++i) {
    std::string tok;
    if (!(basis >> tok)) r.fail("basis is shorter than its count");
    f.basis.push_back(single_monomial(vars, tok, r));
  }
  const std::string n_text = r.expect("gram");
  const int n = static_cast<int>(r.number(n_text));
  if (n != static_cast<int>(count)) r.fail("gram size does not match the basis");
  f.Q.resize(n, n);
  for (int i = 0; i < n; ++i) {
    std::string line;
    if (!r.next(line)) r.fail("gram is truncated");
    std::istringstream row(line);
    for (int j = 0; j < n; ++j) {
      std::string tok;
      if (!(row >> tok)) r.fail("gram row is short");
      f.Q(i, j) = r.number(tok);
    }
  }
  r.expect("end");
  return f;
}

}  // namespace

std::string write_certificate(const Certificate& c) {
  std::ostringstream out;
  out << "brs-certificate v1\n";
  out << "spec " << c.spec_name << "\n";
  out << "spec_hash " << c.spec_hash << "\n";
  out << "status " << c.status << "\n";
  out << "tol_res " << g17(c.tol_res) << "\n";
  out << "tol_psd " << g17(c.tol_psd) << "\n";
  out << "gamma " << g17(c.gamma) << "\n";
  out << "gamma_history " << c.gamma_history.size();
  for (double g : c.gamma_history) out << ' ' << g17(g);
  out << "\n";
  // Spec lines are prefixed so they can never be mistaken for keys.
  std::istringstream spec(c.spec_text);
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(spec, line)) lines.push_back(line);
  out << "spec_text " << lines.size() << "\n";
  for (const auto& l : lines) out << "| " << l << "\n";
  out << "V " << c.V.to_string() << "\n";
  out << "k " << c.k.size() << "\n";
  for (const auto& p : c.k) out << "| " << p.to_string() << "\n";
  for (const auto& m : c.multipliers) write_form(out, "multiplier", m, c.vars);
  for (const auto& m : c.constraints) write_form(out, "constraint", m, c.vars);
  out << "end-certificate\n";
  return out.str();
}

Certificate parse_certificate(std::string_view text) {
  Reader r(text);
  std::string line;
  if (!r.next(line) || line != "brs-certificate v1") r.fail("not a brs certificate");
  Certificate c;
  c.spec_name = r.expect("spec");
  c.spec_hash = r.expect("spec_hash");
  c.status = r.expect("status");
  c.tol_res = r.number(r.expect("tol_res"));
  c.tol_psd = r.number(r.expect("tol_psd"));
  c.gamma = r.number(r.expect("gamma"));
  {
    std::istringstream hist(r.expect("gamma_history"));
    std::size_t n = 0;
    hist >> n;
    for (std::size_t i = 0; i < n; ++i) {
      std::string tok;
      if (!(hist >> tok)) r.fail("gamma history is short");
      c.gamma_history.push_back(r.number(tok));
    }
  }
  const int spec_lines = static_cast<int>(r.number(r.expect("spec_text")));
  for (int i = 0; i < spec_lines; ++i) {
    if (!std::getline(r.stream(), line) || line.rfind("|", 0) != 0) r.fail("spec text is truncated");
    c.spec_text += line.size() > 2 ? line.substr(2) : std::string();
    c.spec_text += "\n";
  }
  ProblemSpec spec;
  try {
    spec = parse_spec(c.spec_text);
  } catch (const std::exception& e) {
    r.fail(std::string("embedded spec: ") + e.what());
  }
  c.vars = spec.vars;
  try {
    c.V = Polynomial::parse(c.vars, r.expect("V"));
    const int nk = static_cast<int>(r.number(r.expect("k")));
    for (int i = 0; i < nk; ++i) {
      if (!r.next(line) || line.rfind("| ", 0) != 0) r.fail("k is truncated");
      c.k.push_back(Polynomial::parse(c.vars, line.substr(2)));
    }
  } catch (const PolynomialError& e) {
    r.fail(e.what());
  }
  for (;;) {
    if (!r.next(line)) r.fail("missing end-certificate");
    if (line == "end-certificate") break;
    if (line.rfind("multiplier ", 0) == 0) {
      c.multipliers.push_back(read_form(r, line.substr(11), c.vars));
    } else if (line.rfind("constraint ", 0) == 0) {
      c.constraints.push_back(read_form(r, line.substr(11), c.vars));
    } else {
      r.fail("unexpected line '" + line + "'");
    }
  }
  return c;
}

ProblemSpec certificate_spec(const Certificate& c) {
  ProblemSpec spec = parse_spec(c.spec_text);
  const std::string h = hash_hex(spec_hash(spec));
  if (h != c.spec_hash) {
    throw CertificateError("embedded spec hash " + h + " does not match recorded " + c.spec_hash);
  }
  return spec;
}

}  // namespace brs
