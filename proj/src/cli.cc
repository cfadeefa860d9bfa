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

#include "brs/cli.h"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "brs/certify.h"
#include "brs/models.h"
#include "brs/simulate.h"
#include "brs/synthesis.h"

#ifndef BRS_VERSION
#define BRS_VERSION "0.0.0"
#endif

namespace brs::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Failed certification: carries the report already printed.
class CertificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Spec source shared by several commands.
struct SpecSource {
  std::string builtin;
  std::string path;
  std::string preset = "reduced";
  std::optional<int> deg_V, deg_k, deg_s;
  std::optional<double> eps;

  void add(CLI::App* app) {
    auto* b = app->add_option("--builtin", builtin, "Built-in model name");
    auto* s = app->add_option("--spec", path, "Problem spec file");
    b->excludes(s);
    s->excludes(b);
    app->add_option("--preset", preset, "Template preset of a built-in")
        ->check(CLI::IsMember({"reduced", "full"}));
    app->add_option("--deg-V", deg_V, "Degree of V in the state")->check(CLI::Range(1, 20));
    app->add_option("--deg-k", deg_k, "Degree of the feedback k")->check(CLI::Range(0, 20));
    app->add_option("--deg-s", deg_s, "Degree of the SOS multipliers")->check(CLI::Range(0, 20));
    app->add_option("--eps", eps, "Positivity margin of the multipliers")
        ->check(CLI::PositiveNumber);
  }

  bool given() const { return !builtin.empty() || !path.empty(); }

  ProblemSpec load() const {
    ProblemSpec s;
    if (!builtin.empty()) {
      s = models::builtin(builtin, preset == "full" ? models::Preset::kFull
                                                    : models::Preset::kReduced)
              .spec;
    } else if (!path.empty()) {
      s = parse_spec(read_file(path));
    } else {
      throw UsageError("one of --builtin or --spec is required");
    }
    if (deg_V) {
      s.degrees.V = *deg_V;
      s.degrees.V_t = std::min(s.degrees.V_t, *deg_V);
    }
    if (deg_k) {
      s.degrees.k = *deg_k;
      s.degrees.k_t = std::min(s.degrees.k_t, *deg_k);
    }
    if (deg_s) s.degrees.s = *deg_s;
    if (eps) s.eps = *eps;
    validate(s);
    return s;
  }

  json to_json() const {
    json j;
    if (!builtin.empty()) j["builtin"] = builtin;
    if (!path.empty()) j["spec"] = path;
    j["preset"] = preset;
    if (deg_V) j["deg_V"] = *deg_V;
    if (deg_k) j["deg_k"] = *deg_k;
    if (deg_s) j["deg_s"] = *deg_s;
    if (eps) j["eps"] = *eps;
    return j;
  }
};

struct Loaded {
  Certificate cert;
  ProblemSpec spec;
};

// A certificate plus its problem: the embedded one, or an explicit spec
// that must hash the same.
Loaded load_certificate(const std::string& path, const SpecSource& src) {
  Loaded l;
  l.cert = parse_certificate(read_file(path));
  if (src.given()) {
    l.spec = src.load();
    if (hash_hex(spec_hash(l.spec)) != l.cert.spec_hash) {
      throw SpecError("certificate " + path + " was made for a different spec (hash " +
                      l.cert.spec_hash + ")");
    }
  } else {
    l.spec = certificate_spec(l.cert);
  }
  return l;
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

json manifest(const std::string& command, json config, const ProblemSpec& spec) {
  json m;
  m["tool"] = "brs";
  m["version"] = BRS_VERSION;
  m["command"] = command;
  m["config"] = std::move(config);
  m["spec"] = {{"name", spec.name}, {"hash", hash_hex(spec_hash(spec))}};
  return m;
}

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

std::vector<double> parse_list(const std::vector<double>& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) {
    throw UsageError(std::string(what) + " needs " + std::to_string(n) + " values, got " +
                     std::to_string(v.size()));
  }
  return v;
}

// ---------------------------------------------------------------------------
// Commands.

struct SynthesizeCmd {
  SpecSource src;
  int iters = 5;
  double tol_bisect = 1e-4;
  std::uint64_t seed = 1;
  std::string out = ".";
  bool verbose = false;

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("synthesize", "Search V, k and gamma for a spec");
    src.add(c);
    c->add_option("--iters", iters, "Alternation iterations")->check(CLI::Range(1, 1000));
    c->add_option("--tol-bisect", tol_bisect, "Relative bisection tolerance")
        ->check(CLI::PositiveNumber);
    c->add_option("--seed", seed, "Seed (recorded; synthesis itself is deterministic)");
    c->add_option("--out", out, "Output directory");
    c->add_flag("--verbose", verbose, "Log solver progress to stderr");
  }

  int run() {
    const auto start = Clock::now();
    const ProblemSpec spec = src.load();
    SynthesisOptions opts;
    opts.iterations = iters;
    opts.tol_bisect = tol_bisect;
    if (verbose) opts.log = [](const std::string& s) { std::cerr << s << "\n"; };
    const SynthesisResult r = synthesize(spec, opts);

    const std::string cert_path = out_path(out, "certificate.txt");
    write_atomic(cert_path, write_certificate(r.certificate));

    json cfg = src.to_json();
    cfg["iters"] = iters;
    cfg["tol_bisect"] = tol_bisect;
    cfg["seed"] = seed;
    json m = manifest("synthesize", cfg, spec);
    m["status"] = r.status;
    m["gamma"] = r.certificate.gamma;
    m["gamma_history"] = r.certificate.gamma_history;
    json steps = json::array();
    for (const auto& st : r.steps) {
      steps.push_back({{"step", st.step},
                       {"iteration", st.iteration},
                       {"seconds", st.seconds},
                       {"gamma", st.gamma},
                       {"probes", st.probes},
                       {"margin", st.margin}});
    }
    m["steps"] = steps;
    m["outputs"] = {cert_path};
    m["wall_seconds"] = seconds_since(start);
    write_atomic(out_path(out, "manifest.json"), m.dump(2) + "\n");

    std::printf("status %s\ngamma %.17g\n", r.status.c_str(), r.certificate.gamma);
    for (std::size_t i = 0; i < r.certificate.gamma_history.size(); ++i) {
      std::printf("iteration %zu gamma %.17g\n", i + 1, r.certificate.gamma_history[i]);
    }
    std::printf("wrote %s\n", cert_path.c_str());
    return kOk;
  }
};

struct CertifyCmd {
  std::string cert;
  SpecSource src;
  long samples = 10000;
  std::uint64_t seed = 1;
  int workers = 1;
  std::optional<double> tol_res, tol_psd;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("certify", "Check a certificate independently");
    c->add_option("certificate", cert, "Certificate file")->required()->check(CLI::ExistingFile);
    src.add(c);
    c->add_option("--samples", samples, "Samples per containment")->check(CLI::Range(1L, 100000000L));
    c->add_option("--seed", seed, "Sampling seed");
    c->add_option("--workers", workers, "Sampling threads")->check(CLI::Range(1, 256));
    c->add_option("--tol-res", tol_res, "Identity residual tolerance")->check(CLI::PositiveNumber);
    c->add_option("--tol-psd", tol_psd, "Gram eigenvalue tolerance")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "Output directory");
  }

  int run() {
    const auto start = Clock::now();
    const Loaded l = load_certificate(cert, src);
    CertifyOptions o;
    o.samples = samples;
    o.seed = seed;
    o.workers = workers;
    o.tol_res = tol_res;
    o.tol_psd = tol_psd;
    const VerificationReport rep = certify(l.cert, l.spec, o);
    const std::string report = out_path(out, "report.txt");
    write_atomic(report, rep.to_text());

    json cfg = src.to_json();
    cfg["certificate"] = cert;
    cfg["samples"] = samples;
    cfg["seed"] = seed;
    cfg["workers"] = workers;
    if (tol_res) cfg["tol_res"] = *tol_res;
    if (tol_psd) cfg["tol_psd"] = *tol_psd;
    json m = manifest("certify", cfg, l.spec);
    m["verdict"] = to_string(rep.verdict);
    m["summary"] = rep.summary();
    m["outputs"] = {report};
    m["wall_seconds"] = seconds_since(start);
    write_atomic(out_path(out, "manifest.json"), m.dump(2) + "\n");

    std::printf("%s\nwrote %s\n", rep.summary().c_str(), report.c_str());
    if (rep.verdict != Verdict::kCertified) throw CertificationFailure(rep.summary());
    return kOk;
  }
};

struct SimulateCmd {
  std::string cert;
  SpecSource src;
  std::vector<double> x0;
  double dt = 0.0;
  std::uint64_t seed = 1;
  bool disturbed = false;
  double rate = 50.0;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("simulate", "Integrate the closed loop from one state");
    c->add_option("certificate", cert, "Certificate file")->required()->check(CLI::ExistingFile);
    src.add(c);
    c->add_option("--x0", x0, "Initial state")->required()->expected(1, -1);
    c->add_option("--dt", dt, "RK4 step (default horizon / 2000)")->check(CLI::NonNegativeNumber);
    c->add_option("--seed", seed, "Disturbance seed");
    c->add_flag("--disturbed", disturbed, "Drive budgeted disturbances and parameters");
    c->add_option("--rate", rate, "Disturbance update rate [Hz]")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "Output directory");
  }

  int run() {
    const auto start = Clock::now();
    const Loaded l = load_certificate(cert, src);
    IntegrateOptions io;
    io.dt = dt;
    std::optional<Signal> w, d;
    if (disturbed) {
      w = Signal::shaped_disturbance(l.spec, SplitMix64::substream(seed ^ 0x5157, 0), rate);
      d = Signal::parameter(l.spec, SplitMix64::substream(seed ^ 0xd417, 0), rate);
      io.w = &*w;
      io.d = &*d;
    }
    const Trace tr = integrate(l.spec, l.cert, parse_list(x0, l.spec.n, "--x0"), io);
    const std::string trace = out_path(out, "trace.txt");
    write_atomic(trace, tr.to_text());

    json cfg = src.to_json();
    cfg["certificate"] = cert;
    cfg["x0"] = x0;
    cfg["dt"] = dt;
    cfg["seed"] = seed;
    cfg["disturbed"] = disturbed;
    cfg["rate"] = rate;
    json m = manifest("simulate", cfg, l.spec);
    m["in_tube"] = tr.in_tube();
    m["saturated"] = tr.saturated;
    m["terminal_margin"] = tr.terminal_margin;
    m["outputs"] = {trace};
    m["wall_seconds"] = seconds_since(start);
    write_atomic(out_path(out, "manifest.json"), m.dump(2) + "\n");

    std::printf("in_tube %d saturated %d terminal_margin %.6g\nwrote %s\n", tr.in_tube(),
                tr.saturated, tr.terminal_margin, trace.c_str());
    return kOk;
  }
};

struct MonteCarloCmd {
  std::string cert;
  SpecSource src;
  int samples = 100;
  std::uint64_t seed = 1;
  double dt = 0.0;
  int workers = 1;
  bool nominal = false;
  double rate = 50.0;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("monte-carlo", "Simulate runs from the certified set");
    c->add_option("certificate", cert, "Certificate file")->required()->check(CLI::ExistingFile);
    src.add(c);
    c->add_option("--samples", samples, "Number of runs")->check(CLI::Range(1, 100000000));
    c->add_option("--seed", seed, "Seed for starts and signals");
    c->add_option("--dt", dt, "RK4 step (default horizon / 2000)")->check(CLI::NonNegativeNumber);
    c->add_option("--workers", workers, "Simulation threads")->check(CLI::Range(1, 256));
    c->add_flag("--nominal", nominal, "No disturbances or parameter variation");
    c->add_option("--rate", rate, "Disturbance update rate [Hz]")->check(CLI::PositiveNumber);
    c->add_option("--out", out, "Output directory");
  }

  int run() {
    const auto start = Clock::now();
    const Loaded l = load_certificate(cert, src);
    MonteCarloOptions o;
    o.n = samples;
    o.seed = seed;
    o.dt = dt;
    o.workers = workers;
    o.disturbed = !nominal;
    o.rate_hz = rate;
    const MonteCarloSummary s = monte_carlo(l.spec, l.cert, o);
    const std::string summary = out_path(out, "montecarlo.txt");
    write_atomic(summary, s.to_text());

    json cfg = src.to_json();
    cfg["certificate"] = cert;
    cfg["samples"] = samples;
    cfg["seed"] = seed;
    cfg["dt"] = dt;
    cfg["workers"] = workers;
    cfg["nominal"] = nominal;
    cfg["rate"] = rate;
    json m = manifest("monte-carlo", cfg, l.spec);
    m["exits"] = s.exits;
    m["saturated"] = s.saturated;
    m["blowups"] = s.blowups;
    m["outputs"] = {summary};
    m["wall_seconds"] = seconds_since(start);
    write_atomic(out_path(out, "manifest.json"), m.dump(2) + "\n");

    std::printf("runs %d exits %d saturated %d blowups %d\nwrote %s\n", s.n, s.exits,
                s.saturated, s.blowups, summary.c_str());
    if (s.exits > 0 || s.saturated > 0 || s.blowups > 0) {
      throw CertificationFailure("monte carlo found runs outside the funnel promise");
    }
    return kOk;
  }
};

struct LevelSetCmd {
  std::string cert;
  SpecSource src;
  double t = 0.0;
  CLI::Option* t_opt = nullptr;
  std::vector<std::string> axes;
  std::vector<double> lo, hi, fixed;
  int points = 101;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("export-levelset", "Grid of V on a 1-3 axis slice");
    c->add_option("certificate", cert, "Certificate file")->required()->check(CLI::ExistingFile);
    src.add(c);
    t_opt = c->add_option("--t", t, "Slice time (default t0)");
    c->add_option("--axes", axes, "Free states, by name or 0-based index")
        ->required()
        ->expected(1, 3);
    c->add_option("--lo", lo, "Lower bounds per axis")->required()->expected(1, 3);
    c->add_option("--hi", hi, "Upper bounds per axis")->required()->expected(1, 3);
    c->add_option("--points", points, "Grid points per axis")->check(CLI::Range(2, 100000));
    c->add_option("--fixed", fixed, "Values of the other states (default x_eq)")
        ->expected(1, -1);
    c->add_option("--out", out, "Output directory");
  }

  int state_index(const ProblemSpec& s, const std::string& a) const {
    for (int i = 0; i < s.n; ++i) {
      if (s.vars.name(s.x_index(i)) == a) return i;
    }
    try {
      std::size_t used = 0;
      const int i = std::stoi(a, &used);
      if (used == a.size() && i >= 0 && i < s.n) return i;
    } catch (const std::exception&) {
    }
    throw UsageError("unknown state axis " + a);
  }

  int run() {
    const auto start = Clock::now();
    const Loaded l = load_certificate(cert, src);
    SliceSpec slice;
    for (const auto& a : axes) slice.axes.push_back(state_index(l.spec, a));
    const int k = static_cast<int>(slice.axes.size());
    slice.lo = parse_list(lo, k, "--lo");
    slice.hi = parse_list(hi, k, "--hi");
    slice.points = points;
    if (!fixed.empty()) slice.fixed = parse_list(fixed, l.spec.n, "--fixed");
    const double at = t_opt->count() > 0 ? t : l.spec.t0;
    const LevelSetGrid g = export_levelset(l.cert, l.spec, at, slice);
    const std::string grid = out_path(out, "levelset.txt");
    write_atomic(grid, g.to_text());

    json cfg = src.to_json();
    cfg["certificate"] = cert;
    cfg["t"] = at;
    cfg["axes"] = axes;
    cfg["lo"] = lo;
    cfg["hi"] = hi;
    cfg["points"] = points;
    if (!fixed.empty()) cfg["fixed"] = fixed;
    json m = manifest("export-levelset", cfg, l.spec);
    m["level"] = g.level;
    m["outputs"] = {grid};
    m["wall_seconds"] = seconds_since(start);
    write_atomic(out_path(out, "manifest.json"), m.dump(2) + "\n");
    std::printf("level %.17g\nwrote %s\n", g.level, grid.c_str());
    return kOk;
  }
};

struct ExportSpecCmd {
  SpecSource src;
  std::string out = ".";

  void add(CLI::App& app) {
    auto* c = app.add_subcommand("export-spec", "Write a spec in the text format");
    src.add(c);
    c->add_option("--out", out, "Output directory");
  }

  int run() {
    const ProblemSpec s = src.load();
    const std::string path = out_path(out, s.name + ".spec");
    write_atomic(path, write_spec(s));
    std::printf("wrote %s\n", path.c_str());
    return kOk;
  }
};

int report(int code, const std::string& what) {
  std::fprintf(stderr, "brs: %s\n", what.c_str());
  return code;
}

}  // namespace

void write_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream o(tmp, std::ios::binary | std::ios::trunc);
    if (!o) throw UsageError("cannot write " + tmp.string());
    o << text;
    o.flush();
    if (!o) throw UsageError("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

int run(int argc, const char* const* argv) {
  CLI::App app{"Backward reachable sets by sum-of-squares funnel synthesis", "brs"};
  app.set_version_flag("--version", BRS_VERSION);
  app.set_config("--config", "", "TOML/INI file with option values");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  SynthesizeCmd synth;
  CertifyCmd cert;
  SimulateCmd sim;
  MonteCarloCmd mc;
  LevelSetCmd ls;
  ExportSpecCmd es;
  synth.add(app);
  cert.add(app);
  sim.add(app);
  mc.add(app);
  ls.add(app);
  es.add(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (app.got_subcommand("synthesize")) return synth.run();
    if (app.got_subcommand("certify")) return cert.run();
    if (app.got_subcommand("simulate")) return sim.run();
    if (app.got_subcommand("monte-carlo")) return mc.run();
    if (app.got_subcommand("export-levelset")) return ls.run();
    if (app.got_subcommand("export-spec")) return es.run();
    return kUsage;
  } catch (const UsageError& e) {
    return report(kUsage, e.what());
  } catch (const std::invalid_argument& e) {
    return report(kUsage, e.what());
  } catch (const SpecError& e) {
    return report(kSpecInvalid, e.what());
  } catch (const PolynomialError& e) {
    return report(kSpecInvalid, e.what());
  } catch (const CertificateError& e) {
    return report(kSpecInvalid, e.what());
  } catch (const CertificationFailure& e) {
    return report(kCertificationFailure, e.what());
  } catch (const SamplingError& e) {
    return report(kCertificationFailure, e.what());
  } catch (const SynthesisError& e) {
    return report(kSolverFailure, e.what());
  } catch (const SosError& e) {
    return report(kSolverFailure, e.what());
  } catch (const sdp::SdpError& e) {
    return report(kSolverFailure, e.what());
  } catch (const fs::filesystem_error& e) {
    return report(kUsage, e.what());
  }
}

}  // namespace brs::cli
