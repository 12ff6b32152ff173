#include "funcdet/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "funcdet/boundary.hpp"
#include "funcdet/detratio.hpp"
#include "funcdet/error.hpp"
#include "funcdet/oracle.hpp"
#include "funcdet/problem.hpp"
#include "funcdet/zeromode.hpp"

namespace funcdet::cli {

namespace {

using Json = nlohmann::ordered_json;

struct Options {
  std::string command;
  std::string config;
  bool json = false;
  bool quiet = false;
  int count = 10;
  std::optional<int> terms;
};

struct Report {
  Json result = Json::object();
  std::vector<std::string> text;
  std::vector<std::string> warnings;
  int exit_code = kOk;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(Complex z) {
  if (z.imag() == 0.0) return num(z.real());
  return num(z.real()) + (z.imag() < 0 ? " - " : " + ") + num(std::abs(z.imag())) + "i";
}

Json complex_json(Complex z) { return Json{{"re", z.real()}, {"im", z.imag()}}; }

Json vector_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_json(v(i)));
  return out;
}

std::string hex64(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void append(std::vector<std::string>& to, const std::vector<std::string>& from) {
  for (const auto& w : from)
    if (std::find(to.begin(), to.end(), w) == to.end()) to.push_back(w);
}

void require_valid(const ProblemPair& pair) {
  std::vector<std::string> problems;
  const ValidationReport v1 = validate_problem(pair.p1, pair.settings.samples);
  const ValidationReport v2 = validate_problem(pair.p2, pair.settings.samples);
  for (const auto& m : v1.messages) problems.push_back("problem.1: " + m);
  for (const auto& m : v2.messages) problems.push_back("problem.2: " + m);
  if (problems.empty()) return;
  std::string msg = "invalid problem";
  for (const auto& m : problems) msg += "; " + m;
  throw Error(ErrorKind::Validation, "invalid_problem", msg);
}

struct AutoRatio {
  RatioResult ratio;
  std::optional<ZeroModeResult> zero_mode;
};

AutoRatio auto_ratio(const ProblemPair& pair) {
  AutoRatio out;
  const ZeroModeResult z = detect_zero_mode(pair.p1, pair.bc, pair.settings);
  if (z.multiplicity >= 2)
    throw DegenerateZeroMode("problem 1 has " + std::to_string(z.multiplicity) +
                             " zero modes; only a single zero mode can be extracted");
  if (z.multiplicity == 1) {
    ZeroModeResult details;
    out.ratio = ratio_zero_mode(pair.p1, pair.p2, pair.bc, pair.settings, SplitChoice::Auto, &details);
    out.zero_mode = std::move(details);
  } else {
    out.ratio = ratio_no_zero_mode(pair.p1, pair.p2, pair.bc, pair.settings);
  }
  return out;
}

Json zero_mode_json(const ZeroModeResult& z) {
  Json j;
  j["multiplicity"] = z.multiplicity;
  Json sv = Json::array();
  for (Eigen::Index i = 0; i < z.singular_values.size(); ++i) sv.push_back(z.singular_values(i));
  j["singular_values"] = sv;
  if (z.multiplicity != 1 || !z.y1) return j;
  const SolutionPath& path = z.y1->path;
  j["boundary_data"] = Json{{"u_a", vector_json(path.u_a)},
                            {"v_a", vector_json(path.v_a)},
                            {"u_b", vector_json(path.u_b)},
                            {"v_b", vector_json(path.v_b)}};
  j["norm_sq"] = z.norm_sq;
  j["B"] = complex_json(z.B);
  j["f10"] = complex_json(z.f10);
  if (z.split) {
    j["split"] = Json{{"strategy", to_string(z.split->strategy)},
                      {"columns", z.split->columns},
                      {"condition_number", z.split->condition_number}};
  }
  j["cancellation_residual"] = z.cancellation_residual;
  j["robin_frame"] = z.robin_frame;
  return j;
}

std::string lower(const char* s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// ---------------------------------------------------------------------------

void cmd_ratio(const ProblemPair& pair, Report& rep) {
  require_valid(pair);
  const BcClassification cls = check_self_adjoint(pair.bc);
  if (!cls.self_adjoint) rep.warnings.push_back("boundary conditions are not self-adjoint");
  const AutoRatio ar = auto_ratio(pair);
  append(rep.warnings, ar.ratio.warnings);

  rep.result["ratio"] = complex_json(ar.ratio.value);
  rep.result["method"] = to_string(ar.ratio.method);
  rep.result["det1"] = complex_json(ar.ratio.det1);
  rep.result["det2"] = complex_json(ar.ratio.det2);
  rep.result["wronskian_drift"] = Json::array({ar.ratio.drift1, ar.ratio.drift2});
  rep.result["classification"] = to_string(cls.kind);
  rep.result["zero_mode"] = ar.zero_mode ? zero_mode_json(*ar.zero_mode) : Json(nullptr);

  if (ar.zero_mode) {
    append(rep.warnings, ar.zero_mode->warnings);
    rep.text.push_back("zero mode detected (multiplicity 1); det' L1/det L2 = " + num(ar.ratio.value));
  } else {
    rep.text.push_back("det L1/det L2 = " + num(ar.ratio.value));
  }
}

void cmd_check(const ProblemPair& pair, Report& rep) {
  const BcClassification cls = check_self_adjoint(pair.bc);
  rep.result["classification"] = to_string(cls.kind);
  rep.result["self_adjoint"] = cls.self_adjoint;
  rep.result["extension"] = cls.extension;
  rep.result["phase_alpha"] = cls.phase_alpha ? Json(*cls.phase_alpha) : Json(nullptr);
  if (cls.robin) {
    rep.result["robin"] = Json{{"A", complex_json(cls.robin->A)},
                               {"B", complex_json(cls.robin->B)},
                               {"C", complex_json(cls.robin->C)},
                               {"D", complex_json(cls.robin->D)}};
  } else {
    rep.result["robin"] = nullptr;
  }
  Json diag = Json::object();
  for (const auto& [name, value] : cls.diagnostics) diag[name] = value;
  rep.result["diagnostics"] = diag;
  rep.result["notes"] = cls.notes;

  bool all_valid = true;
  Json problems = Json::array();
  int idx = 1;
  for (const ProblemSpec* p : {&pair.p1, &pair.p2}) {
    const ValidationReport v = validate_problem(*p, pair.settings.samples);
    all_valid = all_valid && v.valid;
    Json pos = Json::array();
    for (const auto& q : v.positivity) pos.push_back(Json{{"x", q.x}, {"value", q.value}});
    problems.push_back(Json{{"label", "problem." + std::to_string(idx)},
                            {"valid", v.valid},
                            {"hermiticity_residual", v.hermiticity_residual},
                            {"hermiticity_x", v.hermiticity_x},
                            {"positivity_violations", pos},
                            {"messages", v.messages}});
    rep.text.push_back("problem." + std::to_string(idx) + ": " + (v.valid ? "valid" : "INVALID"));
    for (const auto& m : v.messages) rep.text.push_back("  " + m);
    ++idx;
  }
  rep.result["problems"] = problems;

  std::string line = "boundary: " + lower(to_string(cls.kind));
  if (cls.phase_alpha) line += ", phase alpha = " + num(*cls.phase_alpha);
  rep.text.insert(rep.text.begin(), {line, std::string("self-adjoint: ") + (cls.self_adjoint ? "yes" : "no")});
  for (const auto& n : cls.notes) rep.text.insert(rep.text.begin() + 2, "note: " + n);
  if (!all_valid) rep.exit_code = kValidationError;
}

void cmd_eigenvalues(const ProblemPair& pair, const Options& opt, Report& rep) {
  require_valid(pair);
  if (opt.count < 1) throw ConfigError("--count must be positive");
  Json list = Json::array();
  int idx = 1;
  for (const ProblemSpec* p : {&pair.p1, &pair.p2}) {
    const Spectrum sp = find_eigenvalues(*p, pair.bc, opt.count, std::nullopt, pair.settings);
    Json ev = Json::array();
    const std::string label = "problem." + std::to_string(idx++);
    rep.text.push_back(label + ":");
    for (const auto& e : sp.eigenvalues) {
      ev.push_back(Json{{"value", e.value},
                        {"multiplicity", e.multiplicity},
                        {"residual", e.residual},
                        {"nullity", e.nullity},
                        {"refined", e.refined}});
      rep.text.push_back("  " + num(e.value) + (e.multiplicity > 1 ? "  (x" + std::to_string(e.multiplicity) + ")" : ""));
    }
    list.push_back(Json{{"label", label},
                        {"eigenvalues", ev},
                        {"lambda_min", sp.lambda_min},
                        {"phase", sp.phase},
                        {"imag_ratio", sp.imag_ratio},
                        {"fallback", sp.fallback},
                        {"scan_points", sp.scan_points}});
    if (sp.fallback)
      rep.warnings.push_back(label + ": secular determinant not real after phase removal; used |g| minima");
  }
  rep.result["count"] = opt.count;
  rep.result["spectra"] = list;
}

void cmd_zero_mode(const ProblemPair& pair, Report& rep) {
  require_valid(pair);
  const ZeroModeResult z = analyze_zero_mode(pair.p1, pair.bc, pair.settings);
  append(rep.warnings, z.warnings);
  rep.result["zero_mode"] = zero_mode_json(z);
  if (z.multiplicity == 0 || !z.y1) {
    rep.text.push_back("no zero mode (multiplicity 0)");
    return;
  }
  const SolutionPath& path = z.y1->path;
  rep.text.push_back("zero mode multiplicity: 1");
  auto vec = [](const CVector& v) {
    std::string s = "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v(i));
    return s + ")";
  };
  rep.text.push_back("y1: u(a) = " + vec(path.u_a) + ", v(a) = " + vec(path.v_a));
  rep.text.push_back("    u(b) = " + vec(path.u_b) + ", v(b) = " + vec(path.v_b));
  rep.text.push_back("<y1|y1> = " + num(z.norm_sq));
  rep.text.push_back("B = " + num(z.B));
}

void cmd_verify(const ProblemPair& pair, const Options& opt, Report& rep) {
  require_valid(pair);
  const int terms = opt.terms.value_or(pair.settings.oracle_terms);
  if (terms < 1) throw ConfigError("--terms must be positive");
  const AutoRatio ar = auto_ratio(pair);
  append(rep.warnings, ar.ratio.warnings);
  const TruncatedProduct tp =
      truncated_ratio(pair.p1, pair.p2, pair.bc, terms, ar.zero_mode.has_value(), pair.settings);
  const double diff = std::abs(ar.ratio.value - tp.estimate);
  const bool pass = diff <= tp.tail_bound;

  rep.result["boundary_value"] = complex_json(ar.ratio.value);
  rep.result["method"] = to_string(ar.ratio.method);
  rep.result["terms"] = terms;
  rep.result["product"] = tp.estimate;
  rep.result["tail_bound"] = tp.tail_bound;
  rep.result["difference"] = diff;
  rep.result["zero_mode_skipped"] = tp.zero_index.has_value();
  rep.result["verdict"] = pass ? "PASS" : "FAIL";

  rep.text.push_back("boundary formula: " + num(ar.ratio.value));
  rep.text.push_back("eigenvalue product (" + std::to_string(terms) + " terms" +
                     (tp.zero_index ? ", zero mode skipped" : "") + "): " + num(tp.estimate) + " +- " +
                     num(tp.tail_bound));
  rep.text.push_back("difference: " + num(diff));
  rep.text.push_back(pass ? "PASS" : "FAIL");
  if (!pass) rep.exit_code = kVerifyFail;
}

}  // namespace

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  Options opt;

  CLI::App app{"Functional determinant ratios of Sturm-Liouville operators and systems", "funcdet"};
  app.require_subcommand(1);
  app.add_flag("--json", opt.json, "Emit a JSON report");
  app.add_flag("--quiet", opt.quiet, "Print only the result; no warnings or timing");

  auto* ratio = app.add_subcommand("ratio", "Determinant ratio det L1 / det L2 (zero mode extracted when present)");
  auto* check = app.add_subcommand("check", "Boundary classification, self-adjointness and problem validation");
  auto* eig = app.add_subcommand("eigenvalues", "Lowest eigenvalues of both problems");
  auto* zm = app.add_subcommand("zero-mode", "Zero-mode analysis of problem 1");
  auto* ver = app.add_subcommand("verify", "Boundary formula against the truncated eigenvalue product");
  for (auto* sub : {ratio, check, eig, zm, ver}) {
    sub->add_option("config", opt.config, "Config file")->required();
    sub->fallthrough();
  }
  eig->add_option("--count", opt.count, "Number of eigenvalues (with multiplicity)");
  ver->add_option("--terms", opt.terms, "Number of eigenvalues in the product (default: solver oracle_terms)");

  std::vector<const char*> argv{"funcdet"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    const bool json = std::find(args.begin(), args.end(), "--json") != args.end();
    if (json) {
      Json j{{"command", nullptr},
             {"exit_code", kValidationError},
             {"error", Json{{"code", "usage_error"}, {"kind", "validation"}, {"message", e.what()}}}};
      out << j.dump(2) << "\n";
    } else {
      err << "error [usage_error]: " << e.what() << "\n" << app.help();
    }
    return kValidationError;
  }
  for (auto* sub : app.get_subcommands()) opt.command = sub->get_name();

  Report rep;
  Json report;
  report["command"] = opt.command;
  report["config"] = opt.config;
  std::optional<Json> error;
  try {
    const std::string text = read_file(opt.config);
    report["config_hash"] = "fnv1a64:" + hex64(fnv1a(text));
    const ProblemPair pair = load_problem_pair(text);
    append(rep.warnings, pair.warnings);
    if (opt.command == "ratio")
      cmd_ratio(pair, rep);
    else if (opt.command == "check")
      cmd_check(pair, rep);
    else if (opt.command == "eigenvalues")
      cmd_eigenvalues(pair, opt, rep);
    else if (opt.command == "zero-mode")
      cmd_zero_mode(pair, rep);
    else
      cmd_verify(pair, opt, rep);
  } catch (const Error& e) {
    rep.exit_code = e.kind() == ErrorKind::Validation ? kValidationError : kComputationError;
    error = Json{{"code", e.code()},
                 {"kind", e.kind() == ErrorKind::Validation ? "validation" : "computation"},
                 {"message", e.what()}};
  } catch (const std::exception& e) {
    rep.exit_code = kComputationError;
    error = Json{{"code", "internal_error"}, {"kind", "computation"}, {"message", e.what()}};
  }
  if (!report.contains("config_hash")) report["config_hash"] = nullptr;

  report["exit_code"] = rep.exit_code;
  if (error) {
    report["error"] = *error;
  } else {
    report["result"] = rep.result;
  }
  report["warnings"] = rep.warnings;

  if (opt.json) {
    out << report.dump(2) << "\n";
  } else if (error) {
    err << "error [" << (*error)["code"].get<std::string>() << "]: " << (*error)["message"].get<std::string>()
        << "\n";
  } else {
    const std::size_t lines = opt.quiet && !rep.text.empty() && opt.command == "ratio" ? 1 : rep.text.size();
    for (std::size_t i = 0; i < lines; ++i) out << rep.text[i] << "\n";
  }
  if (!opt.quiet) {
    if (!opt.json)
      for (const auto& w : rep.warnings) err << "warning: " << w << "\n";
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    err << "elapsed: " << num(ms) << " ms\n";
  }
  return rep.exit_code;
}

}  // namespace funcdet::cli
