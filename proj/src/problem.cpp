#include "funcdet/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "funcdet/detratio.hpp"
#include "funcdet/error.hpp"

namespace funcdet {

ProblemSpec::ProblemSpec(int r, double a, double b, Expression metric,
                         std::vector<Expression> potential_re, std::vector<Expression> potential_im)
    : r_(r), a_(a), b_(b), metric_(std::move(metric)), re_(std::move(potential_re)), im_(std::move(potential_im)) {
  if (r_ < 1) throw ConfigError("component count r must be >= 1");
  if (!(a_ < b_) || !std::isfinite(a_) || !std::isfinite(b_))
    throw ConfigError("interval must satisfy a < b with finite endpoints");
  const auto entries = static_cast<std::size_t>(r_ * r_);
  if (re_.size() != entries)
    throw ConfigError("R needs " + std::to_string(entries) + " entries, got " + std::to_string(re_.size()));
  if (im_.empty()) im_.assign(entries, Expression::constant(0.0));
  if (im_.size() != entries)
    throw ConfigError("R_im needs " + std::to_string(entries) + " entries, got " + std::to_string(im_.size()));
  real_potential_ = std::all_of(im_.begin(), im_.end(),
                                [](const Expression& e) { return e.is_constant() && e(0.0) == 0.0; });
}

ProblemSpec ProblemSpec::from_strings(int r, double a, double b, std::string_view metric,
                                      const std::vector<std::string>& potential_re,
                                      const std::vector<std::string>& potential_im) {
  std::vector<Expression> re;
  std::vector<Expression> im;
  for (const auto& s : potential_re) re.push_back(Expression::parse(s));
  for (const auto& s : potential_im) im.push_back(Expression::parse(s));
  return ProblemSpec(r, a, b, Expression::parse(metric), std::move(re), std::move(im));
}

CMatrix ProblemSpec::potential_at(double x) const {
  CMatrix out(r_, r_);
  for (int i = 0; i < r_; ++i)
    for (int j = 0; j < r_; ++j) {
      const std::size_t k = index(i, j);
      out(i, j) = real_potential_ ? Complex(re_[k](x), 0.0) : Complex(re_[k](x), im_[k](x));
    }
  return out;
}

BoundaryConditions::BoundaryConditions(CMatrix m, CMatrix n) : m_(std::move(m)), n_(std::move(n)) {
  if (m_.rows() != m_.cols() || n_.rows() != n_.cols() || m_.rows() != n_.rows())
    throw ConfigError("boundary matrices M and N must be square and of equal size");
  if (m_.rows() == 0 || m_.rows() % 2 != 0) throw ConfigError("boundary matrices must be 2r x 2r with r >= 1");
  const CMatrix s = stacked();
  const RVector sv = singular_values(s);
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (smax == 0.0 || smin <= 1e-12 * smax)
    throw ConfigError("[M | N] does not have full row rank; the boundary conditions are dependent");
}

CMatrix BoundaryConditions::stacked() const {
  CMatrix s(m_.rows(), 2 * m_.cols());
  s << m_, n_;
  return s;
}

namespace {

std::vector<double> lobatto_points(double a, double b, int n) {
  std::vector<double> xs;
  if (n <= 1) {
    xs.push_back(0.5 * (a + b));
    return xs;
  }
  xs.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = std::cos(std::numbers::pi * k / (n - 1));
    xs.push_back(0.5 * (a + b) - 0.5 * (b - a) * t);
  }
  xs.front() = a;
  xs.back() = b;
  return xs;
}

}  // namespace

ValidationReport validate_problem(const ProblemSpec& p, int n_samples) {
  ValidationReport report;
  const int r = p.components();
  bool non_hermitian = false;
  for (double x : lobatto_points(p.a(), p.b(), std::max(1, n_samples))) {
    const double pv = p.metric_at(x);
    if (!(pv > 0.0) || !std::isfinite(pv)) report.positivity.push_back({x, pv});

    const CMatrix rx = p.potential_at(x);
    if (!rx.allFinite()) {
      if (report.valid) {
        std::ostringstream os;
        os << "potential is not finite at x = " << x;
        report.messages.push_back(os.str());
      }
      report.valid = false;
      continue;
    }
    const double scale = 1.0 + rx.cwiseAbs().maxCoeff();
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j) {
        const double res = std::abs(rx(i, j) - std::conj(rx(j, i)));
        if (res > kHermiticityTol * scale) non_hermitian = true;
        if (res > report.hermiticity_residual) {
          report.hermiticity_residual = res;
          report.hermiticity_x = x;
        }
      }
  }
  if (!report.positivity.empty()) {
    report.valid = false;
    std::ostringstream os;
    os << "metric P is not positive at " << report.positivity.size() << " sampled point(s), first at x = "
       << report.positivity.front().x << " (P = " << report.positivity.front().value << ")";
    report.messages.push_back(os.str());
  }
  if (non_hermitian) {
    report.valid = false;
    std::ostringstream os;
    os << "potential R is not Hermitian: max |R_pq - conj(R_qp)| = " << report.hermiticity_residual
       << " at x = " << report.hermiticity_x;
    report.messages.push_back(os.str());
  }
  return report;
}

bool same_metric(const ProblemSpec& p1, const ProblemSpec& p2, int n_samples) {
  if (p1.metric().to_string() == p2.metric().to_string()) return true;
  const double a = std::max(p1.a(), p2.a());
  const double b = std::min(p1.b(), p2.b());
  if (!(a < b)) return false;
  for (double x : lobatto_points(a, b, n_samples)) {
    const double v1 = p1.metric_at(x);
    const double v2 = p2.metric_at(x);
    if (std::abs(v1 - v2) > 1e-12 * std::max({1.0, std::abs(v1), std::abs(v2)})) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

struct Entry {
  std::string value;
  int line;
};

using Section = std::map<std::string, Entry>;

[[noreturn]] void fail(int line, const std::string& msg) {
  throw ConfigError("line " + std::to_string(line) + ": " + msg);
}

double parse_real(std::string_view text, int line) {
  const std::string t = trim(text);
  double v = 0.0;
  const char* first = t.data();
  if (!t.empty() && t[0] == '+') ++first;
  auto res = std::from_chars(first, t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(line, "expected a real number, got '" + t + "'");
  return v;
}

int parse_int(std::string_view text, int line) {
  const std::string t = trim(text);
  int v = 0;
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    fail(line, "expected an integer, got '" + t + "'");
  return v;
}

// Splits a possibly bracketed, comma-separated list; quoted items keep commas.
std::vector<std::string> split_list(std::string_view text, int line) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[') {
    if (t.back() != ']') fail(line, "unterminated '['");
    t = t.substr(1, t.size() - 2);
  }
  std::vector<std::string> items;
  std::string cur;
  bool quoted = false;
  for (char c : t) {
    if (c == '"') {
      quoted = !quoted;
      cur += c;
    } else if (c == ',' && !quoted) {
      items.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) fail(line, "unterminated string");
  if (!trim(cur).empty() || !items.empty()) items.push_back(trim(cur));
  for (const auto& it : items)
    if (it.empty()) fail(line, "empty list item");
  return items;
}

std::string unquote(const std::string& item, int line) {
  if (item.size() < 2 || item.front() != '"' || item.back() != '"')
    fail(line, "expected a quoted expression, got " + item);
  return item.substr(1, item.size() - 2);
}

Expression parse_expression_at(const std::string& src, int line) {
  try {
    return Expression::parse(src);
  } catch (const ParseError& e) {
    fail(line, std::string("in expression \"") + src + "\": " + e.what());
  }
}

ProblemSpec build_problem(const std::string& name, const Section& sec) {
  static const std::vector<std::string> known = {"r", "interval", "P", "R", "R_im"};
  for (const auto& [key, entry] : sec)
    if (std::find(known.begin(), known.end(), key) == known.end())
      fail(entry.line, "unknown key '" + key + "' in [" + name + "]");
  for (const char* required : {"r", "interval", "P", "R"})
    if (!sec.count(required)) throw ConfigError("[" + name + "] is missing key '" + required + "'");

  const Entry& r_entry = sec.at("r");
  const int r = parse_int(r_entry.value, r_entry.line);
  if (r < 1) fail(r_entry.line, "r must be >= 1");

  const Entry& iv = sec.at("interval");
  const auto ends = split_list(iv.value, iv.line);
  if (ends.size() != 2) fail(iv.line, "interval needs two values \"a, b\"");
  const double a = parse_real(ends[0], iv.line);
  const double b = parse_real(ends[1], iv.line);
  if (!(a < b)) fail(iv.line, "interval requires a < b");

  const Entry& p_entry = sec.at("P");
  Expression metric = parse_expression_at(unquote(trim(p_entry.value), p_entry.line), p_entry.line);

  auto read_matrix = [&](const Entry& e) {
    std::vector<Expression> out;
    for (const auto& item : split_list(e.value, e.line)) out.push_back(parse_expression_at(unquote(item, e.line), e.line));
    if (out.size() != static_cast<std::size_t>(r * r))
      fail(e.line, "expected " + std::to_string(r * r) + " entries for r = " + std::to_string(r) + ", got " +
                       std::to_string(out.size()));
    return out;
  };
  std::vector<Expression> re = read_matrix(sec.at("R"));
  std::vector<Expression> im;
  if (sec.count("R_im")) im = read_matrix(sec.at("R_im"));
  return ProblemSpec(r, a, b, std::move(metric), std::move(re), std::move(im));
}

CMatrix read_bc_matrix(const Entry& e, int r, const char* name) {
  const auto items = split_list(e.value, e.line);
  const std::size_t n = static_cast<std::size_t>(2 * r);
  if (items.size() != n * n)
    fail(e.line, std::string(name) + " must have (2r)^2 = " + std::to_string(n * n) + " entries for r = " +
                     std::to_string(r) + ", got " + std::to_string(items.size()));
  CMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < items.size(); ++k) {
    try {
      m(static_cast<Eigen::Index>(k / n), static_cast<Eigen::Index>(k % n)) = parse_complex(items[k]);
    } catch (const ConfigError& err) {
      fail(e.line, err.what());
    }
  }
  return m;
}

}  // namespace

Complex parse_complex(std::string_view text) {
  std::string t = trim(text);
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') t = trim(t.substr(1, t.size() - 2));
  std::string compact;
  for (char c : t)
    if (!std::isspace(static_cast<unsigned char>(c))) compact += c;
  if (compact.empty()) throw ConfigError("empty complex entry");

  auto real_of = [&](const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    auto res = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("malformed complex entry '" + t + "'");
    return v;
  };

  if (compact.back() != 'i') return {real_of(compact), 0.0};
  const std::string body = compact.substr(0, compact.size() - 1);
  // Split at the last sign that is not a leading sign or an exponent sign.
  std::size_t split = std::string::npos;
  for (std::size_t k = body.size(); k-- > 1;) {
    if ((body[k] == '+' || body[k] == '-') && body[k - 1] != 'e' && body[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  auto imag_of = [&](const std::string& s) {
    if (s.empty() || s == "+") return 1.0;
    if (s == "-") return -1.0;
    return real_of(s);
  };
  if (split == std::string::npos) return {0.0, imag_of(body)};
  return {real_of(body.substr(0, split)), imag_of(body.substr(split))};
}

ProblemPair load_problem_pair(std::string_view config) {
  std::map<std::string, Section> sections;
  std::string current;
  std::istringstream in{std::string(config)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    // Strip comments outside of quotes.
    std::string line;
    bool quoted = false;
    for (char c : raw) {
      if (c == '"') quoted = !quoted;
      if (!quoted && (c == '#' || c == ';')) break;
      line += c;
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      current = trim(line.substr(1, line.size() - 2));
      static const std::vector<std::string> known = {"problem.1", "problem.2", "boundary", "solver"};
      if (std::find(known.begin(), known.end(), current) == known.end())
        fail(line_no, "unknown section [" + current + "]");
      if (sections.count(current)) fail(line_no, "duplicate section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    if (current.empty()) fail(line_no, "key outside of any section");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    auto& sec = sections[current];
    if (sec.count(key)) fail(line_no, "duplicate key '" + key + "'");
    sec[key] = Entry{value, line_no};
  }

  for (const char* required : {"problem.1", "problem.2", "boundary"})
    if (!sections.count(required)) throw ConfigError(std::string("missing section [") + required + "]");

  ProblemSpec p1 = build_problem("problem.1", sections["problem.1"]);
  ProblemSpec p2 = build_problem("problem.2", sections["problem.2"]);
  if (p1.components() != p2.components())
    throw ConfigError("problem.1 and problem.2 must have the same component count r");
  if (p1.a() != p2.a() || p1.b() != p2.b()) throw ConfigError("problem.1 and problem.2 must share the interval");
  const int r = p1.components();

  const Section& bsec = sections["boundary"];
  for (const auto& [key, entry] : bsec)
    if (key != "M" && key != "N") fail(entry.line, "unknown key '" + key + "' in [boundary]");
  if (!bsec.count("M") || !bsec.count("N")) throw ConfigError("[boundary] needs keys M and N");
  CMatrix m = read_bc_matrix(bsec.at("M"), r, "M");
  CMatrix n = read_bc_matrix(bsec.at("N"), r, "N");

  SolverSettings settings;
  if (sections.count("solver")) {
    for (const auto& [key, entry] : sections["solver"]) {
      if (key == "rel_tol") {
        settings.rel_tol = parse_real(entry.value, entry.line);
      } else if (key == "abs_tol") {
        settings.abs_tol = parse_real(entry.value, entry.line);
      } else if (key == "zero_mode_tol") {
        settings.zero_mode_tol = parse_real(entry.value, entry.line);
      } else if (key == "oracle_terms") {
        settings.oracle_terms = parse_int(entry.value, entry.line);
      } else if (key == "samples") {
        settings.samples = parse_int(entry.value, entry.line);
      } else {
        fail(entry.line, "unknown key '" + key + "' in [solver]");
      }
    }
    if (!(settings.rel_tol > 0.0) || !(settings.abs_tol > 0.0) || !(settings.zero_mode_tol > 0.0))
      throw ConfigError("solver tolerances must be positive");
    if (settings.oracle_terms < 1 || settings.samples < 1)
      throw ConfigError("oracle_terms and samples must be positive");
  }

  ProblemPair pair{std::move(p1), std::move(p2), BoundaryConditions(std::move(m), std::move(n)), settings, {}};
  if (!same_metric(pair.p1, pair.p2, settings.samples))
    pair.warnings = metric_warnings(pair.p1, pair.p2, settings);
  return pair;
}

ProblemPair load_problem_pair_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_problem_pair(ss.str());
}

}  // namespace funcdet
