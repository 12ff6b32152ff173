// One PASS/FAIL line per acceptance criterion; exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bc_sets.hpp"
#include "funcdet/boundary.hpp"
#include "funcdet/cli.hpp"
#include "funcdet/detratio.hpp"
#include "funcdet/error.hpp"
#include "funcdet/oracle.hpp"
#include "funcdet/propagate.hpp"
#include "funcdet/zeromode.hpp"
#include "problems.hpp"

using namespace funcdet;
using std::numbers::pi;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + what;
    }
  }
};

char buf[256];

template <class... A>
std::string fmt(const char* f, A... a) {
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double rel(Complex a, Complex b) { return std::abs(a - b) / std::abs(b); }

std::vector<std::string> corpus_configs() {
  std::vector<std::string> out;
  for (const auto& e : std::filesystem::directory_iterator(FUNCDET_CONFIG_DIR))
    if (e.path().extension() == ".cfg") out.push_back(e.path().string());
  std::sort(out.begin(), out.end());
  return out;
}

struct CorpusCase {
  std::string label;
  ProblemSpec p1, p2;
  BoundaryConditions bc;
};

std::vector<CorpusCase> corpus() {
  std::vector<CorpusCase> out;
  for (const auto& path : corpus_configs()) {
    const ProblemPair pair = load_problem_pair_file(path);
    out.push_back({std::filesystem::path(path).filename().string(), pair.p1, pair.p2, pair.bc});
  }
  out.push_back({"variable metric", problems::unit("x^2", "(1+x)^2"), problems::unit("1", "(1+x)^2"),
                 bcsets::robin_real()});
  out.push_back({"oscillating potential", problems::unit("3*cos(2*x)"), problems::unit("0"), bcsets::twisted(1.0)});
  out.push_back({"twisted system", problems::twisted_system(), problems::twisted_system(1.0), bcsets::twisted_system_bc()});
  return out;
}

Verdict gelfand_yaglom_family() {
  Verdict v;
  const std::vector<std::pair<std::string, double>> cases = {
      {"dirichlet_m1.cfg", 1.0}, {"dirichlet_m2.cfg", 2.0}, {"dirichlet_m5.cfg", 5.0}};
  std::string parts;
  for (const auto& [name, m] : cases) {
    const std::string path = std::string(FUNCDET_CONFIG_DIR) + "/" + name;
    std::ostringstream out, err;
    const auto t0 = std::chrono::steady_clock::now();
    const int code = cli::run({"ratio", path, "--quiet"}, out, err);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const ProblemPair pair = load_problem_pair_file(path);
    const Complex value = ratio_no_zero_mode(pair.p1, pair.p2, pair.bc).value;
    const double err_rel = rel(value, std::sinh(m) / m);
    v.require(code == 0, name + " exit code " + std::to_string(code));
    v.require(err_rel <= 1e-8, fmt("m=%g rel err %.2e", m, err_rel));
    v.require(secs < 1.0, fmt("m=%g took %.3f s", m, secs));
    parts += fmt("%sm=%g: %.9f in %.1f ms", parts.empty() ? "" : ", ", m, value.real(), 1e3 * secs);
  }
  if (v.pass) v.detail = parts;
  return v;
}

Verdict negative_eigenvalue() {
  Verdict v;
  const Complex value = ratio_no_zero_mode(problems::unit("-16"), problems::unit("0"), bcsets::dirichlet()).value;
  v.require(std::abs(value - std::sin(4.0) / 4.0) <= 1e-8, fmt("ratio %.10f", value.real()));
  const auto ev = find_eigenvalues(problems::unit("-16"), bcsets::dirichlet(), 5).expanded(5);
  int negative = 0;
  for (double l : ev) negative += l < 0;
  v.require(negative == 1, fmt("%d negative eigenvalues", negative));
  v.require(std::abs(ev[0] - (pi * pi - 16)) <= 1e-8 * std::abs(pi * pi - 16), fmt("lowest %.12f", ev[0]));
  if (v.pass) v.detail = fmt("ratio %.9f, one negative eigenvalue %.10f", value.real(), ev[0]);
  return v;
}

Verdict periodic_zero_mode() {
  Verdict v;
  const Complex value = ratio_zero_mode(problems::unit("0"), problems::unit("1"), bcsets::periodic()).value;
  const double exact = 1.0 / (4 * std::pow(std::sinh(0.5), 2));
  v.require(std::abs(value - exact) <= 1e-8, fmt("ratio %.10f", value.real()));
  const auto t = truncated_ratio(problems::unit("0"), problems::unit("1"), bcsets::periodic(), 2000, true);
  const double diff = std::abs(value.real() - t.estimate);
  v.require(t.tail_bound <= 1e-3, fmt("tail bound %.2e", t.tail_bound));
  v.require(diff <= t.tail_bound, fmt("product differs by %.2e", diff));
  if (v.pass) v.detail = fmt("ratio %.9f, product %.9f, diff %.1e <= tail %.1e", value.real(), t.estimate, diff, t.tail_bound);
  return v;
}

Verdict dirichlet_zero_mode() {
  Verdict v;
  const ProblemSpec p1 = problems::unit("-pi^2");
  const Complex value = ratio_zero_mode(p1, problems::unit("0"), bcsets::dirichlet()).value;
  v.require(std::abs(value - 1.0 / (2 * pi * pi)) <= 1e-8, fmt("ratio %.10f", value.real()));
  const ZeroModeResult z = analyze_zero_mode(p1, bcsets::dirichlet());
  v.require(z.B_separated.has_value(), "separated B missing");
  if (z.B_separated) v.require(std::abs(*z.B_separated + 1.0) <= 1e-10, fmt("B = %.12f", z.B_separated->real()));
  if (v.pass) v.detail = fmt("ratio %.10f, B %+.12f", value.real(), z.B_separated->real());
  return v;
}

Verdict system_split_invariance() {
  Verdict v;
  const double mu = 0.5, l = 4.0;
  ZeroModeResult z1, z2;
  const auto r1 = ratio_zero_mode(problems::twisted_system(), problems::twisted_system(1.0), bcsets::twisted_system_bc(), {}, SplitChoice::N, &z1);
  const auto r2 = ratio_zero_mode(problems::twisted_system(), problems::twisted_system(1.0), bcsets::twisted_system_bc(), {}, SplitChoice::M, &z2);
  v.require(rel(z2.B, z1.B) <= 1e-8, fmt("B differs by %.2e", rel(z2.B, z1.B)));
  v.require(rel(r2.value, r1.value) <= 1e-8, fmt("ratio differs by %.2e", rel(r2.value, r1.value)));

  const auto sampled = sample_solution(problems::twisted_system(), 0.0, z1.y1->coeffs, {}, 65);
  const Complex c = sampled.state[0](0) / std::polar(1.0, -mu * l / 2);
  double worst = 0.0;
  for (std::size_t k = 0; k < sampled.x.size(); ++k) {
    const double x = sampled.x[k];
    worst = std::max(worst, std::abs(sampled.state[k](0) - c * std::polar(1.0, mu * x)));
    worst = std::max(worst, std::abs(sampled.state[k](1) + c * std::polar(1.0, -mu * x)));
  }
  v.require(worst <= 1e-8 * std::abs(c), fmt("zero-mode shape residual %.2e", worst / std::abs(c)));

  const SolutionPath& y = z1.y1->path;
  const double e1 = rel(1.0 / z1.B, -std::conj(y.u_b(1)));
  const double e2 = rel(1.0 / z2.B, -std::polar(1.0, mu * l) * std::conj(y.u_a(1)));
  v.require(e1 <= 1e-8, fmt("first closed form off by %.2e", e1));
  v.require(e2 <= 1e-8, fmt("second closed form off by %.2e", e2));
  if (v.pass)
    v.detail = fmt("ratio %.10f%+.1ei, split gap %.1e, shape residual %.1e", r1.value.real(), r1.value.imag(),
                   rel(r2.value, r1.value), worst / std::abs(c));
  return v;
}

Verdict wronskian_conservation() {
  Verdict v;
  double worst = 0.0;
  int runs = 0;
  for (const auto& c : corpus()) {
    for (const ProblemSpec* p : {&c.p1, &c.p2}) {
      for (Complex lam : {Complex(0, 0), Complex(-100, 0), Complex(100, 0), Complex(0, 100)}) {
        const double d = fundamental_matrix(*p, lam).wronskian_drift;
        ++runs;
        worst = std::max(worst, d);
        v.require(d <= 1e-9, fmt("%s at (%g,%g): %.2e", c.label.c_str(), lam.real(), lam.imag(), d));
      }
    }
  }
  if (v.pass) v.detail = fmt("%d runs, worst drift %.2e", runs, worst);
  return v;
}

Verdict formula_consistency() {
  Verdict v;
  double worst = 0.0;
  int cases = 0;
  for (const auto& c : corpus()) {
    if (c.p1.components() != 1) continue;
    try {
      const Complex a = ratio_no_zero_mode(c.p1, c.p2, c.bc).value;
      const Complex b = ratio_via_bc_row(c.p1, c.p2, c.bc).value;
      const double e = rel(b, a);
      worst = std::max(worst, e);
      ++cases;
      v.require(e <= 1e-10, fmt("%s: %.2e", c.label.c_str(), e));
    } catch (const ZeroModeDetected&) {
    } catch (const UnsupportedBoundary&) {
    }
  }
  v.require(cases >= 5, fmt("only %d cases", cases));
  if (v.pass) v.detail = fmt("%d cases, worst relative gap %.2e", cases, worst);
  return v;
}

Verdict proportionality_law() {
  Verdict v;
  double worst = 0.0;
  const std::vector<double> points = {-7.3, -4.5, -2.0, -0.5, 0.3, 1.7, 3.1, 5.5, 12.0, 25.0};
  for (const auto& [p, bc] :
       {std::pair{problems::unit("0"), bcsets::periodic()}, std::pair{problems::unit("-pi^2"), bcsets::dirichlet()}}) {
    const ZeroModeResult z = analyze_zero_mode(p, bc);
    for (double l : points) {
      const ProportionalityPoint pt = check_proportionality(p, z, l);
      worst = std::max(worst, pt.rel_error);
      v.require(pt.rel_error <= 1e-7, fmt("lambda %g: %.2e", l, pt.rel_error));
    }
  }
  if (v.pass) v.detail = fmt("20 points, worst relative error %.2e", worst);
  return v;
}

Verdict asymptotic_decay() {
  Verdict v;
  const auto same = decay_exponent(problems::unit("1"), problems::unit("0"), bcsets::dirichlet());
  const auto mixed = decay_exponent(problems::unit("0"), problems::unit("0", "4"), bcsets::dirichlet());
  v.require(std::abs(same.exponent + 1.5) <= 0.15, fmt("equal metrics %.3f", same.exponent));
  v.require(std::abs(mixed.exponent + 0.5) <= 0.15, fmt("mismatched metrics %.3f", mixed.exponent));
  if (v.pass)
    v.detail = fmt("equal metrics %.4f [%.4f, %.4f], mismatched %.4f", same.exponent, same.ci_low, same.ci_high,
                   mixed.exponent);
  return v;
}

Verdict spectrum_accuracy() {
  Verdict v;
  const auto ev = find_eigenvalues(problems::unit("0"), bcsets::dirichlet(), 10).expanded(10);
  double worst = 0.0;
  for (int n = 1; n <= 10 && n <= static_cast<int>(ev.size()); ++n)
    worst = std::max(worst, std::abs(ev[n - 1] / (n * n * pi * pi) - 1.0));
  v.require(ev.size() == 10, fmt("%zu eigenvalues", ev.size()));
  v.require(worst <= 1e-8, fmt("worst relative error %.2e", worst));
  const Spectrum per = find_eigenvalues(problems::unit("0"), bcsets::periodic(), 3);
  bool degenerate = false;
  for (const auto& e : per.eigenvalues)
    degenerate = degenerate || (std::abs(e.value - 4 * pi * pi) <= 1e-8 * 4 * pi * pi && e.nullity == 2);
  v.require(degenerate, "periodic 4 pi^2 level not found with nullity 2");
  if (v.pass) v.detail = fmt("worst relative error %.2e, periodic 4 pi^2 nullity 2", worst);
  return v;
}

Verdict self_adjointness_classifier() {
  Verdict v;
  struct Case {
    const char* name;
    BoundaryConditions bc;
    BcKind kind;
    bool self_adjoint;
  };
  const std::vector<Case> cases = {
      {"dirichlet", bcsets::dirichlet(), BcKind::Separated, true},
      {"neumann", bcsets::neumann(), BcKind::Separated, true},
      {"robin-real", bcsets::robin_real(), BcKind::Separated, true},
      {"periodic", bcsets::periodic(), BcKind::NonSeparated, true},
      {"twisted-phase", bcsets::twisted(0.7), BcKind::NonSeparated, true},
      {"det D = 2", bcsets::det_two(), BcKind::NonSeparated, false},
  };
  for (const auto& c : cases) {
    const BcClassification cls = check_self_adjoint(c.bc);
    v.require(cls.kind == c.kind, std::string(c.name) + " class");
    v.require(cls.self_adjoint == c.self_adjoint, std::string(c.name) + " verdict");
  }
  if (v.pass) v.detail = "6 of 6 verdicts as expected";
  return v;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
      {"Dirichlet family sinh(m)/m", gelfand_yaglom_family},
      {"negative eigenvalue", negative_eigenvalue},
      {"periodic zero mode", periodic_zero_mode},
      {"Dirichlet zero mode", dirichlet_zero_mode},
      {"system split invariance", system_split_invariance},
      {"Wronskian conservation", wronskian_conservation},
      {"determinant and boundary-row forms agree", formula_consistency},
      {"proportionality law", proportionality_law},
      {"asymptotic decay", asymptotic_decay},
      {"spectrum accuracy", spectrum_accuracy},
      {"self-adjointness classifier", self_adjointness_classifier},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += !v.pass;
    std::printf("%s %2zu %s: %s (%.2f s)\n", v.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, v.detail.c_str(),
                secs);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
