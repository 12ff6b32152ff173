#include "funcdet/propagate.hpp"

#include <cmath>

#include "funcdet/error.hpp"
#include "funcdet/ode.hpp"

namespace funcdet {

namespace {

OdeOptions options_from(const SolverSettings& s) {
  OdeOptions o;
  o.rel_tol = s.rel_tol;
  o.abs_tol = s.abs_tol;
  return o;
}

// Rough count of e-foldings over [from, to]: integral of sqrt(|R - lambda| / P).
double growth_estimate(const ProblemSpec& p, Complex lambda, double from, double to) {
  constexpr int n = 64;
  const double h = (to - from) / n;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double x = from + (k + 0.5) * h;
    const CMatrix shifted = p.potential_at(x) - lambda * CMatrix::Identity(p.components(), p.components());
    const double scale = shifted.cwiseAbs().rowwise().sum().maxCoeff();
    total += std::sqrt(scale / std::max(p.metric_at(x), 1e-300));
  }
  return std::abs(total * h);
}

void check_metric(double pv, double x) {
  if (!(pv > 0.0) || !std::isfinite(pv))
    throw IntegrationError("metric P is not positive at x = " + std::to_string(x));
}

}  // namespace

CMatrix FundamentalMatrix::H() const {
  CMatrix h = value;
  const int r = components();
  h.bottomRows(r) /= metric_end;
  return h;
}

FundamentalMatrix fundamental_matrix(const ProblemSpec& p, Complex lambda, const SolverSettings& s) {
  return fundamental_matrix(p, lambda, s, p.a(), p.b());
}

FundamentalMatrix fundamental_matrix(const ProblemSpec& p, Complex lambda, const SolverSettings& s, double from,
                                     double to) {
  const int r = p.components();
  const int n = 2 * r;
  const CMatrix shift = lambda * CMatrix::Identity(r, r);

  auto rhs = [&](double x, const CVector& y, CVector& dy) {
    const double pv = p.metric_at(x);
    check_metric(pv, x);
    Eigen::Map<const CMatrix> e(y.data(), n, n);
    Eigen::Map<CMatrix> de(dy.data(), n, n);
    de.topRows(r) = e.bottomRows(r) / pv;
    de.bottomRows(r).noalias() = (p.potential_at(x) - shift) * e.topRows(r);
  };

  FundamentalMatrix fm;
  fm.lambda = lambda;
  fm.from = from;
  fm.to = to;
  fm.metric_end = p.metric_at(to);
  fm.value = CMatrix::Identity(n, n);
  fm.checkpoints.push_back({from, Complex(1.0, 0.0)});
  if (from == to) return fm;

  const int segments =
      std::clamp(static_cast<int>(std::ceil(growth_estimate(p, lambda, from, to))), 16, 4096);
  const OdeOptions opt = options_from(s);
  OdeStats stats;
  double h = std::abs(to - from) / 100.0;
  Complex det_running(1.0, 0.0);
  CVector y(n * n);
  for (int k = 0; k < segments; ++k) {
    const double x0 = from + (to - from) * k / segments;
    const double x1 = k + 1 == segments ? to : from + (to - from) * (k + 1) / segments;
    y = Eigen::Map<const CVector>(CMatrix::Identity(n, n).eval().data(), n * n);
    dopri5(rhs, x0, x1, y, opt, h, stats);
    Eigen::Map<const CMatrix> seg(y.data(), n, n);
    fm.value = (seg * fm.value).eval();
    det_running *= determinant(seg);
    fm.checkpoints.push_back({x1, det_running});
    fm.wronskian_drift = std::max(fm.wronskian_drift, std::abs(det_running - 1.0));
  }
  return fm;
}

double wronskian_drift(const FundamentalMatrix& fm) {
  double drift = 0.0;
  for (const auto& c : fm.checkpoints) drift = std::max(drift, std::abs(c.det - 1.0));
  return drift;
}

SolutionPath propagate_solution(const ProblemSpec& p, Complex lambda, const CVector& coeffs,
                                const SolverSettings& s) {
  const int r = p.components();
  if (coeffs.size() != 2 * r) throw ConfigError("coefficient vector must have length 2r");
  const CMatrix shift = lambda * CMatrix::Identity(r, r);
  auto rhs = [&](double x, const CVector& y, CVector& dy) {
    const double pv = p.metric_at(x);
    check_metric(pv, x);
    dy.head(r) = y.segment(r, r) / pv;
    dy.segment(r, r).noalias() = (p.potential_at(x) - shift) * y.head(r);
    dy(2 * r) = Complex(y.head(r).squaredNorm(), 0.0);
  };

  CVector y = CVector::Zero(2 * r + 1);
  y.head(2 * r) = coeffs;
  OdeStats stats;
  double h = (p.b() - p.a()) / 100.0;
  dopri5(rhs, p.a(), p.b(), y, options_from(s), h, stats);

  SolutionPath path;
  path.coeffs = coeffs;
  path.lambda = lambda;
  path.u_a = coeffs.head(r);
  path.v_a = coeffs.tail(r);
  path.u_b = y.head(r);
  path.v_b = y.segment(r, r);
  path.norm_sq = y(2 * r).real();
  return path;
}

SampledSolution sample_solution(const ProblemSpec& p, Complex lambda, const CVector& coeffs, const SolverSettings& s,
                                int points) {
  const int r = p.components();
  if (coeffs.size() != 2 * r) throw ConfigError("coefficient vector must have length 2r");
  if (points < 2) throw ConfigError("need at least two sample points");
  const CMatrix shift = lambda * CMatrix::Identity(r, r);
  auto rhs = [&](double x, const CVector& y, CVector& dy) {
    const double pv = p.metric_at(x);
    check_metric(pv, x);
    dy.head(r) = y.tail(r) / pv;
    dy.tail(r).noalias() = (p.potential_at(x) - shift) * y.head(r);
  };
  SampledSolution out;
  out.x.reserve(static_cast<std::size_t>(points));
  out.state.reserve(static_cast<std::size_t>(points));
  CVector y = coeffs;
  out.x.push_back(p.a());
  out.state.push_back(y);
  const OdeOptions opt = options_from(s);
  OdeStats stats;
  double h = (p.b() - p.a()) / 100.0;
  for (int k = 1; k < points; ++k) {
    const double x1 = k + 1 == points ? p.b() : p.a() + (p.b() - p.a()) * k / (points - 1);
    dopri5(rhs, out.x.back(), x1, y, opt, h, stats);
    out.x.push_back(x1);
    out.state.push_back(y);
  }
  return out;
}

Complex overlap(const SampledSolution& f, const SampledSolution& g, int r) {
  const std::size_t n = f.x.size();
  if (n != g.x.size() || n < 3 || n % 2 == 0) throw ConfigError("overlap needs matching grids with odd point count");
  const double h = (f.x.back() - f.x.front()) / static_cast<double>(n - 1);
  Complex sum(0.0, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
    sum += w * f.state[k].head(r).dot(g.state[k].head(r));
  }
  return sum * h / 3.0;
}

}  // namespace funcdet
