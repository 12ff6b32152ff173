#include "funcdet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include "funcdet/boundary.hpp"
#include "funcdet/detratio.hpp"
#include "funcdet/error.hpp"
#include "funcdet/propagate.hpp"

namespace funcdet {

namespace {

constexpr double kGauss = 0.28867513459481288225;  // sqrt(3) / 6
constexpr double kCommutator = 0.14433756729740644113;  // sqrt(3) / 12

bool constant_coefficients(const ProblemSpec& p) {
  if (!p.metric().is_constant()) return false;
  for (int i = 0; i < p.components(); ++i)
    for (int j = 0; j < p.components(); ++j)
      if (!p.potential_re(i, j).is_constant() || !p.potential_im(i, j).is_constant()) return false;
  return true;
}

template <class T>
T scalar_of(Complex z) {
  if constexpr (std::is_same_v<T, double>)
    return z.real();
  else
    return z;
}

// exp of the traceless 2x2 [[w, q], [s, -w]].
template <class T>
void exp_traceless(T w, T q, T s, T out[4]) {
  const T z2 = w * w + q * s;
  T c, sz;  // cosh z, sinh z / z
  if (std::abs(z2) < 1e-6) {
    c = T(1) + z2 / T(2) + z2 * z2 / T(24);
    sz = T(1) + z2 / T(6) + z2 * z2 / T(120);
  } else if constexpr (std::is_same_v<T, double>) {
    if (z2 > 0) {
      const double z = std::sqrt(z2);
      c = std::cosh(z);
      sz = std::sinh(z) / z;
    } else {
      const double z = std::sqrt(-z2);
      c = std::cos(z);
      sz = std::sin(z) / z;
    }
  } else {
    const T z = std::sqrt(z2);
    c = std::cosh(z);
    sz = std::sinh(z) / z;
  }
  out[0] = c + sz * w;
  out[1] = sz * q;
  out[2] = sz * s;
  out[3] = c - sz * w;
}

double gk_integral(const ProblemSpec& p) {
  auto f = [&](double x) {
    const double pv = p.metric_at(x);
    if (!(pv > 0.0)) throw IntegrationError("metric P is not positive at x = " + std::to_string(x));
    return 1.0 / std::sqrt(pv);
  };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, p.a(), p.b(), 15, 1e-12);
}

struct LeastSquares {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = std::numeric_limits<double>::infinity();
};

LeastSquares fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LeastSquares out;
  const std::size_t n = x.size();
  if (n < 2) return out;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (n > 2) {
    double rss = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double e = y[i] - out.intercept - out.slope * x[i];
      rss += e * e;
    }
    out.slope_se = std::sqrt(rss / static_cast<double>(n - 2) / sxx);
  }
  return out;
}

struct SecularSample {
  Complex g;
  /// Rounding floor of g.
  double noise;
};

// det(M + N E); for r = 1 via det M + det N + tr(adj(M) N E), using det E = 1.
SecularSample secular_value(const BoundaryConditions& bc, const CMatrix& e) {
  const CMatrix ne = bc.N() * e;
  double floor = 1.0;
  for (Eigen::Index i = 0; i < ne.rows(); ++i) floor *= bc.M().row(i).norm() + ne.row(i).norm();
  if (bc.components() == 1) {
    const Complex dm = determinant(bc.M());
    const Complex cross = (adjugate(bc.M()) * ne).trace();
    const Complex dn = determinant(bc.N());
    return {dm + dn + cross, 1e-14 * (std::abs(dm) + std::abs(dn) + (adjugate(bc.M()).norm() * ne.norm()))};
  }
  return {determinant(bc.M() + ne), 1e-14 * floor};
}

// Secular determinant, phase removed. The step count follows |lambda| in
// bands of doubling sqrt|lambda|.
class SecularScan {
 public:
  SecularScan(const ProblemSpec& p, const BoundaryConditions& bc, const std::function<int(double)>& steps_for,
              double k_top)
      : bc_(bc), tol_(1e-8) {
    std::vector<double> tops = {k_top};
    while (tops.back() > 1e-3 && steps_for(tops.back() / 2) < steps_for(tops.back())) tops.push_back(tops.back() / 2);
    for (auto it = tops.rbegin(); it != tops.rend(); ++it) {
      band_top_.push_back(*it);
      props_.emplace_back(p, steps_for(*it));
    }
  }

  SecularSample sample(double lambda) const { return sample(Complex(lambda, 0.0)); }
  SecularSample sample(Complex lambda) const {
    SecularSample out = secular_value(bc_, prop_for(lambda).propagate(lambda));
    out.g *= unphase_;
    return out;
  }
  void set_phase(double phi) { unphase_ = std::polar(1.0, -phi); }
  Complex value(double lambda) const { return sample(lambda).g; }
  Complex value(Complex lambda) const { return sample(lambda).g; }
  int nullity_at(double lambda) const {
    const Complex z(lambda, 0.0);
    return secular_nullity(bc_.M(), bc_.N(), prop_for(z).propagate(z), tol_);
  }

 private:
  const MagnusPropagator& prop_for(Complex lambda) const {
    const double k = std::sqrt(std::abs(lambda));
    for (std::size_t j = 0; j + 1 < props_.size(); ++j)
      if (k <= band_top_[j]) return props_[j];
    return props_.back();
  }

  const BoundaryConditions& bc_;
  std::vector<double> band_top_;
  std::vector<MagnusPropagator> props_;
  double tol_;
  Complex unphase_{1.0, 0.0};
};

double bracket_root(const std::function<double(double)>& f, double lo, double hi, double flo, double fhi) {
  boost::uintmax_t iters = 200;
  const auto r =
      boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
  return 0.5 * (r.first + r.second);
}

// Root of the five-point derivative of f inside [lo, hi]; nullopt
// when the derivative does not change sign.
std::optional<double> stationary_point(const std::function<double(double)>& f, double lo, double hi) {
  const double eta = 1e-3 * (hi - lo);
  auto d = [&](double x) {
    return (f(x - 2 * eta) - 8 * f(x - eta) + 8 * f(x + eta) - f(x + 2 * eta)) / (12 * eta);
  };
  const double dlo = d(lo), dhi = d(hi);
  if (dlo == 0.0) return lo;
  if (dhi == 0.0) return hi;
  if ((dlo > 0) == (dhi > 0)) return std::nullopt;
  return bracket_root(d, lo, hi, dlo, dhi);
}

// Zeros of f inside the rectangle (a, b) x (-h, h) by the argument
// principle. With `mirrored`, f is real on the real axis and only the upper
// half is traversed. nullopt when the winding is not close to an integer.
std::optional<int> contour_count(const std::function<Complex(Complex)>& f, double a, double b, bool mirrored) {
  const double h = 0.5 * (b - a);
  std::vector<Complex> corners = {Complex(b, 0.0), Complex(b, h), Complex(a, h), Complex(a, 0.0)};
  if (!mirrored) corners = {Complex(a, -h), Complex(b, -h), Complex(b, h), Complex(a, h), Complex(a, -h)};
  std::function<double(Complex, Complex, Complex, Complex, int)> track = [&](Complex z0, Complex z1, Complex f0,
                                                                               Complex f1, int depth) {
    const double d = std::arg(f1 / f0);
    if (std::abs(d) <= std::numbers::pi / 4 || depth >= 40) return d;
    const Complex zm = 0.5 * (z0 + z1);
    const Complex fm = f(zm);
    return track(z0, zm, f0, fm, depth + 1) + track(zm, z1, fm, f1, depth + 1);
  };
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < corners.size(); ++e) {
    Complex z0 = corners[e], f0 = f(z0);
    for (int j = 1; j <= 8; ++j) {
      const Complex z1 = corners[e] + (corners[e + 1] - corners[e]) * (j / 8.0);
      const Complex f1 = f(z1);
      if (f0 == 0.0 || f1 == 0.0) return std::nullopt;
      total += track(z0, z1, f0, f1, 0);
      z0 = z1;
      f0 = f1;
    }
  }
  const double turns = total / (mirrored ? std::numbers::pi : 2 * std::numbers::pi);
  const double n = std::round(turns);
  if (std::abs(turns - n) > 0.2 || n < 0) return std::nullopt;
  return static_cast<int>(n);
}

}  // namespace

// ---------------------------------------------------------------------------

MagnusPropagator::MagnusPropagator(const ProblemSpec& p, int steps)
    : r_(p.components()), steps_(std::max(1, steps)), h_((p.b() - p.a()) / std::max(1, steps)),
      real_(p.real_potential()) {
  inv_metric_.reserve(2 * steps_);
  potential_.reserve(2 * steps_);
  for (int k = 0; k < steps_; ++k) {
    const double mid = p.a() + (k + 0.5) * h_;
    for (double x : {mid - kGauss * h_, mid + kGauss * h_}) {
      const double pv = p.metric_at(x);
      if (!(pv > 0.0) || !std::isfinite(pv))
        throw IntegrationError("metric P is not positive at x = " + std::to_string(x));
      inv_metric_.push_back(1.0 / pv);
      potential_.push_back(p.potential_at(x));
    }
  }
  if (r_ == 1) return;
  // Omega(lambda) = omega0 + lambda * omega1 per step.
  const int n = 2 * r_;
  CMatrix f = CMatrix::Zero(n, n);
  f.bottomLeftCorner(r_, r_).setIdentity();
  auto node = [&](int i) {
    CMatrix a = CMatrix::Zero(n, n);
    a.topRightCorner(r_, r_) = inv_metric_[i] * CMatrix::Identity(r_, r_);
    a.bottomLeftCorner(r_, r_) = potential_[i];
    return a;
  };
  const double c = kCommutator * h_ * h_;
  for (int k = 0; k < steps_; ++k) {
    const CMatrix a1 = node(2 * k), a2 = node(2 * k + 1);
    omega0_.push_back((h_ / 2) * (a1 + a2) + c * (a2 * a1 - a1 * a2));
    omega1_.push_back(-h_ * f - c * ((a2 * f - f * a2) + (f * a1 - a1 * f)));
    if (r_ == 2) {
      omega0_4_.push_back(omega0_.back());
      omega1_4_.push_back(omega1_.back());
    }
  }
  if (r_ == 2) {
    omega0_.clear();
    omega1_.clear();
  }
}

template <class T>
std::pair<CMatrix, double> MagnusPropagator::propagate_scalar(Complex lambda, bool rescale) const {
  const T lam = scalar_of<T>(lambda);
  const T h = T(h_);
  const T c = T(kCommutator * h_ * h_);
  T y[4] = {T(1), T(0), T(0), T(1)};
  double log_scale = 0.0;
  for (int k = 0; k < steps_; ++k) {
    const T q1 = T(inv_metric_[2 * k]), q2 = T(inv_metric_[2 * k + 1]);
    const T s1 = scalar_of<T>(potential_[2 * k](0, 0)) - lam;
    const T s2 = scalar_of<T>(potential_[2 * k + 1](0, 0)) - lam;
    T e[4];
    exp_traceless<T>(c * (q2 * s1 - q1 * s2), h / T(2) * (q1 + q2), h / T(2) * (s1 + s2), e);
    const T n0 = e[0] * y[0] + e[1] * y[2], n1 = e[0] * y[1] + e[1] * y[3];
    const T n2 = e[2] * y[0] + e[3] * y[2], n3 = e[2] * y[1] + e[3] * y[3];
    y[0] = n0;
    y[1] = n1;
    y[2] = n2;
    y[3] = n3;
    if (rescale) {
      const double m = std::max({std::abs(y[0]), std::abs(y[1]), std::abs(y[2]), std::abs(y[3])});
      if (m > 0) {
        for (T& v : y) v /= T(m);
        log_scale += std::log(m);
      }
    }
  }
  CMatrix out(2, 2);
  out << Complex(y[0]), Complex(y[1]), Complex(y[2]), Complex(y[3]);
  return {out, log_scale};
}

template <class Mat>
std::pair<CMatrix, double> MagnusPropagator::propagate_system(Complex lambda, bool rescale,
                                                              const std::vector<Mat>& omega0,
                                                              const std::vector<Mat>& omega1) const {
  const int n = 2 * r_;
  Mat y = Mat::Identity(n, n);
  Mat omega(n, n);
  double log_scale = 0.0;
  for (int k = 0; k < steps_; ++k) {
    omega = omega0[k] + lambda * omega1[k];
    y = (omega.exp() * y).eval();
    if (rescale) {
      const double m = y.cwiseAbs().maxCoeff();
      if (m > 0) {
        y /= m;
        log_scale += std::log(m);
      }
    }
  }
  return {CMatrix(y), log_scale};
}

CMatrix MagnusPropagator::propagate(Complex lambda) const {
  if (r_ == 1) {
    if (real_ && lambda.imag() == 0.0) return propagate_scalar<double>(lambda, false).first;
    return propagate_scalar<Complex>(lambda, false).first;
  }
  if (r_ == 2) return propagate_system(lambda, false, omega0_4_, omega1_4_).first;
  return propagate_system(lambda, false, omega0_, omega1_).first;
}

std::pair<CMatrix, double> MagnusPropagator::propagate_scaled(Complex lambda) const {
  if (r_ == 1) {
    if (real_ && lambda.imag() == 0.0) return propagate_scalar<double>(lambda, true);
    return propagate_scalar<Complex>(lambda, true);
  }
  if (r_ == 2) return propagate_system(lambda, true, omega0_4_, omega1_4_);
  return propagate_system(lambda, true, omega0_, omega1_);
}

// ---------------------------------------------------------------------------

double optical_length(const ProblemSpec& p) { return gk_integral(p); }

double heat_a0(const ProblemSpec& p) { return gk_integral(p) / std::sqrt(4.0 * std::numbers::pi); }

int secular_nullity(const CMatrix& m, const CMatrix& n, const CMatrix& e, double tol) {
  const CMatrix ne = n * e;
  const RVector sv = singular_values(m + ne);
  const double scale = std::max({sv(0), singular_values(m)(0), singular_values(ne)(0)});
  int count = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) <= tol * scale) ++count;
  return count;
}

std::vector<double> Spectrum::expanded(int limit) const {
  std::vector<double> out;
  for (const auto& e : eigenvalues)
    for (int k = 0; k < e.multiplicity; ++k) out.push_back(e.value);
  if (limit >= 0 && static_cast<int>(out.size()) > limit) out.resize(static_cast<std::size_t>(limit));
  return out;
}

int Spectrum::total() const {
  int n = 0;
  for (const auto& e : eigenvalues) n += e.multiplicity;
  return n;
}

Spectrum find_eigenvalues(const ProblemSpec& p, const BoundaryConditions& bc, int count,
                          std::optional<double> lambda_min, const SolverSettings& s, const OracleOptions& o) {
  if (count < 1) throw ConfigError("eigenvalue count must be positive");
  if (bc.components() != p.components()) throw ConfigError("boundary matrices do not match the component count");
  const BcClassification cls = check_self_adjoint(bc);
  if (!cls.self_adjoint)
    throw ComputationError("not_self_adjoint",
                           "boundary conditions are not self-adjoint; the spectrum need not be real");

  const int r = p.components();
  const double length = optical_length(p);
  const bool constant = constant_coefficients(p);
  const double dk = std::numbers::pi / (o.samples_per_spacing * r * length);

  auto steps_for = [&](double k_top) {
    if (constant) return 1;
    const double want = std::ceil(2.0 * k_top * length);
    return static_cast<int>(std::clamp(want, static_cast<double>(o.magnus_steps), 200000.0));
  };

  // Lower end of the scan.
  double lambda_lo;
  if (lambda_min) {
    lambda_lo = *lambda_min;
  } else {
    double lowest = std::numeric_limits<double>::infinity();
    for (int k = 0; k < 65; ++k) {
      const double x = p.a() + (p.b() - p.a()) * k / 64.0;
      const CMatrix rx = p.potential_at(x);
      const Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (rx + rx.adjoint()), Eigen::EigenvaluesOnly);
      lowest = std::min(lowest, es.eigenvalues().minCoeff());
    }
    lambda_lo = lowest - 1.0;
    // Boundary terms can push eigenvalues below min R; probe downwards.
    const double k_probe = 50.0 / length;
    const SecularScan probe(p, bc, steps_for, k_probe);
    SecularSample prev = probe.sample(lambda_lo);
    const Complex ref = std::conj(prev.g) / std::abs(prev.g);
    double found = lambda_lo;
    for (double k = dk; k <= k_probe; k += dk) {
      const double lam = lambda_lo - k * k;
      const SecularSample cur = probe.sample(lam);
      if (std::abs(cur.g) <= 100 * cur.noise) break;
      if ((cur.g * ref).real() * (prev.g * ref).real() <= 0.0) found = lam;
      prev = cur;
    }
    if (found < lambda_lo) lambda_lo = found - 1.0;
  }

  Spectrum spec;
  spec.lambda_min = lambda_lo;

  const double k_weyl = std::numbers::pi * ((count + r - 1) / r + 2) / length;
  double k_max = std::sqrt(std::max(k_weyl * k_weyl - std::min(lambda_lo, 0.0), k_weyl * k_weyl)) + 4 * dk;

  for (int attempt = 0; attempt < 8; ++attempt, k_max *= 1.5) {
    SecularScan scan(p, bc, steps_for, k_max + std::sqrt(std::max(0.0, -lambda_lo)));
    const Complex g0 = scan.value(lambda_lo);
    if (std::abs(g0) == 0.0)
      throw ComputationError("imaginary_residue", "secular determinant vanishes at the scan start; move lambda_min");
    spec.phase = std::arg(g0);
    scan.set_phase(spec.phase);

    std::vector<double> lam;
    std::vector<Complex> g;
    for (double k = 0.0; k <= k_max; k += dk) {
      lam.push_back(lambda_lo + k * k);
      g.push_back(scan.value(lam.back()));
    }
    const std::size_t n = lam.size();
    spec.scan_points = static_cast<int>(n);
    double gmax = 0.0, imax = 0.0;
    for (const auto& v : g) {
      gmax = std::max(gmax, std::abs(v));
      imax = std::max(imax, std::abs(v.imag()));
    }
    spec.imag_ratio = gmax > 0 ? imax / gmax : 0.0;
    spec.fallback = spec.imag_ratio > 1e-6;

    auto re = [&](double x) { return scan.value(x).real(); };
    auto mag2 = [&](double x) { return std::norm(scan.value(x)); };
    auto residual_at = [&](double x, std::size_t lo, std::size_t hi) {
      const double local = std::max(std::abs(g[lo]), std::abs(g[hi]));
      return local > 0 ? std::abs(scan.value(x)) / local : 0.0;
    };

    std::vector<Eigenvalue> roots;
    auto accept_simple = [&](double x, std::size_t lo, std::size_t hi) {
      const int nul = scan.nullity_at(x);
      roots.push_back({x, std::max(1, nul), residual_at(x, lo, hi), nul, false});
    };

    for (std::size_t i = 0; i + 1 < n; ++i) {
      if (!spec.fallback) {
        const double a = g[i].real(), b = g[i + 1].real();
        if (a == 0.0 && i > 0) {
          accept_simple(lam[i], i - 1, i + 1);
          continue;
        }
        if (a * b < 0.0) {
          accept_simple(bracket_root(re, lam[i], lam[i + 1], a, b), i, i + 1);
          continue;
        }
      }
      // Touching minimum of |g| without a sign change.
      if (i == 0 || i + 1 >= n) continue;
      const double m0 = std::abs(g[i - 1]), m1 = std::abs(g[i]), m2 = std::abs(g[i + 1]);
      if (!(m1 < m0 && m1 <= m2)) continue;
      if (!spec.fallback && (g[i - 1].real() * g[i].real() <= 0.0 || g[i].real() * g[i + 1].real() <= 0.0)) continue;
      const auto& f = spec.fallback ? std::function<double(double)>(mag2) : std::function<double(double)>(re);
      const std::optional<double> star = stationary_point(f, lam[i - 1], lam[i + 1]);
      const double x = star.value_or(lam[i]);
      if (!spec.fallback) {
        const double gx = re(x);
        if (gx * g[i].real() < 0.0) {
          // Two close simple roots.
          accept_simple(bracket_root(re, lam[i - 1], x, g[i - 1].real(), gx), i - 1, i + 1);
          accept_simple(bracket_root(re, x, lam[i + 1], gx, g[i + 1].real()), i - 1, i + 1);
          continue;
        }
      }
      const int nul = scan.nullity_at(x);
      if (nul == 0) continue;
      roots.push_back({x, spec.fallback ? nul : std::max(2, nul), residual_at(x, i - 1, i + 1), nul, false});
    }
    std::sort(roots.begin(), roots.end(), [](const Eigenvalue& l, const Eigenvalue& rr) { return l.value < rr.value; });
    std::vector<Eigenvalue> merged;
    for (const auto& e : roots) {
      if (!merged.empty() && std::abs(e.value - merged.back().value) <= 1e-9 * (1 + std::abs(e.value))) {
        merged.back().multiplicity = std::max(merged.back().multiplicity, e.multiplicity);
        continue;
      }
      merged.push_back(e);
    }
    roots = std::move(merged);

    // Check each block of samples against a contour count; rebuild the
    // roots of blocks that disagree by bisection.
    const bool mirrored = !spec.fallback;
    auto gc = [&](Complex z) { return scan.value(z); };
    // Returns the (possibly nudged) right edge and the count.
    auto count_in = [&](double a, double b, double room) -> std::pair<double, std::optional<int>> {
      for (int shift = 0; shift < 4; ++shift) {
        const double edge = b + 0.0371 * shift * room;
        if (auto c = contour_count(gc, a, edge, mirrored)) return {edge, c};
      }
      return {b, std::nullopt};
    };
    auto accept_at = [&](double x, int mult, double a, double b, std::vector<Eigenvalue>& out) {
      const double local = std::max(std::abs(scan.value(a)), std::abs(scan.value(b)));
      const int nul = scan.nullity_at(x);
      out.push_back({x, mult, local > 0 ? std::abs(scan.value(x)) / local : 0.0, nul, false});
    };
    std::function<void(double, double, int, std::vector<Eigenvalue>&)> resolve =
        [&](double a, double b, int c, std::vector<Eigenvalue>& out) {
          if (c <= 0) return;
          const bool tiny = b - a <= 1e-11 * (1 + std::abs(a));
          if (c == 1 && mirrored) {
            const double fa = re(a), fb = re(b);
            if (fa * fb < 0.0) return accept_at(bracket_root(re, a, b, fa, fb), 1, a, b, out);
          }
          if (c == 1 || tiny) {
            boost::uintmax_t iters = 200;
            const auto m = boost::math::tools::brent_find_minima(mag2, a, b, 40, iters);
            return accept_at(m.first, c, a, b, out);
          }
          const std::optional<double> star = stationary_point(mirrored ? std::function<double(double)>(re)
                                                                       : std::function<double(double)>(mag2),
                                                              a, b);
          if (star && scan.nullity_at(*star) >= c) return accept_at(*star, c, a, b, out);
          double mid = 0.5 * (a + b);
          std::optional<int> left;
          for (int shift = 0; shift < 4 && !left; ++shift) {
            mid = a + (0.5 + 0.0613 * shift) * (b - a);
            left = contour_count(gc, a, mid, mirrored);
          }
          if (!left || *left > c) {
            boost::uintmax_t iters = 200;
            const auto m = boost::math::tools::brent_find_minima(mag2, a, b, 40, iters);
            return accept_at(m.first, c, a, b, out);
          }
          resolve(a, mid, *left, out);
          resolve(mid, b, c - *left, out);
        };
    {
      std::vector<Eigenvalue> checked;
      std::size_t next_root = 0;
      std::size_t i0 = 0;
      double a = lam[0];
      while (i0 + 1 < n) {
        std::size_t i1 = std::min(i0 + 16, n - 1);
        while (i1 + 1 < n && std::abs(g[i1]) < 1e-3 * std::max(std::abs(g[i1 - 1]), std::abs(g[i1 + 1]))) ++i1;
        const double room = i1 + 1 < n ? lam[i1 + 1] - lam[i1] : 0.0;
        const auto [b, c] = count_in(a, lam[i1], room);
        std::vector<Eigenvalue> block;
        while (next_root < roots.size() && roots[next_root].value < b) block.push_back(roots[next_root++]);
        int claimed = 0;
        for (const auto& e : block) claimed += e.multiplicity;
        if (c && *c != claimed) {
          block.clear();
          resolve(a, b, *c, block);
        }
        checked.insert(checked.end(), block.begin(), block.end());
        i0 = i1;
        a = b;
      }
      roots = std::move(checked);
    }

    int total = 0;
    spec.eigenvalues.clear();
    for (const auto& e : roots) {
      if (total >= count) break;
      spec.eigenvalues.push_back(e);
      total += e.multiplicity;
    }
    if (total < count) continue;

    if (!constant) {
      const Complex unphase = std::polar(1.0, -spec.phase);
      auto rk = [&](double x) { return (unphase * bc_determinant(bc, fundamental_matrix(p, Complex(x, 0.0), s))).real(); };
      const int limit = std::min<int>(o.refine_count, static_cast<int>(spec.eigenvalues.size()));
      for (int q = 0; q < limit; ++q) {
        Eigenvalue& e = spec.eigenvalues[static_cast<std::size_t>(q)];
        if (e.multiplicity != 1 || spec.fallback) continue;
        for (double delta = 1e-6 * (1 + std::abs(e.value)); delta < 1e-1 * (1 + std::abs(e.value)); delta *= 10) {
          const double lo = e.value - delta, hi = e.value + delta;
          const double flo = rk(lo), fhi = rk(hi);
          if (flo * fhi < 0.0) {
            e.value = bracket_root(rk, lo, hi, flo, fhi);
            e.refined = true;
            break;
          }
        }
      }
    }
    return spec;
  }
  throw ComputationError("scan_budget", "found fewer than " + std::to_string(count) +
                                            " eigenvalues within the scan budget");
}

// ---------------------------------------------------------------------------

double mean_potential_shift(const ProblemSpec& p1, const ProblemSpec& p2) {
  const int r = p1.components();
  auto f = [&](double x) {
    const Complex tr = p1.potential_at(x).trace() - p2.potential_at(x).trace();
    return tr.real() / std::sqrt(p1.metric_at(x));
  };
  const double num = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, p1.a(), p1.b(), 15, 1e-12);
  return num / (r * optical_length(p1));
}

TruncatedProduct truncated_ratio(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                                 int terms, bool skip_zero_mode, const SolverSettings& s, const OracleOptions& o) {
  if (terms < 1) throw ConfigError("term count must be positive");
  if (!same_metric(p1, p2, s.samples))
    throw ComputationError("metric_mismatch", "the eigenvalue product needs equal metrics P1 = P2");

  const bool zero1 = near_zero_mode(bc, fundamental_matrix(p1, 0.0, s), s);
  const bool zero2 = near_zero_mode(bc, fundamental_matrix(p2, 0.0, s), s);
  if (zero2) throw ZeroModeDetected("problem 2 has a zero mode; the product is undefined");
  if (zero1 && !skip_zero_mode) throw ZeroModeDetected("problem 1 has a zero mode; enable zero-mode skipping");
  if (!zero1 && skip_zero_mode)
    throw ComputationError("no_zero_mode", "problem 1 has no zero mode to skip");

  TruncatedProduct out;
  out.terms = terms;
  out.eigenvalues1 = find_eigenvalues(p1, bc, terms, std::nullopt, s, o).expanded(terms);
  out.eigenvalues2 = find_eigenvalues(p2, bc, terms, std::nullopt, s, o).expanded(terms);

  if (zero1) {
    std::size_t idx = 0;
    for (std::size_t i = 1; i < out.eigenvalues1.size(); ++i)
      if (std::abs(out.eigenvalues1[i]) < std::abs(out.eigenvalues1[idx])) idx = i;
    out.zero_index = static_cast<int>(idx);
  }

  double estimate = 1.0;
  int differing = 0;
  for (int k = 0; k < terms; ++k) {
    const double l1 = out.eigenvalues1[static_cast<std::size_t>(k)];
    const double l2 = out.eigenvalues2[static_cast<std::size_t>(k)];
    const double factor = (out.zero_index && *out.zero_index == k) ? 1.0 / l2 : l1 / l2;
    if (factor != 1.0) ++differing;
    estimate *= factor;
  }
  out.estimate = estimate;

  const double shift = std::abs(mean_potential_shift(p1, p2));
  const double last = std::abs(out.eigenvalues2.back());
  const double tail = last > 0 ? shift * (terms + 1) / last : std::numeric_limits<double>::infinity();
  out.tail_bound = std::abs(estimate) * std::expm1(tail) + std::abs(estimate) * 1e-12 * differing;
  return out;
}

// ---------------------------------------------------------------------------

namespace {

// ln |det(M + N E)| at lambda = -t, r = 1.
double log_secular(const ProblemSpec& p, const BoundaryConditions& bc, double t, double length) {
  const int steps = std::max(512, static_cast<int>(std::ceil(4.0 * std::sqrt(t) * length)));
  const MagnusPropagator prop(p, steps);
  const auto [e, sigma] = prop.propagate_scaled(Complex(-t, 0.0));
  const CMatrix& m = bc.M();
  const CMatrix& n = bc.N();
  const Complex cross = (adjugate(m) * n * e).trace();
  const Complex rest = determinant(m) + determinant(n);
  return sigma + std::log(std::abs(cross + rest * std::exp(-sigma)));
}

}  // namespace

AsymptoticsReport decay_exponent(const ProblemSpec& p1, const ProblemSpec& p2, const BoundaryConditions& bc,
                                 double t_min, double t_max, int points) {
  if (p1.components() != 1 || p2.components() != 1)
    throw ComputationError("unsupported", "the decay fit is implemented for single-component problems only");
  if (points < 3 || !(t_min > 0) || !(t_max > t_min)) throw ConfigError("decay grid needs t_max > t_min > 0 and >= 3 points");

  AsymptoticsReport rep;
  rep.a0_1 = heat_a0(p1);
  rep.a0_2 = heat_a0(p2);
  const double len1 = optical_length(p1), len2 = optical_length(p2);
  auto h = [&](double t) { return log_secular(p1, bc, t, len1) - log_secular(p2, bc, t, len2); };

  constexpr double delta = 0.05;
  double hmax = 0.0;
  std::vector<double> lt, ld;
  for (int i = 0; i < points; ++i) {
    const double t = t_min * std::pow(t_max / t_min, static_cast<double>(i) / (points - 1));
    const double hp = h(t * std::exp(delta)), hm = h(t * std::exp(-delta));
    hmax = std::max({hmax, std::abs(hp), std::abs(hm)});
    const double dhdt = (hp - hm) / (2 * delta * t);
    rep.t.push_back(t);
    rep.log_derivative.push_back(std::log(std::abs(dhdt)));
    lt.push_back(std::log(t));
    ld.push_back(rep.log_derivative.back());
  }
  if (hmax <= 1e-12) {
    rep.identical = true;
    rep.message = "identical problems: the log-determinant difference is at the noise floor";
    rep.log_derivative.clear();
    return rep;
  }
  const LeastSquares fit = fit_line(lt, ld);
  rep.exponent = fit.slope;
  rep.ci_low = fit.slope - 2 * fit.slope_se;
  rep.ci_high = fit.slope + 2 * fit.slope_se;
  rep.message = "fitted over " + std::to_string(points) + " points";
  return rep;
}

WeylFit weyl_slope(const Spectrum& spec, const ProblemSpec& p) {
  WeylFit out;
  out.expected = std::numbers::pi / (p.components() * optical_length(p));
  const std::vector<double> all = spec.expanded();
  std::vector<double> l, root;
  for (std::size_t i = 0; i < all.size(); ++i) {
    if (all[i] <= 0) continue;
    l.push_back(static_cast<double>(i + 1));
    root.push_back(std::sqrt(all[i]));
  }
  const std::size_t half = l.size() / 2;
  std::vector<double> lu(l.begin() + static_cast<std::ptrdiff_t>(half), l.end());
  std::vector<double> ru(root.begin() + static_cast<std::ptrdiff_t>(half), root.end());
  const LeastSquares fit = fit_line(lu, ru);
  out.slope = fit.slope;
  out.slope_error = fit.slope_se;
  if (l.size() < 10)
    out.verdict = "insufficient";
  else
    out.verdict = std::abs(out.slope / out.expected - 1.0) <= 0.02 ? "consistent" : "inconsistent";
  return out;
}

}  // namespace funcdet
