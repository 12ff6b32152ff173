#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "funcdet/error.hpp"
#include "funcdet/linalg.hpp"

namespace funcdet {

struct OdeOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  long max_steps = 2'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Dormand-Prince 5(4) with PI step control and a max-norm error test, integrating y' = f(x, y) from
/// x0 to x1 in place. `h` is the trial step on entry and the suggested next
/// step on exit, so consecutive calls continue smoothly.
/// f has signature void(double x, const CVector& y, CVector& dy).
template <class Rhs>
void dopri5(const Rhs& f, double x0, double x1, CVector& y, const OdeOptions& opt, double& h, OdeStats& stats) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                   a76 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  // PI controller constants.
  constexpr double beta = 0.04;
  constexpr double expo1 = 0.2 - beta * 0.75;
  constexpr double safe = 0.9;
  constexpr double facc1 = 1.0 / 0.2;  // facmin
  constexpr double facc2 = 1.0 / 10.0;  // facmax

  const double span = x1 - x0;
  if (span == 0.0) return;
  const double dir = span > 0 ? 1.0 : -1.0;
  const Eigen::Index n = y.size();

  CVector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), ynew(n);
  f(x0, y, k1);
  ++stats.rhs_evals;

  double x = x0;
  h = std::abs(h);
  if (!(h > 0.0)) h = std::abs(span) / 100.0;
  double facold = 1e-4;
  bool last_rejected = false;
  long steps = 0;

  while (dir * (x1 - x) > 0.0) {
    if (++steps > opt.max_steps) throw IntegrationError("step budget exhausted before reaching the endpoint");
    const double room = std::abs(x1 - x);
    bool final_step = false;
    const double h_trial = h;
    if (h >= room) {
      h = room;
      final_step = true;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(x)) && !final_step)
      throw IntegrationError("step size underflow at x = " + std::to_string(x) +
                             " (coefficient singularity inside the interval?)");
    const double hs = dir * h;

    tmp = y + hs * a21 * k1;
    f(x + c2 * hs, tmp, k2);
    tmp = y + hs * (a31 * k1 + a32 * k2);
    f(x + c3 * hs, tmp, k3);
    tmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    f(x + c4 * hs, tmp, k4);
    tmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    f(x + c5 * hs, tmp, k5);
    tmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double xph = final_step ? x1 : x + hs;
    f(xph, tmp, k6);
    ynew = y + hs * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    f(xph, ynew, k7);
    stats.rhs_evals += 6;

    tmp = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double err = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sk = opt.abs_tol + opt.rel_tol * std::max(std::abs(y(i)), std::abs(ynew(i)));
      err = std::max(err, std::abs(tmp(i)) / sk);
    }
    if (!std::isfinite(err)) {
      if (!ynew.allFinite()) throw IntegrationError("solution overflowed near x = " + std::to_string(x));
      err = 1e10;
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      double fac = fac11 / std::pow(facold, beta);
      fac = std::clamp(fac / safe, facc2, facc1);
      facold = std::max(err, 1e-4);
      ++stats.accepted;
      k1 = k7;
      y = ynew;
      x = xph;
      double hnew = h / fac;
      if (last_rejected) hnew = std::min(hnew, h);
      last_rejected = false;
      if (final_step) {
        // A clipped final step says nothing about the next one.
        h = std::max(hnew, h_trial);
        return;
      }
      h = hnew;
    } else {
      h = h / std::min(facc1, fac11 / safe);
      last_rejected = true;
      ++stats.rejected;
    }
  }
}

}  // namespace funcdet
