#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "schelling/bignat.hpp"
#include "schelling/grid.hpp"

namespace schelling {

/// Binary entropy, log base 2; H(0) = H(1) = 0 by continuity.
inline double entropy(double tau) {
  if (tau < 0.0 || tau > 1.0) throw std::domain_error("entropy: tau outside [0,1]");
  if (tau == 0.0 || tau == 1.0) return 0.0;
  return -tau * std::log2(tau) - (1.0 - tau) * std::log2(1.0 - tau);
}

/// Infimum neighborhood-inflation factor that lets a radical region trigger
/// the cascade; zero at tau = 1/2 and below 0.265 on the whole working range.
inline double g_of_tau(double tau) {
  double radicand = ((2.0 * tau - 1.0) * (409.0 * tau - 20000.0)) / 80000.0;
  if (radicand < 0.0) throw std::domain_error("g_of_tau: negative radicand (tau > 1/2)");
  return (694.0 * tau + 800.0 * std::sqrt(radicand) - 347.0) /
         (200.0 * (6.0 * tau + 1.0));
}

struct RhoExponents {
  double log2_rho = 0;           // closest-trigger distance exponent
  double log2_rho_prime = 0;     // clear-annulus width exponent
  double log2_rho_double_prime = 0;  // affected-node budget exponent
};

/// The three growth-radius exponents, as written:
///   log2 rho   = 0.5 (1-H+eps/2) (1+eps')^2 N
///   log2 rho'  = (1-H-eps) (1-0.5(1+eps')^2) N + 2 log2 N
///   log2 rho'' = (1-H+eps) ((1+eps')^2-1) N
inline RhoExponents rho_family(double tau, double eps, double eps_prime,
                               double n) {
  double h = entropy(tau);
  double q = (1.0 + eps_prime) * (1.0 + eps_prime);
  RhoExponents r;
  r.log2_rho = 0.5 * (1.0 - h + eps / 2.0) * q * n;
  r.log2_rho_prime = (1.0 - h - eps) * (1.0 - 0.5 * q) * n + 2.0 * std::log2(n);
  r.log2_rho_double_prime = (1.0 - h + eps) * (q - 1.0) * n;
  return r;
}

namespace detail {

/// Per-N exponent rates with eps' = g(tau); the N-free form the threshold
/// system is evaluated in (the 2 log2 N / N term vanishes in the limit).
struct Rates {
  double r, rp, rpp, g;
};

inline Rates rates_at(double tau, double eps) {
  double h = entropy(tau);
  double gt = g_of_tau(tau);
  double q = (1.0 + gt) * (1.0 + gt);
  return {0.5 * (1.0 - h + eps / 2.0) * q,
          (1.0 - h - eps) * (1.0 - 0.5 * q),
          (1.0 - h + eps) * (q - 1.0), gt};
}

}  // namespace detail

/// The four threshold conditions whose joint feasibility region starts at
/// tau*. Rate (N -> infinity) form throughout.
inline bool threshold_condition_1(double tau) {
  double gt = g_of_tau(tau);
  double c = (1.5 + gt) * (1.5 + gt);
  double lhs = c * tau / 4.0 + 0.5 * (1.0 - c / 4.0) - tau * 0.265 * 0.265;
  return lhs < tau;
}

/// Proof regions (rho^{3/2} and rho'^2) must fit inside the radius on which a
/// ball is a region of expansion, 2^{(3/4)(1-H(4 tau/3)) N}.
inline bool threshold_condition_2(double tau, double eps) {
  auto r = detail::rates_at(tau, eps);
  return 0.75 * (1.0 - entropy(4.0 * tau / 3.0)) -
             std::max(1.5 * r.r, 2.0 * r.rp) > 0.0;
}

inline bool threshold_condition_3(double tau, double eps) {
  auto r = detail::rates_at(tau, eps);
  return 0.5 * r.r - r.rp < 0.0;
}

inline bool threshold_condition_4(double tau, double eps) {
  auto r = detail::rates_at(tau, eps);
  return r.rpp - r.rp < 0.0;
}

/// Minimum tau in (0, 1/2) satisfying all four threshold conditions, by
/// bisection on the joint predicate. Returns NaN when the system is
/// infeasible for the given eps (it needs roughly eps < 1e-3; the reference
/// value 0.4326 is the eps -> 0 limit).
inline double tau_star(double eps) {
  if (!(eps > 0.0 && eps < 0.1))
    throw std::invalid_argument("tau_star: eps must lie in (0, 0.1)");
  auto feasible = [eps](double tau) {
    return threshold_condition_1(tau) && threshold_condition_2(tau, eps) &&
           threshold_condition_3(tau, eps) && threshold_condition_4(tau, eps);
  };
  double first = std::numeric_limits<double>::quiet_NaN();
  for (double tau = 0.401; tau < 0.4996; tau += 0.002) {
    if (feasible(tau)) {
      first = tau;
      break;
    }
  }
  if (std::isnan(first)) return first;
  double lo = first - 0.002, hi = first;
  for (int i = 0; i < 200; ++i) {
    double mid = 0.5 * (lo + hi);
    if (feasible(mid))
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

/// Exponent multiplier of the lower size bound 2^{a N}. Requires eps' > g.
inline double a_of_tau(double tau, double eps, double eps_prime) {
  if (!(eps_prime > g_of_tau(tau)))
    throw std::invalid_argument("a_of_tau: eps' must exceed g(tau)");
  double q = (1.0 + eps_prime) * (1.0 + eps_prime);
  return (1.0 - entropy(tau) - eps) * (2.0 - q);
}

/// Exponent multiplier of the upper size bound 2^{b N}.
inline double b_of_tau(double tau, double eps, double eps_prime) {
  double q = (1.0 + eps_prime) * (1.0 + eps_prime);
  return q * (1.0 - entropy(tau) + eps);
}

/// Exponent of the settling time n* = 2^{(a + eps) N}.
inline double n_star_exponent(double tau, double eps, double eps_prime) {
  return a_of_tau(tau, eps, eps_prime) + eps;
}

inline constexpr double kDefaultEpsilon = 0.01;
inline constexpr double kEpsPrimeMargin = 1e-6;  // default eps' = g + this

/// ----- radical-region arithmetic shared with the detectors -----

/// Downward-adjusted intolerance used by the radical-region cutoff.
inline double radical_tau(double tau, int n, double eps) {
  return tau * (1.0 - 1.0 / (tau * std::pow(double(n), 0.5 - eps)));
}

/// tau mapped through the tau > 1/2 symmetry: 1 - tau + 2/N.
inline double mirror_tau(const Intolerance& tol) {
  int n = tol.neighborhood_size();
  return double(n - tol.threshold() + 2) / n;
}

inline double super_radical_tau(const Intolerance& tol, double eps) {
  double tb = mirror_tau(tol);
  int n = tol.neighborhood_size();
  return (1.0 - 1.0 / (tb * std::pow(double(n), 0.5 - eps))) * tb;
}

/// Window radius of a radical region: floor((1+eps') w).
inline int radical_window_radius(int w, double eps_prime) {
  return static_cast<int>(std::floor((1.0 + eps_prime) * w));
}

/// Largest admissible same-type count for "count < threshold" with a real
/// threshold x. x <= 0 degenerates to "perfectly empty only".
inline int count_limit_below(double x) {
  if (x <= 0.0) return 0;
  double f = std::floor(x);
  if (f == x) return static_cast<int>(x) - 1;
  return static_cast<int>(f);
}

/// Radical cutoff count for a type-theta region: the largest theta-count a
/// radius-floor((1+eps')w) window may hold. Uses the mirrored form when
/// tau > 1/2.
inline int radical_count_limit(const Intolerance& tol, double eps,
                               double eps_prime) {
  int n = tol.neighborhood_size();
  double t = tol.value() <= 0.5 ? radical_tau(tol.value(), n, eps)
                                : super_radical_tau(tol, eps);
  double x = t * (1.0 + eps_prime) * (1.0 + eps_prime) * n;
  return count_limit_below(x);
}

/// ----- exact probability brackets -----

struct ProbabilityBracket {
  double exact = 0.0;        // may underflow to 0; log2_exact never does
  double log2_exact = 0.0;
  double tau_derived = 0.0;  // tau' or tau''
  double log2_envelope = 0.0;  // large-deviation envelope, constants dropped
  double log2_ratio = 0.0;     // log2(exact) - log2(envelope)
};

/// Probability that a node is theta-affected in the initial configuration:
/// P(Binom(N-1, 1/2) <= tau N - 2), exactly. Envelope 2^{-(1-H(tau'))N}/sqrt(N)
/// with tau' = (tau N - 2)/(N - 1). The raw-threshold form admits t > N
/// (full tail, probability one).
inline ProbabilityBracket p_affected_exact(int n, int t) {
  if (t < 2) throw std::invalid_argument("p_affected_exact: need tau N >= 2");
  int kmax = std::min(t - 2, n - 1);
  BigNat sum = binomial_partial_sum(n - 1, kmax);
  ProbabilityBracket b;
  b.log2_exact = sum.log2() - (n - 1);
  b.exact = std::exp2(b.log2_exact);
  b.tau_derived = double(t - 2) / (n - 1);
  b.log2_envelope = -(1.0 - entropy(b.tau_derived)) * n - 0.5 * std::log2(double(n));
  b.log2_ratio = b.log2_exact - b.log2_envelope;
  return b;
}

inline ProbabilityBracket p_affected_exact(const Intolerance& tol) {
  return p_affected_exact(tol.neighborhood_size(), tol.threshold());
}

/// Probability that a radius-floor((1+eps')w) window is a radical region:
/// P(Binom(N_S, 1/2) <= radical count limit), exactly. Envelope
/// 2^{-(1-H(tau''))(1+eps')^2 N} with tau'' = (floor(thr)-1)/((1+eps')^2 N).
inline ProbabilityBracket p_radical_exact(const Intolerance& tol, double eps,
                                          double eps_prime) {
  int n = tol.neighborhood_size();
  int w = (static_cast<int>(std::lround(std::sqrt(double(n)))) - 1) / 2;
  int rs = radical_window_radius(w, eps_prime);
  int ns = (2 * rs + 1) * (2 * rs + 1);
  double q = (1.0 + eps_prime) * (1.0 + eps_prime);
  double thr = radical_tau(tol.value(), n, eps) * q * n;
  int kmax = count_limit_below(thr);
  BigNat sum = binomial_partial_sum(ns, std::min(kmax, ns));
  ProbabilityBracket b;
  b.log2_exact = sum.log2() - ns;
  b.exact = std::exp2(b.log2_exact);
  b.tau_derived = (std::floor(thr) - 1.0) / (q * n);
  if (b.tau_derived > 0.0 && b.tau_derived < 1.0) {
    b.log2_envelope = -(1.0 - entropy(b.tau_derived)) * q * n;
    b.log2_ratio = b.log2_exact - b.log2_envelope;
  } else {
    b.log2_envelope = std::numeric_limits<double>::quiet_NaN();
    b.log2_ratio = std::numeric_limits<double>::quiet_NaN();
  }
  return b;
}

/// ----- curve emission -----

struct CurveRow {
  double tau, H, g, a, b;
  double log2_rho_per_n, log2_rho_prime_per_n, log2_rho_double_prime_per_n;
};

/// One row per grid point. Points above 1/2 are evaluated at the mirror
/// value 1 - tau + 2/N; the row keeps the original tau. eps_prime < 0
/// selects the default g(tau) + margin.
inline CurveRow curve_row(double tau, double eps, double n,
                          double eps_prime = -1.0) {
  double te = tau <= 0.5 ? tau : 1.0 - tau + 2.0 / n;
  if (te > 0.5)
    throw std::domain_error("curve_row: tau too close to 1/2 for this N");
  double ep = eps_prime < 0.0 ? g_of_tau(te) + kEpsPrimeMargin : eps_prime;
  RhoExponents rho = rho_family(te, eps, ep, n);
  return {tau,
          entropy(te),
          g_of_tau(te),
          a_of_tau(te, eps, ep),
          b_of_tau(te, eps, ep),
          rho.log2_rho / n,
          rho.log2_rho_prime / n,
          rho.log2_rho_double_prime / n};
}

inline std::vector<CurveRow> make_curve_rows(const std::vector<double>& taus,
                                             double eps, double n,
                                             double eps_prime = -1.0) {
  std::vector<CurveRow> rows;
  rows.reserve(taus.size());
  for (double t : taus) rows.push_back(curve_row(t, eps, n, eps_prime));
  return rows;
}

inline void emit_curves(const std::vector<CurveRow>& rows, std::ostream& os) {
  os << "tau,H,g,a,b,log2rho_per_N,log2rhop_per_N,log2rhopp_per_N\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf,
                  "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.tau,
                  r.H, r.g, r.a, r.b, r.log2_rho_per_n, r.log2_rho_prime_per_n,
                  r.log2_rho_double_prime_per_n);
    os << buf;
  }
}

}  // namespace schelling
