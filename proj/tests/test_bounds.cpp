#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "schelling/bignat.hpp"
#include "schelling/bounds.hpp"

using namespace schelling;

TEST_CASE("bignat binomial sums are exact") {
  // Full rows sum to 2^n.
  for (int n : {10, 64, 121, 200}) {
    BigNat full = binomial_partial_sum(n, n);
    CHECK(full.bit_length() == n + 1);
    CHECK(full.log2() == Catch::Approx(double(n)).margin(1e-12));
  }
  // Against 128-bit direct arithmetic for small n.
  for (int n : {24, 48, 80}) {
    unsigned __int128 c = 1, sum = 0;
    for (int k = 0; k <= n / 3; ++k) {
      sum += c;
      c = c * (n - k) / (k + 1);
    }
    BigNat got = binomial_partial_sum(n, n / 3);
    CHECK(got.to_u64() == std::uint64_t(sum));  // low 64 bits agree
  }
  // A hand-checkable value: sum_{k<=10} C(24,k) = 2270193 * 2 = 4540386.
  CHECK(binomial_partial_sum(24, 10).to_u64() == 4540386ull);
}

TEST_CASE("entropy values and shape") {
  CHECK(entropy(0.5) == 1.0);
  CHECK(entropy(0.0) == 0.0);
  CHECK(entropy(1.0) == 0.0);
  // Independent high-precision evaluations.
  CHECK(entropy(0.11) == Catch::Approx(0.499915958164528).epsilon(1e-12));
  CHECK(entropy(0.57) == Catch::Approx(0.98581503717891984).epsilon(1e-12));
  CHECK_THROWS_AS(entropy(-0.1), std::domain_error);
  CHECK_THROWS_AS(entropy(1.1), std::domain_error);

  // Symmetry and concavity on a grid.
  for (int i = 1; i < 100; ++i) {
    double t = i / 100.0;
    CHECK(entropy(t) == Catch::Approx(entropy(1.0 - t)).margin(1e-14));
  }
  for (int i = 1; i < 99; ++i) {
    double a = entropy(i / 100.0), b = entropy((i + 1) / 100.0),
           c = entropy((i + 2) / 100.0);
    CHECK(2 * b >= a + c - 1e-12);
  }
}

TEST_CASE("g is zero at one half, positive below, verified pointwise") {
  CHECK(g_of_tau(0.5) == 0.0);
  // Independent high-precision evaluations of the closed form.
  CHECK(g_of_tau(0.45) == Catch::Approx(0.123253708112564739).epsilon(1e-13));
  CHECK(g_of_tau(0.433) == Catch::Approx(0.1379604207626159).epsilon(1e-13));
  CHECK_THROWS_AS(g_of_tau(0.51), std::domain_error);

  // Monotone decreasing on the emission grid (rises toward smaller tau).
  double prev = g_of_tau(0.43);
  for (double t = 0.4301; t <= 0.4999; t += 0.0001) {
    double cur = g_of_tau(t);
    REQUIRE(cur < prev);
    prev = cur;
  }
}

TEST_CASE("tau_star reproduces the threshold intolerance") {
  double ts = tau_star(1e-9);
  CHECK(ts == Catch::Approx(0.4325543403439533).margin(2e-7));
  CHECK(ts == Catch::Approx(0.433).margin(1e-3));
  CHECK(1.0 - ts == Catch::Approx(0.567).margin(1e-3));

  auto all4 = [](double tau, double eps) {
    return threshold_condition_1(tau) && threshold_condition_2(tau, eps) &&
           threshold_condition_3(tau, eps) && threshold_condition_4(tau, eps);
  };
  CHECK(all4(ts + 1e-6, 1e-9));
  CHECK_FALSE(all4(ts - 1e-3, 1e-9));

  CHECK_THROWS_AS(tau_star(0.0), std::invalid_argument);
  CHECK_THROWS_AS(tau_star(0.2), std::invalid_argument);
  // The four conditions are jointly infeasible for eps this large.
  CHECK(std::isnan(tau_star(0.05)));
}

TEST_CASE("condition 1 boundary sits near 0.409") {
  // Direct evaluation of the rate inequality: it holds well below the
  // declared tau* (the binding constraint there is condition 2).
  CHECK(threshold_condition_1(0.44));
  CHECK(threshold_condition_1(0.42));
  CHECK(threshold_condition_1(0.41));
  CHECK_FALSE(threshold_condition_1(0.405));
  CHECK_FALSE(threshold_condition_1(0.40));
}

TEST_CASE("rho family orderings at a reference point") {
  // tau = 0.45, N = 1e4, eps' = g(tau). The orderings require
  // eps < 1 - H(tau) ~ 0.0072, so they are evaluated at eps = 0.001; at
  // eps = 0.01 the rho' exponent goes negative and both fail.
  double n = 1e4;
  RhoExponents r = rho_family(0.45, 0.001, g_of_tau(0.45), n);
  CHECK(r.log2_rho_double_prime < r.log2_rho_prime);  // condition 4
  CHECK(0.5 * r.log2_rho < r.log2_rho_prime);         // condition 3
  RhoExponents r10 = rho_family(0.45, 0.01, g_of_tau(0.45), n);
  CHECK_FALSE(r10.log2_rho_double_prime < r10.log2_rho_prime);
  // Limit case: tau -> 1/2 with eps' = 0 collapses log2 rho to (eps/4) N.
  RhoExponents lim = rho_family(0.5, 0.01, 0.0, n);
  CHECK(lim.log2_rho == Catch::Approx(0.01 / 4.0 * n).margin(1e-9));
}

TEST_CASE("size exponents a and b") {
  CHECK_THROWS_AS(a_of_tau(0.45, 0.01, 0.1), std::invalid_argument);  // eps' < g

  // Substitution check at tau -> 1/2: a = -eps.
  CHECK(a_of_tau(0.5, 0.01, 1e-9) == Catch::Approx(-0.01).margin(1e-6));

  // Independent high-precision evaluation at tau = 0.45.
  double ep = g_of_tau(0.45) + 1e-6;
  CHECK(a_of_tau(0.45, 0.01, ep) ==
        Catch::Approx(-0.00204837621827164).epsilon(1e-10));
  CHECK(b_of_tau(0.45, 0.01, ep) ==
        Catch::Approx(0.0217334910285959).epsilon(1e-10));
  CHECK(n_star_exponent(0.45, 0.01, ep) ==
        Catch::Approx(a_of_tau(0.45, 0.01, ep) + 0.01).margin(1e-15));

  // a <= b pointwise and a grows as tau leaves one half.
  double prev_a = -1;
  for (double t = 0.499; t >= 0.434; t -= 0.001) {
    double e = g_of_tau(t) + 1e-6;
    double a = a_of_tau(t, 0.01, e), b = b_of_tau(t, 0.01, e);
    REQUIRE(a <= b);
    REQUIRE(std::isfinite(a));
    if (prev_a != -1) REQUIRE(a > prev_a);
    prev_a = a;
  }
}

TEST_CASE("p_affected_exact: exact tails and envelope bracket") {
  SECTION("hand-checkable N=9, tau=4/9") {
    ProbabilityBracket b = p_affected_exact(Intolerance::from_fraction(4, 9, 1));
    CHECK(b.exact == Catch::Approx(37.0 / 256.0).epsilon(1e-14));
  }
  SECTION("full tail when tau N - 2 >= N - 1") {
    ProbabilityBracket b = p_affected_exact(9, 10);  // threshold past N
    CHECK(b.exact == 1.0);
    CHECK(b.log2_exact == Catch::Approx(0.0).margin(1e-12));
    // The largest reachable intolerance leaves exactly the top term out.
    ProbabilityBracket top = p_affected_exact(Intolerance::from_fraction(1, 1, 1));
    CHECK(top.exact == Catch::Approx(255.0 / 256.0).epsilon(1e-14));
  }
  SECTION("precondition") {
    CHECK_THROWS_AS(p_affected_exact(Intolerance::from_fraction(1, 9, 1)),
                    std::invalid_argument);
  }
  SECTION("frozen independent values, tau_tilde = 0.45") {
    const double expected[][2] = {{25, -1.885616477517878},
                                  {49, -2.0865716695923974},
                                  {81, -2.6697556202762855},
                                  {121, -3.0880193760291125}};
    for (auto [nd, l2] : expected) {
      int w = (int(std::lround(std::sqrt(nd))) - 1) / 2;
      ProbabilityBracket b = p_affected_exact(Intolerance::parse("0.45", w));
      CHECK(b.log2_exact == Catch::Approx(l2).epsilon(1e-12));
      // Constant-factor bracket: well within a fixed window across N.
      CHECK(std::fabs(b.log2_ratio) <= 7.0);
      CHECK(std::fabs(b.log2_ratio) >= 1e-3);
    }
  }
}

TEST_CASE("p_radical_exact: degenerate threshold and drift decay") {
  SECTION("threshold zero leaves only the all-opposite window") {
    // tau small enough that radical_tau < 0 degenerates the cutoff to
    // count == 0, so p = 2^{-N_S}.
    Intolerance tol = Intolerance::from_fraction(1, 9, 1);
    ProbabilityBracket b = p_radical_exact(tol, 0.1, 0.0);
    CHECK(b.log2_exact == Catch::Approx(-9.0).margin(1e-12));
    CHECK(std::isnan(b.log2_ratio));
  }
  SECTION("frozen exact values and shrinking drift, eps=0.05, eps'=0.2") {
    const double frozen_log2p[] = {-2.983533745710, -1.984969395948,
                                   -14.184367941429};
    const int ws[] = {3, 4, 5};
    double drift[3];
    for (int i = 0; i < 3; ++i) {
      Intolerance tol = Intolerance::parse("0.45", ws[i]);
      ProbabilityBracket b = p_radical_exact(tol, 0.05, 0.2);
      CHECK(b.log2_exact == Catch::Approx(frozen_log2p[i]).epsilon(1e-10));
      double scale = 1.2 * 1.2 * tol.neighborhood_size();
      drift[i] = std::fabs(b.log2_exact / scale + (1.0 - entropy(b.tau_derived)));
    }
    CHECK(drift[0] > drift[1]);
    CHECK(drift[1] > drift[2]);
  }
}

TEST_CASE("curve rows: definitions, symmetry, header") {
  double n = 1e4, eps = 0.01;
  CurveRow row = curve_row(0.45, eps, n);
  double ep = g_of_tau(0.45) + kEpsPrimeMargin;
  CHECK(row.a == Catch::Approx(a_of_tau(0.45, eps, ep)).margin(1e-15));
  CHECK(row.b == Catch::Approx(b_of_tau(0.45, eps, ep)).margin(1e-15));
  CHECK(row.H == Catch::Approx(entropy(0.45)).margin(1e-15));

  // Mirror rows agree with the shifted lower-half value.
  CurveRow hi = curve_row(0.55, eps, n);
  CurveRow lo = curve_row(1.0 - 0.55 + 2.0 / n, eps, n);
  CHECK(hi.a == Catch::Approx(lo.a).margin(1e-15));
  CHECK(hi.b == Catch::Approx(lo.b).margin(1e-15));
  CHECK(hi.g == Catch::Approx(lo.g).margin(1e-15));

  CHECK_THROWS_AS(curve_row(0.50005, eps, n), std::domain_error);

  std::vector<double> taus;
  for (double t = 0.434; t <= 0.4995; t += 0.001) taus.push_back(t);
  auto rows = make_curve_rows(taus, eps, n);
  // g column rises monotonically toward smaller tau (the shape of the
  // trigger-threshold curve, which stays below 0.265 throughout).
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i - 1].g > rows[i].g);
    REQUIRE(rows[i].g < 0.265);
  }
  std::ostringstream os;
  emit_curves(rows, os);
  std::string text = os.str();
  CHECK(text.rfind("tau,H,g,a,b,log2rho_per_N,log2rhop_per_N,log2rhopp_per_N\n",
                   0) == 0);
}
