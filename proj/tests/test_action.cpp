// Action pairs: commutation space, translation parts, lock classification
// and empirical Diophantine certificates.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "parakam/action.hpp"

#include <cmath>

using namespace parakam;

namespace {

IMat elems(int d, std::initializer_list<std::pair<int, int>> es) {
  IMat m = IMat::identity(d);
  for (auto [i, j] : es) m.at(i - 1, j - 1) = 1;
  return m;
}

IVec iv(std::initializer_list<long long> xs) {
  IVec v;
  for (auto x : xs) v.push_back(Int(x));
  return v;
}

QVec qv(std::initializer_list<Rat> xs) { return QVec(xs); }

// a = (x1 + t1, x2 + x1 + t2), b a pure translation on T^2
struct Shear2 {
  UniMat A = make_unimat(elems(2, {{2, 1}}));
  UniMat B = make_unimat(IMat::identity(2));
};

struct TwoFactors3 {  // A = Id + E21, B = Id + E31 on T^3
  UniMat A = make_unimat(elems(3, {{2, 1}}));
  UniMat B = make_unimat(elems(3, {{3, 1}}));
};

struct Jordan3 {  // A = Id, B = Id + E21 + E32 on T^3
  UniMat A = make_unimat(IMat::identity(3));
  UniMat B = make_unimat(elems(3, {{2, 1}, {3, 2}}));
};

struct Big7 {
  UniMat A = make_unimat(elems(7, {{5, 2}, {6, 1}, {7, 3}}));
  UniMat B = make_unimat(elems(7, {{4, 2}, {4, 3}, {6, 4}, {7, 3}}));
};

double frac_dist(double x) {
  double f = x - std::round(x);
  return 2.0 * std::abs(std::sin(M_PI * f));
}

}  // namespace

TEST_CASE("commutation space") {
  TwoFactors3 ex;
  RatSubspace v = commutation_space(ex.A, ex.B);
  // (A-Id)beta = (B-Id)alpha forces alpha1 = beta1 = 0
  CHECK(v.rank() == 4);
  CHECK(v.contains(iv({0, 1, 0, 0, 0, 0})));
  CHECK(v.contains(iv({0, 0, 0, 0, 0, 1})));
  CHECK(!v.contains(iv({1, 0, 0, 0, 0, 0})));
  CHECK(!v.contains(iv({0, 0, 0, 1, 0, 0})));

  Big7 b7;
  RatSubspace v7 = commutation_space(b7.A, b7.B);
  // beta1 = alpha4, beta2 = 0, beta3 = alpha3 = -alpha2
  CHECK(v7.rank() == 10);
  IVec w(14, Int(0));
  w[1] = 1;   // alpha2 = 1
  w[2] = -1;  // alpha3 = -1
  w[9] = -1;  // beta3 = -1
  CHECK(v7.contains(w));
  IVec bad(14, Int(0));
  bad[8] = 1;  // beta2 = 1
  CHECK(!v7.contains(bad));
}

TEST_CASE("translation parts, exactly") {
  Shear2 ex;
  ActionPair p = make_action_pair(ex.A, ex.B, qv({Rat(1, 3), Rat(1, 5)}),
                                  qv({Rat(0), Rat(1, 7)}));
  CHECK(translation_part_q(p, 0, 1) == p.beta_q);
  CHECK(translation_part_q(p, 1, 0) == p.alpha_q);
  // a^2 b = A^2 B + (2 t1, t1 + 2 t2 + s2)
  QVec t21 = translation_part_q(p, 2, 1);
  CHECK(t21[0] == Rat(2, 3));
  CHECK(t21[1] == Rat(92, 105));
  // inverses: alpha_{k,l} + (A^k B^l) alpha_{-k,-l} = 0
  for (long long k = -3; k <= 3; ++k)
    for (long long l = -3; l <= 3; ++l) {
      QVec fwd = translation_part_q(p, k, l);
      QVec bwd = translation_part_q(p, -k, -l);
      IMat pw = power_pair(ex.A, ex.B, k, l, /*use_dual=*/false);
      for (int i = 0; i < 2; ++i) {
        Rat s = fwd[i];
        for (int j = 0; j < 2; ++j) s += Rat(pw.at(i, j)) * bwd[j];
        CHECK(s == 0);
      }
    }
}

TEST_CASE("translation matrices satisfy the generator recursions") {
  Big7 ex;
  IMat id = IMat::identity(7);
  for (long long k = -2; k <= 2; ++k)
    for (long long l = -2; l <= 2; ++l) {
      auto [pm, qm] = translation_matrices(ex.A, ex.B, k, l);
      auto [pn, qn] = translation_matrices(ex.A, ex.B, k + 1, l);
      CHECK(pn == add(mul(ex.A.entries, pm), id));
      CHECK(qn == mul(ex.A.entries, qm));
    }
  auto [p01, q01] = translation_matrices(ex.A, ex.B, 0, 1);
  CHECK(p01.is_zero());
  CHECK(q01 == id);
}

TEST_CASE("lift repair makes the commutation identity exact") {
  Shear2 ex;
  // defect (A-Id)beta - (B-Id)alpha = (0, beta1): an integer beta1 is
  // absorbed into the lift, a fractional one is rejected.
  ActionPair p = make_action_pair(ex.A, ex.B, qv({Rat(1, 3), Rat(1, 5)}),
                                  qv({Rat(1), Rat(1, 7)}));
  CHECK(p.beta_q[0] == 0);
  CHECK(p.lift_repair_beta == iv({1, 0}));
  CHECK_THROWS_AS(make_action_pair(ex.A, ex.B, qv({Rat(1, 3), Rat(1, 5)}),
                                   qv({Rat(1, 2), Rat(1, 7)})),
                  std::invalid_argument);
  ActionPair pf = make_action_pair(ex.A, ex.B, std::vector<double>{0.3, 0.2},
                                   std::vector<double>{1.0, 0.7});
  CHECK(pf.beta[0] == doctest::Approx(0.0));
  CHECK(pf.lift_repair_beta == iv({1, 0}));
}

TEST_CASE("maximal translation factor") {
  Big7 ex;
  ActionPair p = make_action_pair(
      ex.A, ex.B,
      std::vector<double>{0.11, 0.22, -0.22, 0.44, 0.0, 0.0, 0.0},
      std::vector<double>{0.44, 0.0, -0.22, 0.0, 0.0, 0.0, 0.0});
  CHECK(p.d1 == 3);
  // factor = first three coordinates (up to a unimodular change of basis)
  for (int i = 0; i < 3; ++i)
    for (int j = 3; j < 7; ++j) CHECK(p.P.at(i, j) == 0);
  Shear2 s2;
  ActionPair ps = make_action_pair(s2.A, s2.B, std::vector<double>{0.3, 0.9},
                                   std::vector<double>{0.0, 0.5});
  CHECK(ps.d1 == 1);
  CHECK(std::abs(ps.alpha1[0]) == doctest::Approx(0.3));
  CHECK(ps.beta1[0] == doctest::Approx(0.0));
}

TEST_CASE("locked: common identity factor") {
  TwoFactors3 ex;
  LockCertificate c = classify_locked(ex.A, ex.B, 10);
  CHECK(c.verdict == Verdict::Locked);
  CHECK(c.kind == LockKind::IdentityFactor);
  REQUIRE(c.witness_k.size() == 3);
  CHECK(abs(c.witness_k[0]) == 1);
  CHECK(c.witness_k[1] == 0);
  CHECK(c.witness_k[2] == 0);
}

TEST_CASE("locked: parabolic factor") {
  Jordan3 ex;
  LockCertificate c = classify_locked(ex.A, ex.B, 10);
  CHECK(c.verdict == Verdict::Locked);
  CHECK(c.kind == LockKind::ParabolicFactor);
  CHECK(c.pair_k == 1);
  CHECK(c.pair_l == 0);
  REQUIRE(c.witness_m.size() == 3);
  // the witness mode pairs a^k with a true parabolic block of b
  CHECK(c.witness_m[2] == 0);
  CHECK(c.witness_m[1] != 0);
}

TEST_CASE("unlocked verdicts") {
  Shear2 s2;
  LockCertificate c2 = classify_locked(s2.A, s2.B, 10);
  CHECK(c2.verdict == Verdict::Unlocked);  // step <= 2: verdict is final
  CHECK(c2.action_step2);

  Big7 b7;
  LockCertificate c7 = classify_locked(b7.A, b7.B, 6);
  CHECK(c7.verdict == Verdict::UnlockedUpTo);
  CHECK(c7.generator_step2);
  CHECK(!c7.action_step2);
  CHECK(c7.scan_bound == 6);
}

TEST_CASE("verdict is invariant under integral conjugation") {
  // conjugating both generators by U in GL(d,Z) must not change the verdict
  auto conj = [](const UniMat& m, const IMat& u) {
    return make_unimat(mul(mul(u, m.entries), inverse_unimodular(u)));
  };
  IMat u = elems(3, {{1, 2}, {3, 1}});
  CHECK(determinant(u) == 1);
  TwoFactors3 ex;
  LockCertificate c = classify_locked(conj(ex.A, u), conj(ex.B, u), 10);
  CHECK(c.verdict == Verdict::Locked);
  CHECK(c.kind == LockKind::IdentityFactor);
  Jordan3 j3;
  LockCertificate cj = classify_locked(conj(j3.A, u), conj(j3.B, u), 10);
  CHECK(cj.verdict == Verdict::Locked);
  CHECK(cj.kind == LockKind::ParabolicFactor);
}

TEST_CASE("diophantine certificate with golden-ratio data") {
  Shear2 ex;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  ActionPair p = make_action_pair(ex.A, ex.B, std::vector<double>{g, 0.25},
                                  std::vector<double>{0.0, g});
  const double tau = 1.2;
  const long long N = 12;
  DioCertificate c = diophantine_certificate(p, tau, N);

  // independent oracle for the factor constant (d1 = 1, factor data (g, 0))
  double want_sdc = 1e300;
  for (long long k = -N; k <= N; ++k) {
    if (k == 0) continue;
    double v = frac_dist(k * g) * std::pow(std::abs((double)k), tau);
    want_sdc = std::min(want_sdc, v);
  }
  CHECK(c.gamma_sdc == doctest::Approx(want_sdc).epsilon(1e-12));

  // independent oracle for the resonance constant: every resonance here is
  // m = (m1, m2), m2 != 0, pair (0,1), divisor 1 - e(m2 * g)
  double want_res = 1e300;
  long long count = 0;
  for (long long m1 = -N; m1 <= N; ++m1)
    for (long long m2 = -N; m2 <= N; ++m2) {
      if (m2 == 0 || m1 * m1 + m2 * m2 > N * N) continue;
      ++count;
      double nm = std::sqrt(double(m1 * m1 + m2 * m2));
      want_res =
          std::min(want_res, frac_dist(m2 * g) * std::pow(nm, tau));
    }
  CHECK(c.gamma_res == doctest::Approx(want_res).epsilon(1e-12));
  CHECK(c.resonances_scanned == count);
  CHECK(c.res_k == 0);
  CHECK(c.res_l == 1);
}

TEST_CASE("degenerate resonance is detected, exactly and in floats") {
  Shear2 ex;
  ActionPair p = make_action_pair(ex.A, ex.B, qv({Rat(1, 3), Rat(1, 5)}),
                                  qv({Rat(0), Rat(0)}));
  CHECK_THROWS_AS(diophantine_certificate(p, 1.2, 4), DegenerateResonance);
  ActionPair pf = make_action_pair(ex.A, ex.B, std::vector<double>{0.3, 0.2},
                                   std::vector<double>{0.0, 0.0});
  CHECK_THROWS_AS(diophantine_certificate(pf, 1.2, 4), DegenerateResonance);
}
