// Affine actions <a,b> on the torus: commutation space, translation parts,
// maximal translation factor, the locked/unlocked dichotomy and empirical
// Diophantine certificates.
//
// An action is a pair a = A + alpha, b = B + beta of commuting affine maps
// with unipotent linear parts.  Commutation of the affine maps constrains
// (alpha, beta) to the linear space V = {(alpha,beta): (A-Id)beta =
// (B-Id)alpha}.  The action is "locked" when every compatible choice of
// translations leaves a rank-one factor that is identity or genuinely
// parabolic -- the obstruction to KAM rigidity; otherwise it is unlocked
// and rigidity holds for Diophantine translation data.

#pragma once

#include "parakam/intlat.hpp"
#include "parakam/resonance.hpp"

#include <optional>
#include <string>

namespace parakam {

struct DegenerateResonance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ActionPair {
  UniMat A, B;
  bool exact = false;               // rational translations available
  QVec alpha_q, beta_q;             // filled when exact
  std::vector<double> alpha, beta;  // always filled
  RatSubspace tspace;               // V in Q^{2d}, as (alpha, beta) pairs
  // maximal translation factor: P rows = primitive basis of
  // fix(A^T) /\ fix(B^T); the factor action is a pair of translations.
  int d1 = 0;
  IMat P;
  std::vector<double> alpha1, beta1;
  QVec alpha1_q, beta1_q;
  IVec lift_repair_alpha, lift_repair_beta;  // integer corrections applied
};

// Exact solution space of (A-Id)beta = (B-Id)alpha in Q^{2d}.
RatSubspace commutation_space(const UniMat& A, const UniMat& B);

ActionPair make_action_pair(const UniMat& A, const UniMat& B,
                            std::vector<double> alpha,
                            std::vector<double> beta);
ActionPair make_action_pair(const UniMat& A, const UniMat& B, QVec alpha,
                            QVec beta);

// alpha_{k,l} = a^k b^l - A^k B^l, exactly linear in (alpha, beta):
// alpha_{k,l} = P alpha + Q beta with integer matrices P, Q.
std::pair<IMat, IMat> translation_matrices(const UniMat& A, const UniMat& B,
                                           long long k, long long l);
std::vector<double> translation_part(const ActionPair& pair, long long k,
                                     long long l);
QVec translation_part_q(const ActionPair& pair, long long k, long long l);

enum class Verdict { Locked, Unlocked, UnlockedUpTo };
enum class LockKind { None, IdentityFactor, ParabolicFactor };

struct LockCertificate {
  Verdict verdict = Verdict::Unlocked;
  LockKind kind = LockKind::None;
  IVec witness_k;                 // IdentityFactor: common fixed vector
  IVec witness_m;                 // ParabolicFactor: resonant mode
  long long pair_k = 0, pair_l = 0;
  long long scan_bound = 0;
  bool generator_step2 = false;   // at least one generator has step <= 2
  bool action_step2 = false;      // whole action is step <= 2 (verdict final)
  std::string evidence;
};

LockCertificate classify_locked(const UniMat& A, const UniMat& B,
                                long long scan_bound);

struct DioCertificate {
  double tau = 0;
  long long scan_bound = 0;
  // SDC over the translation factor: min over 0 < |k| <= N of
  // max(|1-e(k,alpha1)|, |1-e(k,beta1)|) |k|^tau.  +inf when d1 = 0.
  double gamma_sdc = 0;
  IVec sdc_witness;
  // resonance divisors: min over resonances |m| <= N of
  // |1 - e(m, alpha_{k,l})| |m|^tau.  +inf when no resonance scanned.
  double gamma_res = 0;
  IVec res_witness;
  long long res_k = 0, res_l = 0;
  long long resonances_scanned = 0;
};

// Throws DegenerateResonance when a scanned resonance has
// e(m, alpha_{k,l}) = 1 (exactly for rational translations, to 1e-14 else).
DioCertificate diophantine_certificate(const ActionPair& pair, double tau,
                                       long long scan_bound);

}  // namespace parakam
