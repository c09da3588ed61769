// Empirical laboratory for the orbit-growth and double-sum bounds that
// power the non-resonant branch of the mode solver.
//
// The infinite double sums  sum_k sum_{l>=0} |Abar^k Bbar^l m|^{-r}  (and
// the l<0 side) are enumerated with certified tails: once the projection
// bound |Abar^k Bbar^l m| >= |m_perp + l (Bhat m)_perp| guarantees linear
// growth in |l|, and |u_l| >= 1 guarantees linear growth in |k|, the
// remaining tails are dominated by computable zeta-like series.  "There
// exists a constant" claims are probed as scale-stability of the ratio
// against the envelope |m|^{-eta r + 8}, never asserted as fixed bounds.

#pragma once

#include "parakam/action.hpp"
#include "parakam/resonance.hpp"

#include <stdexcept>
#include <vector>

namespace parakam {

struct NotLowest : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotC3 : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One probed double sum at a lowest-point non-resonant mode.
struct SumProbe {
  IVec m;
  double r = 0.0;
  double eta = 0.0;           // 0.99 / (step of the action)
  double sum_plus_l = 0.0;    // sum_k sum_{l>=0} |Abar^k Bbar^l m|^{-r}
  double sum_minus_l = 0.0;   // sum_k sum_{l<0}  |Abar^k Bbar^l m|^{-r}
  double tail_plus = 0.0;     // certified bound on the omitted l>=0 part
  double tail_minus = 0.0;    // certified bound on the omitted l<0 part
  double envelope = 0.0;      // |m|^{-eta r + 8}
  double ratio_best = 0.0;    // min(side sum + its tail) / envelope
  bool good_side_positive = true;        // side achieving the smaller sum
  bool good_side_matches_geometry = false;  // vs orbit_geometry's choice
  long long k_window = 0;    // largest |k| enumerated on any line
  long long l_window = 0;    // largest |l| enumerated on the slower side
};

// Empirical minima of the growth-lemma ratios plus exactness checks for
// the polynomial expansion of Abar^k Bbar^l m.
struct DriftReport {
  IVec m;
  int s_of_m = 1;            // Bhat-step of m
  double delta = 0.99;       // 0.99 / s_of_m
  bool expansion_exact = false;    // closed form == exact powers, 21x21 box
  double min_ratio_small_l = 0.0;  // min |v_{k,l}| / |m|^delta, |l|<=|m|^delta
  double min_ratio_drift_l = 0.0;  // min |v_{k,l}| / |l|, good-sign l
  double min_ratio_drift_k = 0.0;  // min |v_{k,l}| / |k|^delta, |k|>=xi|m|
  bool hA2_ok = false;       // Bhat^2 m != 0  implies  Ahat m != 0
  bool ab2_ok = false;       // Bhat^s m = 0  implies  Ahat Bhat^{s-1} m = 0
  bool good_l_positive = true;
};

// Closed-form orbit point: Abar^k Bbar^l m as the polynomial
// sum_j C(l,j) Bhat^j m + k sum_j C(l,j) Ahat Bhat^j m (exact integers;
// requires the A-generator to be step 2).
IVec orbit_point_closed_form(const UniMat& A, const UniMat& B, const IVec& m,
                             long long k, long long l);

// Both one-sided double sums with certified tails at a lowest-point C3
// mode.  Throws NotC3 / NotLowest on precondition failure and
// std::invalid_argument when r <= 8/eta (below the envelope's validity).
SumProbe probe_double_sum(const ActionPair& pair, const IVec& m, double r);

// Growth-lemma ratio scans and the exact expansion check at a C3 mode.
DriftReport probe_drift(const ActionPair& pair, const IVec& m);

// Random C3 lowest-point modes supported on the active coordinates with
// min_norm <= |m| <= max_norm.  Deterministic for a fixed seed.
std::vector<IVec> sample_c3_lowest(const ActionPair& pair, double min_norm,
                                   double max_norm, int count,
                                   unsigned seed = 1);

}  // namespace parakam
