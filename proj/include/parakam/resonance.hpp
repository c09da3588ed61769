// Classification of dual-lattice modes for a commuting unipotent pair.
//
// A nonzero mode m falls in one of three classes under the dual action
// (Abar = (A^T)^{-1}, Bbar = (B^T)^{-1}):
//   C1: fixed by both generators (Ahat m = Bhat m = 0),
//   C2: fixed by some nontrivial primitive power Abar^k Bbar^l (resonant),
//   C3: free orbit (non-resonant).
// The primitive candidate pair is forced by k*Ahat m + l*Bhat m = 0, which
// is necessary but (for step >= 3) not sufficient, so an exact power check
// is always performed.
//
// Orbit geometry (lowest point on the Abar-orbit, side of the switch, good
// drift direction in l) drives the one-sided orbit sums of the mode solver.

#pragma once

#include "parakam/intlat.hpp"

#include <functional>
#include <optional>

namespace parakam {

struct ZeroMode : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotStep2 : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ModeClass { C1, C2, C3 };
enum class MNSide { M, N, Fixed };
enum class LSign { Plus, Minus, Unknown };

struct ResonanceRecord {
  IVec m;
  ModeClass cls = ModeClass::C3;
  long long k = 0, l = 0;  // normalized resonance pair when cls == C2
  int s_of_m = 1;          // Bhat-step of m
  double delta = 0.99;     // 0.99 / s_of_m
  bool is_lowest_on_A_orbit = false;
  MNSide mn_side = MNSide::Fixed;
  LSign good_l_sign = LSign::Unknown;
};

struct OrbitGeometry {
  IVec lowest;       // lowest point on the Abar-orbit
  long long k0 = 0;  // Abar^{k0} m = lowest
  MNSide mn_side = MNSide::Fixed;
  LSign good_l_sign = LSign::Unknown;
};

ResonanceRecord classify_mode(const UniMat& A, const UniMat& B, const IVec& m);

OrbitGeometry orbit_geometry(const UniMat& A, const UniMat& B, const IVec& m);

// Bhat-step of m: smallest s >= 1 with Bhat^s m = 0 (d+1 if never, which
// cannot happen for unipotent B).
int bhat_step(const UniMat& B, const IVec& m);

// Exact Abar-orbit points m + k*Ahat m for k in [k_min, k_max].
// Requires the orbit to be affine in k (Ahat^2 m = 0), else NotStep2.
std::vector<IVec> step2_orbit_points(const UniMat& A, const IVec& m,
                                     long long k_min, long long k_max);

// Coordinates j such that column j of Ahat or Bhat is nonzero.  Modes
// supported outside these coordinates are invisible to the dual nilparts:
// class, resonance pair and orbit geometry of any m depend only on its
// active section, and every resonance class has a representative supported
// on the active coordinates of no larger norm.
std::vector<int> active_coords(const UniMat& A, const UniMat& B);

// Visit every resonant (class C2) mode in the active-coordinate sublattice
// with 0 < |m| <= N, exactly.  Uses a line-sweep: along each 1-d line of the
// ball the collinearity of (Ahat m, Bhat m) is a system of integer
// quadratics, so candidates are isolated roots except on degenerate lines,
// which are scanned pointwise.
void scan_resonances(const UniMat& A, const UniMat& B, long long N,
                     const std::function<void(const ResonanceRecord&)>& fn);

struct PairSet {
  std::vector<std::pair<long long, long long>> pairs;  // includes (1,0),(0,1)
  // empirical best constant in |m| >= C (|k|+|l|) over the scan
  double c_fit = 0.0;
  bool c_fit_valid = false;
  IVec c_witness;
  long long c_wk = 0, c_wl = 0;
};

PairSet resonance_pairs_up_to(const UniMat& A, const UniMat& B, long long N);

}  // namespace parakam
