// The linearized conjugacy solver: per-mode solutions of the twisted
// cohomological equations along dual orbits, obstruction sums at lowest
// points, the commutator operator, and the scalar/vector assembly over a
// truncation ball with error fields and averages.
//
// Conventions.  lambda_n = e(n, alpha) and lambda_m^(k) is the ordered
// product over the Abar-orbit: prod_{j=1..k} lambda_{Abar^j m} for k >= 0
// (empty product = 1), prod_{j=k+1..0} lambda_{Abar^j m}^{-1} for k < 0.
// With these weights the one-sided sums
//   h_m = -sum_{k>=0} f_{Abar^k m} lambda_m^(k)   (lowest point behind m)
//   h_m = +sum_{k<=-1} f_{Abar^k m} lambda_m^(k)  (lowest point ahead, or at m)
// telescope to del_{1,0} h = f everywhere except at the lowest point m-bar
// of each orbit, where the defect is exactly -Sigma^A_{m-bar}(f): the error
// field of the scheme is supported on lowest points only.

#pragma once

#include "parakam/fourier.hpp"

namespace parakam {

struct BothDivisorsSmall : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotStep2Orbit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BasisFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SumDirection { PlusA, MinusA, FullA, PlusB, MinusB };

struct ObstructionSum {
  Mode m{};
  SumDirection direction = SumDirection::FullA;
  std::complex<double> value = 0.0;
  long long terms_used = 0;
  // exact for truncated data: the orbit leaves the support ball
  double truncated_tail_bound = 0.0;
};

enum class OrbitGenerator { A, B };

// lambda_m^(k) for k in [k_min, k_max], per the convention above; the
// generator selects (Abar, alpha) or (Bbar, beta)
std::map<long long, std::complex<double>> multipliers(
    const ActionPair& pair, const IVec& m, long long k_min, long long k_max,
    OrbitGenerator gen = OrbitGenerator::A);

enum class C1Branch { F, G };

// Moser dichotomy for degenerate modes (Ahat m = Bhat m = 0): divide by
// whichever of e(m,alpha)-1, e(m,beta)-1 clears the threshold gamma |m|^-tau
std::complex<double> solve_mode_C1(std::complex<double> f_m,
                                   std::complex<double> g_m, const IVec& m,
                                   const ActionPair& pair, double gamma,
                                   double tau, C1Branch* branch = nullptr);

// one-sided orbit sum for m with a step-2 orbit of the chosen generator;
// direction decided by the position of the lowest point (see header note)
std::complex<double> solve_mode_orbit(const FourierField& f, const IVec& m,
                                      const ActionPair& pair,
                                      OrbitGenerator gen = OrbitGenerator::A,
                                      long long* terms = nullptr);

// full two-sided sum Sigma^A_m(f) at a lowest point m-bar
ObstructionSum obstruction_full(const FourierField& f, const IVec& m_bar,
                                const ActionPair& pair);

using PairKey = std::pair<long long, long long>;
using FieldMap = std::map<PairKey, FourierField>;

// scalar Lp((k,l),(s,t)) = del_{k,l} p(s,t) - del_{s,t} p(k,l)
FourierField commutator_L(const FieldMap& p, PairKey kl, PairKey st,
                          const ActionPair& pair);
// vector (Lp)((k,l),(s,t)) = D_{s,t} p(k,l) - D_{k,l} p(s,t)
FourierField commutator_L_vec(const FieldMap& p, PairKey kl, PairKey st,
                              const ActionPair& pair);

struct SolveReport {
  FourierField h;
  FieldMap p_tilde;                 // p(s,t) - del_{s,t} h - V(s,t)
  std::map<PairKey, CVec> V;        // stripped averages
  long long count_c1_f = 0, count_c1_g = 0;
  long long count_c2_prime = 0, count_c2_dprime = 0, count_c3 = 0;
  std::vector<double> r_list;
  std::map<double, double> h_norm;                    // r -> |h|_r
  std::map<PairKey, std::map<double, double>> p_tilde_norm;
  double sigma = 0.0;           // tau + d + 2 (derivative loss proxy)
  double tameness_ratio = 0.0;  // |h|_0 / max_(s,t) |p(s,t)|_sigma
};

// assemble h over all modes 0 < |m| <= N from the input map p (which must
// contain the generator data p(1,0), p(0,1)); compute p_tilde and V for
// every (s,t) key of p
SolveReport solve_scalar(const FieldMap& p, const ActionPair& pair,
                         long long n, double gamma, double tau,
                         std::vector<double> r_list = {0.0, 1.0});

// vector version: conjugate values into the common triangular flag basis,
// solve rows bottom-up (each row sees the already-solved lower rows as an
// exact correction to its data), transform back
SolveReport solve_vector(const FieldMap& p, const ActionPair& pair,
                         long long n, double gamma, double tau,
                         std::vector<double> r_list = {0.0, 1.0});

}  // namespace parakam
