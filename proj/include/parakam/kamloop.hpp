// The nonlinear iteration: conjugate a commuting perturbation (F, G) of an
// affine unipotent pair toward its affine model by near-identity changes of
// variables, with the superexponential error/truncation schedule
//   eps_n = eps^{(4/3)^n},   N_n = eps_n^{-1/(3(D+2))}.

#pragma once

#include "parakam/cohomo.hpp"

namespace parakam {

struct PerturbedAction {
  ActionPair pair;
  GridField f, g;  // vector perturbations of the two generators
  int grid_size = 0;
  double commuting_residual = 0.0;  // grid max of F o G - G o F
  bool volume_flag = false;
  bool zero_average_flag = false;
};

enum class KamStatus {
  Converged,
  MaxStepsReached,
  DivergenceDetected,  // Delta_0 grew on two consecutive steps after step 2
  NoProgress,          // stagnation without growth
  SmallnessViolated    // N_n^D Delta_{1,n} >= 1: step hypothesis broken
};

struct KamStepRecord {
  int n = 0;
  double eps_n = 0.0;
  double n_real = 0.0;  // the schedule value before integer rounding
  long long n_freq = 0;  // N_n actually used
  double delta0 = 0.0;   // perturbation size entering the step
  double delta_l = 0.0;
  double h_norm1 = 0.0;
  std::vector<double> c_adjust;  // average-restoring constant
  double ave_h_after = 0.0;      // |ave(H_n - Id)| after adjustment
};

struct KamReport {
  KamStatus status = KamStatus::MaxStepsReached;
  std::vector<KamStepRecord> steps;
  bool entry_delta0_ok = false;  // Delta_0 < eps (diagnostic, not enforced)
  bool entry_deltal_ok = false;  // Delta_l < 1/eps (diagnostic)
  GridField h_total;             // conjugacy minus identity, on the grid
  FourierField h_total_fourier;
  double residual_f = 0.0;  // |H o F - a o H|_0 on the grid
  double residual_g = 0.0;
  double final_delta0 = 0.0;
  double jacobian_mean = 0.0;  // mean of det(Id + DH) over the grid
};

struct KamConfig {
  double eps = 1e-3;      // schedule base
  double k_exp = 4.0 / 3.0;
  int cap_d = 0;          // D; 0 means the default d(d+1)
  double tau = 1.2;
  double gamma = 0.05;    // Diophantine threshold fed to the C1 branch
  int n_max = 12;
  double target = 1e-9;   // stop when Delta_0 falls below this
  int l_index = 0;        // l for the entry diagnostic; 0 means 8D+16
};

KamReport kam_run(const PerturbedAction& input, const KamConfig& config);

// h_n + C with C = -(grid average of h_n o H_prev); H_prev is the previous
// conjugacy minus identity.  Guarantees ave(H_n - Id) = 0.
GridField adjust_average(const GridField& h_n, const GridField& h_prev);

enum class FixtureKind { Conjugacy, StandardMap, IdentityFactor };

struct FixtureParams {
  double amplitude = 1e-3;
  int grid_size = 64;
  unsigned seed = 1;
};

// Conjugacy: F = H0^{-1} o a o H0 (and same for b) for a random smooth
// near-identity H0 -- exactly commuting, with the ground-truth conjugacy
// known.  StandardMap: (x1 + b1 + eps sin 2 pi (x1+x2), x2 + x1 + b2) with
// an unperturbed second generator.  IdentityFactor: the locked 3-d pair
// with the rank-one perturbation (0, 0, eps sin 2 pi x1) on the first
// generator.
PerturbedAction make_fixture(FixtureKind kind, const ActionPair& pair,
                             const FixtureParams& params);

// ground-truth h0 used by the Conjugacy fixture for a given seed
FourierField conjugacy_fixture_h0(const ActionPair& pair,
                                  const FixtureParams& params);

}  // namespace parakam
