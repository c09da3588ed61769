// Truncated lattice Fourier fields on the torus: weighted norms, affine
// composition, coboundary and twisted-difference operators, truncation,
// grid transforms (FFT) and nonlinear composition of perturbed affine maps.
//
// A field is a sparse set of coefficients f_m (scalar or d-vector valued)
// on lattice modes m with |m| <= trunc_N, representing
// f(x) = sum_m f_m e(m, x) with e(m, x) = exp(2 pi i (m, x)).

#pragma once

#include "parakam/action.hpp"

#include <array>
#include <complex>
#include <map>
#include <vector>

namespace parakam {

struct AliasRisk : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConditioningLoss : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoContraction : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr int kMaxDim = 8;
using Mode = std::array<int32_t, kMaxDim>;  // entries past dim are zero
using CVec = std::vector<std::complex<double>>;

Mode make_mode(std::initializer_list<int> xs);
Mode mode_of(const IVec& m);
double mode_abs(const Mode& m);        // Euclidean |m|
long long mode_norm2(const Mode& m);   // |m|^2 exactly
Mode mode_neg(const Mode& m);
// n with (n, x) = (m, L x), i.e. n = L^T m (exact; L integral)
Mode mode_pushforward(const Mode& m, const IMat& l);

struct FourierField {
  int d = 0;
  int width = 1;  // 1 = scalar, d = vector field
  long long trunc_N = 0;
  bool is_real = true;
  std::map<Mode, CVec> coeffs;

  static FourierField zero(int d, int width, long long n, bool real = true);
  const CVec* find(const Mode& m) const;  // nullptr when absent
  CVec at(const Mode& m) const;           // zero vector when absent
  // insert/accumulate; silently drops exact zeros on set
  void set(const Mode& m, CVec v);
  void accumulate(const Mode& m, const CVec& v);
  CVec average() const { return at(Mode{}); }
  void clear_average() { coeffs.erase(Mode{}); }
  void prune(double eps = 0.0);  // drop coefficients with |f_m| <= eps
};

FourierField add(const FourierField& a, const FourierField& b);
FourierField sub(const FourierField& a, const FourierField& b);
FourierField scale(const FourierField& a, std::complex<double> c);

// sup_m |f_m| (1+|m|)^r, with |f_m| the Euclidean norm of the value
double norm_r(const FourierField& f, double r);

// h o (L x + t).  The output keeps every image mode (trunc_N grows to
// cover them); *leakage, when given, receives the sup-norm of the part
// pushed beyond the input ball, which the caller budgets into R_N.
FourierField compose_affine(const FourierField& h, const IMat& l,
                            const std::vector<double>& t,
                            double* leakage = nullptr);

// (del_{k,l} h)_m = h_{Abar^k Bbar^l m} e(Abar^k Bbar^l m, alpha_{k,l}) - h_m
FourierField coboundary(const FourierField& h, const ActionPair& pair,
                        long long k, long long l);

// D_{s,t} h = h o (a^s b^t) - A^s B^t h for vector fields
FourierField twisted_diff_vec(const FourierField& h, const ActionPair& pair,
                              long long s, long long t);

FourierField truncate(const FourierField& f, long long n);
FourierField residue(const FourierField& f, long long n);

// pointwise value (real part; fields of interest are real)
std::vector<double> eval_at(const FourierField& f,
                            const std::vector<double>& x);

struct GridField {
  int d = 0;
  int width = 1;
  int m = 0;  // grid size per axis, M^d points
  // row-major over the grid, values interleaved: samples[idx*width + c]
  std::vector<double> samples;

  static GridField zero(int d, int width, int m);
  long long points() const;
  double* value(long long idx) { return samples.data() + idx * width; }
  const double* value(long long idx) const {
    return samples.data() + idx * width;
  }
};

// grid point coordinates (j_1/M, ..., j_d/M) of flat index idx
std::vector<double> grid_point(const GridField& g, long long idx);

std::vector<double> grid_average(const GridField& g);
double grid_max_abs(const GridField& g);
GridField grid_add(const GridField& a, const GridField& b);
GridField grid_sub(const GridField& a, const GridField& b);

// DFT synthesis f -> samples on (Z/M)^d; requires M >= 4 trunc_N
GridField synthesize(const FourierField& f, int m);
// DFT analysis; keeps modes |m| <= n (requires M >= 4n); coefficients
// below `floor_eps` are dropped
FourierField analyze(const GridField& g, long long n,
                     double floor_eps = 1e-16);

// A perturbed affine self-map of the torus, x -> L x + t + u(x),
// with the perturbation sampled on the grid.
struct AffineGridMap {
  IMat lin;
  std::vector<double> trans;
  GridField pert;  // vector field, width = d
};

// Perturbation part of F o G: x -> L_F u_G(x) + u_F(G(x)), with u_F
// evaluated off-grid by trigonometric interpolation.  Throws
// ConditioningLoss when the interpolation of u_F does not reproduce its
// own grid samples to 1e-9.
GridField compose_maps(const AffineGridMap& f, const AffineGridMap& g);

// h' with (Id + h) o (Id + h') = Id on the grid, by the fixed point
// iteration h' <- -h o (Id + h').  Requires a contraction within 50 sweeps.
GridField invert_near_identity(const GridField& h);

}  // namespace parakam
