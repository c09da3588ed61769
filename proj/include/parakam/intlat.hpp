// Exact integer/rational linear algebra for unipotent pairs.
//
// Everything that feeds a classification decision (locked/unlocked,
// resonance classes, flags) runs through this module so that no boolean
// answer ever depends on floating-point rounding.  Matrices are small
// (d <= 8) and dense; entries are arbitrary-precision integers or
// rationals (Boost.Multiprecision), so naive O(d^3) algorithms are the
// right tool and determinism is free.

#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace parakam {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;
using IVec = std::vector<Int>;
using QVec = std::vector<Rat>;

struct NotUnipotent : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NotUnimodular : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonCommuting : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense integer matrix, row-major.
struct IMat {
  int rows = 0, cols = 0;
  std::vector<Int> a;  // rows*cols entries

  IMat() = default;
  IMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}

  Int& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Int& at(int i, int j) const {
    return a[static_cast<size_t>(i) * cols + j];
  }

  static IMat identity(int n);
  bool is_zero() const;
  bool operator==(const IMat& o) const = default;
};

// Dense rational matrix, row-major.
struct QMat {
  int rows = 0, cols = 0;
  std::vector<Rat> a;

  QMat() = default;
  QMat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c) {}
  explicit QMat(const IMat& m);

  Rat& at(int i, int j) { return a[static_cast<size_t>(i) * cols + j]; }
  const Rat& at(int i, int j) const {
    return a[static_cast<size_t>(i) * cols + j];
  }
};

IMat mul(const IMat& x, const IMat& y);
IMat add(const IMat& x, const IMat& y);
IMat sub(const IMat& x, const IMat& y);
IMat transpose(const IMat& x);
IVec matvec(const IMat& x, const IVec& v);
Int dot(const IVec& x, const IVec& y);
Int norm2(const IVec& v);  // exact squared Euclidean norm

// Inverse of a unimodular integer matrix (exact; throws NotUnimodular).
IMat inverse_unimodular(const IMat& m);
// Determinant via fraction-free elimination.
Int determinant(const IMat& m);

// A rational subspace of Q^n carried with a primitive integer basis of its
// saturation (Q-span intersected with Z^n).
struct RatSubspace {
  int ambient_dim = 0;
  std::vector<QVec> basis;            // row-reduced rational basis
  std::vector<IVec> saturated_zbasis; // primitive Z-basis of the saturation

  int rank() const { return static_cast<int>(basis.size()); }
  // Exact membership test for a rational vector.
  bool contains(const QVec& v) const;
  bool contains(const IVec& v) const;
};

// Exact right kernel over Q with HNF-saturated integer basis.
RatSubspace kernel_q(const QMat& m);
RatSubspace kernel_q(const IMat& m);

// A matrix whose right kernel is exactly the given subspace (rows are a
// basis of the annihilator under the standard pairing).
QMat annihilator(const RatSubspace& s);

// Unipotent integer matrix with its cached step, dual and nilpotent parts.
struct UniMat {
  int dim = 0;
  IMat entries;   // A
  IMat nilpart;   // A - Id
  IMat dual;      // (A^T)^{-1}
  IMat dualnil;   // dual - Id
  int step = 1;   // nilpart^step = 0, nilpart^(step-1) != 0
};

UniMat make_unimat(const IMat& entries);

// A^k B^l (or the dual powers) exactly, k,l of either sign.
// Requires AB = BA; throws NonCommuting otherwise.
IMat power_pair(const UniMat& A, const UniMat& B, long long k, long long l,
                bool use_dual = false);

bool commutes(const UniMat& A, const UniMat& B);

// Increasing flag 0 = V_0 < V_1 < ... < V_t = Q^d with
// nil(A) V_i <= V_{i-1} and nil(B) V_i <= V_{i-1}, plus an integer
// unimodular change of basis U such that U A U^{-1} and U B U^{-1} are
// upper triangular with unit diagonal.
struct CommonFlag {
  std::vector<RatSubspace> spaces;  // V_1 .. V_t (V_t full)
  IMat U;      // change of basis (acts on column vectors)
  IMat U_inv;
};

CommonFlag common_flag(const UniMat& A, const UniMat& B);

}  // namespace parakam
