#include "parakam/intlat.hpp"

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <numeric>

namespace parakam {

IMat IMat::identity(int n) {
  IMat r(n, n);
  for (int i = 0; i < n; ++i) r.at(i, i) = 1;
  return r;
}

bool IMat::is_zero() const {
  for (const auto& x : a)
    if (x != 0) return false;
  return true;
}

QMat::QMat(const IMat& m) : rows(m.rows), cols(m.cols), a(m.a.size()) {
  for (size_t i = 0; i < m.a.size(); ++i) a[i] = Rat(m.a[i]);
}

IMat mul(const IMat& x, const IMat& y) {
  IMat r(x.rows, y.cols);
  for (int i = 0; i < x.rows; ++i)
    for (int k = 0; k < x.cols; ++k) {
      const Int& v = x.at(i, k);
      if (v == 0) continue;
      for (int j = 0; j < y.cols; ++j) r.at(i, j) += v * y.at(k, j);
    }
  return r;
}

IMat add(const IMat& x, const IMat& y) {
  IMat r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] += y.a[i];
  return r;
}

IMat sub(const IMat& x, const IMat& y) {
  IMat r = x;
  for (size_t i = 0; i < r.a.size(); ++i) r.a[i] -= y.a[i];
  return r;
}

IMat transpose(const IMat& x) {
  IMat r(x.cols, x.rows);
  for (int i = 0; i < x.rows; ++i)
    for (int j = 0; j < x.cols; ++j) r.at(j, i) = x.at(i, j);
  return r;
}

IVec matvec(const IMat& x, const IVec& v) {
  IVec r(static_cast<size_t>(x.rows));
  for (int i = 0; i < x.rows; ++i) {
    Int s = 0;
    for (int j = 0; j < x.cols; ++j)
      if (x.at(i, j) != 0) s += x.at(i, j) * v[j];
    r[i] = s;
  }
  return r;
}

Int dot(const IVec& x, const IVec& y) {
  Int s = 0;
  for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

Int norm2(const IVec& v) { return dot(v, v); }

Int determinant(const IMat& m) {
  // Bareiss fraction-free elimination.
  IMat w = m;
  int n = m.rows;
  Int prev = 1;
  Int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (w.at(k, k) == 0) {
      int p = -1;
      for (int i = k + 1; i < n; ++i)
        if (w.at(i, k) != 0) { p = i; break; }
      if (p < 0) return 0;
      for (int j = 0; j < n; ++j) std::swap(w.at(k, j), w.at(p, j));
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i)
      for (int j = k + 1; j < n; ++j) {
        w.at(i, j) = (w.at(i, j) * w.at(k, k) - w.at(i, k) * w.at(k, j)) / prev;
      }
    prev = w.at(k, k);
  }
  return sign * w.at(n - 1, n - 1);
}

IMat inverse_unimodular(const IMat& m) {
  // Gauss-Jordan over Q; entries of the result must come out integral.
  int n = m.rows;
  QMat w(n, 2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) w.at(i, j) = Rat(m.at(i, j));
    w.at(i, n + i) = 1;
  }
  for (int c = 0; c < n; ++c) {
    int p = -1;
    for (int i = c; i < n; ++i)
      if (w.at(i, c) != 0) { p = i; break; }
    if (p < 0) throw NotUnimodular("matrix is singular");
    if (p != c)
      for (int j = 0; j < 2 * n; ++j) std::swap(w.at(c, j), w.at(p, j));
    Rat piv = w.at(c, c);
    for (int j = 0; j < 2 * n; ++j) w.at(c, j) /= piv;
    for (int i = 0; i < n; ++i) {
      if (i == c || w.at(i, c) == 0) continue;
      Rat f = w.at(i, c);
      for (int j = 0; j < 2 * n; ++j) w.at(i, j) -= f * w.at(c, j);
    }
  }
  IMat r(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Rat& v = w.at(i, n + j);
      if (denominator(v) != 1)
        throw NotUnimodular("inverse is not integral (det != +-1)");
      r.at(i, j) = numerator(v);
    }
  return r;
}

bool RatSubspace::contains(const QVec& v) const {
  // Row-reduce v against the (already reduced) basis.
  QVec w = v;
  for (const auto& b : basis) {
    // leading pivot of b
    size_t p = 0;
    while (p < b.size() && b[p] == 0) ++p;
    if (p == b.size()) continue;
    if (w[p] != 0) {
      Rat f = w[p] / b[p];
      for (size_t j = p; j < w.size(); ++j) w[j] -= f * b[j];
    }
  }
  for (const auto& x : w)
    if (x != 0) return false;
  return true;
}

bool RatSubspace::contains(const IVec& v) const {
  QVec q(v.size());
  for (size_t i = 0; i < v.size(); ++i) q[i] = Rat(v[i]);
  return contains(q);
}

namespace {

// Row echelon form over Q (in place); returns pivot columns.
std::vector<int> row_reduce(std::vector<QVec>& rows, int cols) {
  std::vector<int> pivots;
  int r = 0;
  for (int c = 0; c < cols && r < static_cast<int>(rows.size()); ++c) {
    int p = -1;
    for (int i = r; i < static_cast<int>(rows.size()); ++i)
      if (rows[i][c] != 0) { p = i; break; }
    if (p < 0) continue;
    std::swap(rows[r], rows[p]);
    Rat piv = rows[r][c];
    for (int j = c; j < cols; ++j) rows[r][j] /= piv;
    for (int i = 0; i < static_cast<int>(rows.size()); ++i) {
      if (i == r || rows[i][c] == 0) continue;
      Rat f = rows[i][c];
      for (int j = c; j < cols; ++j) rows[i][j] -= f * rows[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  rows.resize(pivots.size(), QVec(cols));
  return pivots;
}

// Column-style Hermite reduction with transformation tracking:
// finds unimodular U (n x n) with M*U in column echelon form; the columns
// of U corresponding to zero columns of M*U form a saturated (primitive)
// Z-basis of ker_Z(M) = ker_Q(M) as a lattice.
void hnf_kernel(const IMat& m, std::vector<IVec>& kernel_basis) {
  int rows = m.rows, n = m.cols;
  IMat w = m;
  IMat u = IMat::identity(n);
  int lead = 0;  // next column to place a pivot in
  for (int r = 0; r < rows && lead < n; ++r) {
    // Euclidean-reduce columns lead..n-1 against each other on row r
    // until at most one nonzero remains (classic HNF column sweep).
    while (true) {
      int nz = -1, cnt = 0;
      Int best;
      for (int c = lead; c < n; ++c)
        if (w.at(r, c) != 0) {
          ++cnt;
          if (nz < 0 || abs(w.at(r, c)) < best) {
            nz = c;
            best = abs(w.at(r, c));
          }
        }
      if (cnt <= 1) {
        if (cnt == 1) {
          // move pivot column to position `lead`
          if (nz != lead)
            for (int i = 0; i < rows; ++i) std::swap(w.at(i, nz), w.at(i, lead));
          if (nz != lead)
            for (int i = 0; i < n; ++i) std::swap(u.at(i, nz), u.at(i, lead));
          ++lead;
        }
        break;
      }
      // subtract multiples of the smallest column from the others
      for (int c = lead; c < n; ++c) {
        if (c == nz || w.at(r, c) == 0) continue;
        Int q = w.at(r, c) / w.at(r, nz);  // truncated division is fine here
        if (q != 0) {
          for (int i = 0; i < rows; ++i) w.at(i, c) -= q * w.at(i, nz);
          for (int i = 0; i < n; ++i) u.at(i, c) -= q * u.at(i, nz);
        }
      }
    }
  }
  kernel_basis.clear();
  for (int c = lead; c < n; ++c) {
    IVec v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[i] = u.at(i, c);
    kernel_basis.push_back(std::move(v));
  }
}

IMat clear_denominators(const QMat& m) {
  IMat r(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    Int lcm = 1;
    for (int j = 0; j < m.cols; ++j) {
      Int den = denominator(m.at(i, j));
      lcm = lcm / gcd(lcm, den) * den;
    }
    for (int j = 0; j < m.cols; ++j) {
      const Rat& v = m.at(i, j);
      r.at(i, j) = numerator(v) * (lcm / denominator(v));
    }
  }
  return r;
}

}  // namespace

RatSubspace kernel_q(const IMat& m) {
  RatSubspace s;
  s.ambient_dim = m.cols;
  hnf_kernel(m, s.saturated_zbasis);
  for (const auto& v : s.saturated_zbasis) {
    QVec q(v.size());
    for (size_t i = 0; i < v.size(); ++i) q[i] = Rat(v[i]);
    s.basis.push_back(std::move(q));
  }
  row_reduce(s.basis, m.cols);
  return s;
}

RatSubspace kernel_q(const QMat& m) { return kernel_q(clear_denominators(m)); }

QMat annihilator(const RatSubspace& s) {
  // Rows y with y . v = 0 for all basis v: kernel of the basis matrix.
  int n = s.ambient_dim;
  IMat b(static_cast<int>(s.saturated_zbasis.size()), n);
  for (int i = 0; i < b.rows; ++i)
    for (int j = 0; j < n; ++j) b.at(i, j) = s.saturated_zbasis[i][j];
  RatSubspace k = kernel_q(b);
  QMat r(k.rank(), n);
  for (int i = 0; i < k.rank(); ++i)
    for (int j = 0; j < n; ++j) r.at(i, j) = k.basis[i][j];
  return r;
}

UniMat make_unimat(const IMat& entries) {
  if (entries.rows != entries.cols)
    throw NotUnipotent("matrix is not square");
  UniMat u;
  u.dim = entries.rows;
  u.entries = entries;
  Int det = determinant(entries);
  if (det != 1 && det != -1) throw NotUnimodular("determinant is not +-1");
  u.nilpart = sub(entries, IMat::identity(u.dim));
  // step: first power of the nilpart that vanishes
  IMat p = IMat::identity(u.dim);
  int step = 0;
  for (int s = 0; s <= u.dim; ++s) {
    if (p.is_zero()) { step = s; break; }
    if (s == u.dim) throw NotUnipotent("(A - Id)^d != 0");
    p = mul(p, u.nilpart);
    step = s + 1;
  }
  u.step = std::max(step, 1);
  u.dual = inverse_unimodular(transpose(entries));
  u.dualnil = sub(u.dual, IMat::identity(u.dim));
  return u;
}

bool commutes(const UniMat& A, const UniMat& B) {
  return mul(A.entries, B.entries) == mul(B.entries, A.entries);
}

IMat power_pair(const UniMat& A, const UniMat& B, long long k, long long l,
                bool use_dual) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  auto power = [](IMat base, long long e) {
    int n = base.rows;
    if (e < 0) {
      base = inverse_unimodular(base);
      e = -e;
    }
    IMat r = IMat::identity(n);
    while (e > 0) {
      if (e & 1) r = mul(r, base);
      base = mul(base, base);
      e >>= 1;
    }
    return r;
  };
  const IMat& a = use_dual ? A.dual : A.entries;
  const IMat& b = use_dual ? B.dual : B.entries;
  return mul(power(a, k), power(b, l));
}

namespace {

// Given a primitive k x n integer matrix X (saturated row span), return a
// unimodular n x n matrix whose first k rows are X.
IMat complete_primitive(const IMat& x) {
  int k = x.rows, n = x.cols;
  // Column HNF with tracking: X * U = [H | 0], H k x k.
  IMat w = x;
  IMat u = IMat::identity(n);
  int lead = 0;
  for (int r = 0; r < k && lead < n; ++r) {
    while (true) {
      int nz = -1, cnt = 0;
      Int best;
      for (int c = lead; c < n; ++c)
        if (w.at(r, c) != 0) {
          ++cnt;
          if (nz < 0 || abs(w.at(r, c)) < best) {
            nz = c;
            best = abs(w.at(r, c));
          }
        }
      if (cnt <= 1) {
        if (cnt == 1 && nz != lead) {
          for (int i = 0; i < k; ++i) std::swap(w.at(i, nz), w.at(i, lead));
          for (int i = 0; i < n; ++i) std::swap(u.at(i, nz), u.at(i, lead));
        }
        if (cnt == 1) ++lead;
        break;
      }
      for (int c = lead; c < n; ++c) {
        if (c == nz || w.at(r, c) == 0) continue;
        Int q = w.at(r, c) / w.at(r, nz);
        if (q != 0) {
          for (int i = 0; i < k; ++i) w.at(i, c) -= q * w.at(i, nz);
          for (int i = 0; i < n; ++i) u.at(i, c) -= q * u.at(i, nz);
        }
      }
    }
  }
  // W = [H | 0] with H = w[:, :k]; saturation makes H unimodular.
  IMat u_inv = inverse_unimodular(u);
  IMat top(n, n);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) top.at(i, j) = w.at(i, j);
  for (int i = k; i < n; ++i) top.at(i, i) = 1;
  return mul(top, u_inv);  // first k rows = [H|0] U^{-1} = X
}

}  // namespace

CommonFlag common_flag(const UniMat& A, const UniMat& B) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  int d = A.dim;
  CommonFlag flag;

  // V_1 = ker [nil(A); nil(B)], then V_{i+1} = preimage of V_i under both
  // nilparts, described by stacking annihilator(V_i) * nilpart.
  std::vector<RatSubspace>& spaces = flag.spaces;
  {
    IMat st(2 * d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        st.at(i, j) = A.nilpart.at(i, j);
        st.at(d + i, j) = B.nilpart.at(i, j);
      }
    spaces.push_back(kernel_q(st));
  }
  while (spaces.back().rank() < d) {
    QMat ann = annihilator(spaces.back());
    QMat an(ann.rows, d), bn(ann.rows, d);
    for (int i = 0; i < ann.rows; ++i)
      for (int j = 0; j < d; ++j) {
        Rat sa = 0, sb = 0;
        for (int t = 0; t < d; ++t) {
          sa += ann.at(i, t) * Rat(A.nilpart.at(t, j));
          sb += ann.at(i, t) * Rat(B.nilpart.at(t, j));
        }
        an.at(i, j) = sa;
        bn.at(i, j) = sb;
      }
    QMat st(2 * ann.rows, d);
    for (int i = 0; i < ann.rows; ++i)
      for (int j = 0; j < d; ++j) {
        st.at(i, j) = an.at(i, j);
        st.at(ann.rows + i, j) = bn.at(i, j);
      }
    RatSubspace next = kernel_q(st);
    if (next.rank() <= spaces.back().rank())
      throw NonCommuting("flag construction stalled (pair not simultaneously "
                         "triangularizable)");
    spaces.push_back(std::move(next));
  }

  // Adapted primitive basis, built bottom-up: rows of R always form a
  // primitive basis of V_i /\ Z^d, extended inside V_{i+1} by HNF completion.
  IMat rows_mat(spaces.front().rank(), d);
  for (int i = 0; i < rows_mat.rows; ++i)
    for (int j = 0; j < d; ++j)
      rows_mat.at(i, j) = spaces.front().saturated_zbasis[i][j];
  for (size_t lvl = 1; lvl < spaces.size(); ++lvl) {
    const auto& big = spaces[lvl].saturated_zbasis;
    int kb = static_cast<int>(big.size());
    IMat bmat(kb, d);
    for (int i = 0; i < kb; ++i)
      for (int j = 0; j < d; ++j) bmat.at(i, j) = big[i][j];
    // Express current rows in the big basis: solve X * bmat = rows (X integral
    // because the row lattice is contained in the big lattice).
    int kr = rows_mat.rows;
    IMat x(kr, kb);
    {
      QMat sys(kb, d);
      for (int i = 0; i < kb; ++i)
        for (int j = 0; j < d; ++j) sys.at(i, j) = Rat(bmat.at(i, j));
      for (int r = 0; r < kr; ++r) {
        // least-squares-free exact solve via row reduction of [bmat^T | row^T]
        QMat aug(d, kb + 1);
        for (int i = 0; i < d; ++i) {
          for (int j = 0; j < kb; ++j) aug.at(i, j) = Rat(bmat.at(j, i));
          aug.at(i, kb) = Rat(rows_mat.at(r, i));
        }
        // gaussian elimination
        int rr = 0;
        std::vector<int> piv(kb, -1);
        for (int c = 0; c < kb && rr < d; ++c) {
          int p = -1;
          for (int i = rr; i < d; ++i)
            if (aug.at(i, c) != 0) { p = i; break; }
          if (p < 0) continue;
          for (int j = 0; j <= kb; ++j) std::swap(aug.at(rr, j), aug.at(p, j));
          Rat pv = aug.at(rr, c);
          for (int j = c; j <= kb; ++j) aug.at(rr, j) /= pv;
          for (int i = 0; i < d; ++i) {
            if (i == rr || aug.at(i, c) == 0) continue;
            Rat f = aug.at(i, c);
            for (int j = c; j <= kb; ++j) aug.at(i, j) -= f * aug.at(rr, j);
          }
          piv[c] = rr;
          ++rr;
        }
        for (int c = 0; c < kb; ++c) {
          Rat val = piv[c] >= 0 ? aug.at(piv[c], kb) : Rat(0);
          if (denominator(val) != 1)
            throw NonCommuting("flag basis lift is not integral");
          x.at(r, c) = numerator(val);
        }
      }
    }
    IMat comp = complete_primitive(x);  // kb x kb, first kr rows = x
    IMat new_rows = mul(comp, bmat);
    rows_mat = std::move(new_rows);
  }

  // rows_mat rows v_1..v_d: nil maps each v_j into span of earlier rows.
  // As a column basis P = rows_mat^T, P^{-1} A P is upper unitriangular.
  IMat p = transpose(rows_mat);
  flag.U = inverse_unimodular(p);
  flag.U_inv = p;
  return flag;
}

}  // namespace parakam
