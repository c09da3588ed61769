#include "parakam/resonance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>

namespace parakam {

namespace {

IVec ivec_of(const std::vector<long long>& v) {
  IVec r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = Int(v[i]);
  return r;
}

bool is_zero(const IVec& v) {
  return std::all_of(v.begin(), v.end(), [](const Int& x) { return x == 0; });
}

// Normalize a pair so that it is (1,0), (0,1) or has k > 0, gcd(k,|l|) = 1.
void normalize_pair(long long& k, long long& l) {
  long long g = std::gcd(std::abs(k), std::abs(l));
  if (g > 1) { k /= g; l /= g; }
  if (k < 0 || (k == 0 && l < 0)) { k = -k; l = -l; }
}

// Independent subset of integer vectors (rational row reduction).
std::vector<QVec> independent_rows(const std::vector<IVec>& vs, int dim) {
  std::vector<QVec> rows;
  for (const auto& v : vs) {
    QVec q(dim);
    for (int i = 0; i < dim; ++i) q[i] = Rat(v[i]);
    // reduce against accepted rows
    for (const auto& b : rows) {
      size_t p = 0;
      while (p < b.size() && b[p] == 0) ++p;
      if (p < b.size() && q[p] != 0) {
        Rat f = q[p] / b[p];
        for (size_t j = p; j < q.size(); ++j) q[j] -= f * b[j];
      }
    }
    bool nz = std::any_of(q.begin(), q.end(), [](const Rat& x) { return x != 0; });
    if (!nz) continue;
    // echelonize the new row to make later reductions one-pass
    size_t p = 0;
    while (q[p] == 0) ++p;
    Rat piv = q[p];
    for (size_t j = p; j < q.size(); ++j) q[j] /= piv;
    rows.push_back(std::move(q));
    std::sort(rows.begin(), rows.end(), [](const QVec& a, const QVec& b) {
      size_t pa = 0, pb = 0;
      while (pa < a.size() && a[pa] == 0) ++pa;
      while (pb < b.size() && b[pb] == 0) ++pb;
      return pa < pb;
    });
  }
  return rows;
}

// <x_perp, y> where x_perp is the component of x orthogonal to span(W).
// Exact: solve the Gram system over Q.
Rat perp_inner(const IVec& x, const IVec& y, const std::vector<IVec>& w_span,
               int dim) {
  std::vector<QVec> w = independent_rows(w_span, dim);
  int r = static_cast<int>(w.size());
  QVec xq(dim), yq(dim);
  for (int i = 0; i < dim; ++i) { xq[i] = Rat(x[i]); yq[i] = Rat(y[i]); }
  auto qdot = [dim](const QVec& a, const QVec& b) {
    Rat s = 0;
    for (int i = 0; i < dim; ++i) s += a[i] * b[i];
    return s;
  };
  if (r == 0) return qdot(xq, yq);
  // solve G c = (w_i . x), then x_perp . y = x.y - sum c_i (w_i . y)
  QMat aug(r, r + 1);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < r; ++j) aug.at(i, j) = qdot(w[i], w[j]);
    aug.at(i, r) = qdot(w[i], xq);
  }
  for (int c = 0; c < r; ++c) {
    int p = -1;
    for (int i = c; i < r; ++i)
      if (aug.at(i, c) != 0) { p = i; break; }
    if (p < 0) continue;  // cannot happen: Gram of independent rows
    for (int j = 0; j <= r; ++j) std::swap(aug.at(c, j), aug.at(p, j));
    Rat piv = aug.at(c, c);
    for (int j = c; j <= r; ++j) aug.at(c, j) /= piv;
    for (int i = 0; i < r; ++i) {
      if (i == c || aug.at(i, c) == 0) continue;
      Rat f = aug.at(i, c);
      for (int j = c; j <= r; ++j) aug.at(i, j) -= f * aug.at(c, j);
    }
  }
  Rat result = qdot(xq, yq);
  for (int i = 0; i < r; ++i) result -= aug.at(i, r) * qdot(w[i], yq);
  return result;
}

}  // namespace

int bhat_step(const UniMat& B, const IVec& m) {
  IVec v = m;
  for (int s = 1; s <= B.dim + 1; ++s) {
    v = matvec(B.dualnil, v);
    if (is_zero(v)) return s;
  }
  return B.dim + 1;  // unreachable for unipotent B
}

std::vector<IVec> step2_orbit_points(const UniMat& A, const IVec& m,
                                     long long k_min, long long k_max) {
  IVec u = matvec(A.dualnil, m);
  if (!is_zero(matvec(A.dualnil, u)))
    throw NotStep2("Abar-orbit of m is not affine in k");
  std::vector<IVec> pts;
  for (long long k = k_min; k <= k_max; ++k) {
    IVec p(m.size());
    for (size_t i = 0; i < m.size(); ++i) p[i] = m[i] + Int(k) * u[i];
    pts.push_back(std::move(p));
  }
  return pts;
}

OrbitGeometry orbit_geometry(const UniMat& A, const UniMat& B, const IVec& m) {
  if (is_zero(m)) throw ZeroMode("orbit_geometry of the zero mode");
  OrbitGeometry g;
  IVec u = matvec(A.dualnil, m);
  if (is_zero(u)) {
    g.lowest = m;
    g.k0 = 0;
    g.mn_side = MNSide::Fixed;
  } else {
    Int mu = dot(m, u);
    g.mn_side = mu > 0 ? MNSide::M : (mu < 0 ? MNSide::N : MNSide::M);
    if (is_zero(matvec(A.dualnil, u))) {
      // |m + k u|^2 = |m|^2 + 2k<m,u> + k^2 |u|^2: integer minimizer near
      // -<m,u>/|u|^2, ties broken toward the smaller shift.
      Int uu = norm2(u);
      Rat kstar = Rat(-mu) / Rat(uu);
      Int fl = numerator(kstar) / denominator(kstar);
      if (kstar < 0 && Rat(fl) != kstar) fl -= 1;  // true floor
      auto q = [&](const Int& k) { return norm2(m) + 2 * k * mu + k * k * uu; };
      Int kbest = q(fl) <= q(fl + 1) ? fl : fl + 1;
      g.k0 = kbest.convert_to<long long>();
      g.lowest.resize(m.size());
      for (size_t i = 0; i < m.size(); ++i) g.lowest[i] = m[i] + kbest * u[i];
    } else {
      // Orbit is not affine in k (step >= 3 along m): walk a window.
      const long long K = 64;
      IMat abar_inv = inverse_unimodular(A.dual);
      IVec best = m, fwd = m, bwd = m;
      Int best_n = norm2(m);
      long long best_k = 0;
      for (long long k = 1; k <= K; ++k) {
        fwd = matvec(A.dual, fwd);
        bwd = matvec(abar_inv, bwd);
        if (norm2(fwd) < best_n) { best_n = norm2(fwd); best = fwd; best_k = k; }
        if (norm2(bwd) < best_n) { best_n = norm2(bwd); best = bwd; best_k = -k; }
      }
      g.lowest = best;
      g.k0 = best_k;
    }
  }
  // Good drift direction in l: project m and Bhat m onto the orthogonal
  // complement of the controllable directions; an acute angle means the
  // forward l-orbit drifts away from the origin.
  IVec bm = matvec(B.dualnil, m);
  int s = bhat_step(B, m);
  if (!is_zero(bm)) {
    std::vector<IVec> span;
    if (s == 2) {
      if (!is_zero(u)) span.push_back(u);
    } else if (s >= 3) {
      IVec bj = bm;
      for (int j = 2; j <= s - 1; ++j) {
        bj = matvec(B.dualnil, bj);
        span.push_back(bj);
      }
      IVec abj = m;
      for (int j = 0; j <= s - 2; ++j) {
        span.push_back(matvec(A.dualnil, abj));
        abj = matvec(B.dualnil, abj);
      }
    }
    Rat inner = perp_inner(m, bm, span, A.dim);
    // degenerate if Bhat m is inside the span (projection vanishes)
    Rat bperp = perp_inner(bm, bm, span, A.dim);
    if (bperp == 0 || inner == 0)
      g.good_l_sign = LSign::Unknown;
    else
      g.good_l_sign = inner > 0 ? LSign::Plus : LSign::Minus;
  }
  return g;
}

ResonanceRecord classify_mode(const UniMat& A, const UniMat& B, const IVec& m) {
  if (is_zero(m)) throw ZeroMode("classify_mode of the zero mode");
  ResonanceRecord rec;
  rec.m = m;
  rec.s_of_m = bhat_step(B, m);
  rec.delta = 0.99 / rec.s_of_m;

  IVec u = matvec(A.dualnil, m);
  IVec v = matvec(B.dualnil, m);
  bool uz = is_zero(u), vz = is_zero(v);
  if (uz && vz) {
    rec.cls = ModeClass::C1;
  } else if (uz) {
    rec.cls = ModeClass::C2;
    rec.k = 1; rec.l = 0;
  } else if (vz) {
    rec.cls = ModeClass::C2;
    rec.k = 0; rec.l = 1;
  } else {
    // parallel test: all 2x2 minors of (u, v) vanish
    bool parallel = true;
    int d = A.dim;
    for (int i = 0; i < d && parallel; ++i)
      for (int j = i + 1; j < d && parallel; ++j)
        if (u[i] * v[j] != u[j] * v[i]) parallel = false;
    rec.cls = ModeClass::C3;
    if (parallel) {
      // primitive direction w of u, contents p, q with u = p w, v = q w
      Int g = 0;
      for (const Int& x : u) g = gcd(g, x);
      int nz = 0;
      while (u[nz] == 0) ++nz;
      if (u[nz] < 0) g = -g;
      Int p = g;  // u = p w with w = u/g primitive
      Int q = v[nz] / (u[nz] / g);
      // candidate primitive pair: k p + l q = 0
      Int gk = gcd(abs(p), abs(q));
      Int kk = q / gk, ll = -p / gk;
      long long k = kk.convert_to<long long>();
      long long l = ll.convert_to<long long>();
      normalize_pair(k, l);
      IMat pw = power_pair(A, B, k, l, /*use_dual=*/true);
      if (matvec(pw, m) == m) {
        rec.cls = ModeClass::C2;
        rec.k = k; rec.l = l;
      }
    }
  }
  OrbitGeometry g = orbit_geometry(A, B, m);
  rec.is_lowest_on_A_orbit = (g.k0 == 0);
  rec.mn_side = g.mn_side;
  rec.good_l_sign = g.good_l_sign;
  return rec;
}

std::vector<int> active_coords(const UniMat& A, const UniMat& B) {
  std::vector<int> act;
  for (int j = 0; j < A.dim; ++j) {
    bool nz = false;
    for (int i = 0; i < A.dim && !nz; ++i)
      if (A.dualnil.at(i, j) != 0 || B.dualnil.at(i, j) != 0) nz = true;
    if (nz) act.push_back(j);
  }
  return act;
}

namespace {

// int64 views of the dual nilparts (entries are small at d <= 8).
struct SmallNil {
  int d;
  std::vector<long long> ahat, bhat;  // row-major d*d
  explicit SmallNil(const UniMat& A, const UniMat& B) : d(A.dim) {
    ahat.resize(d * d);
    bhat.resize(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        ahat[i * d + j] = A.dualnil.at(i, j).convert_to<long long>();
        bhat[i * d + j] = B.dualnil.at(i, j).convert_to<long long>();
      }
  }
};

using LVec = std::vector<long long>;

bool lzero(const LVec& v) {
  return std::all_of(v.begin(), v.end(), [](long long x) { return x == 0; });
}

// Integer roots of a t^2 + b t + c = 0 within [-T, T].
void int_roots(long long a, long long b, long long c, long long T,
               std::vector<long long>& out) {
  out.clear();
  if (a == 0) {
    if (b == 0) return;  // c != 0: no roots
    if (c % b == 0) {
      long long t = -c / b;
      if (std::llabs(t) <= T) out.push_back(t);
    }
    return;
  }
  __int128 disc = (__int128)b * b - (__int128)4 * a * c;
  if (disc < 0) return;
  long long s = static_cast<long long>(std::sqrt(static_cast<double>(disc)));
  while ((__int128)s * s > disc) --s;
  while ((__int128)(s + 1) * (s + 1) <= disc) ++s;
  if ((__int128)s * s != disc) return;
  for (long long num : {-b + s, -b - s}) {
    if (num % (2 * a) == 0) {
      long long t = num / (2 * a);
      if (std::llabs(t) <= T) out.push_back(t);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

}  // namespace

void scan_resonances(const UniMat& A, const UniMat& B, long long N,
                     const std::function<void(const ResonanceRecord&)>& fn) {
  std::vector<int> act = active_coords(A, B);
  if (act.empty()) return;
  int d = A.dim;
  int da = static_cast<int>(act.size());
  SmallNil nil(A, B);

  // rows where either nilpart has a nonzero entry
  std::vector<int> rows;
  for (int i = 0; i < d; ++i) {
    bool nz = false;
    for (int j = 0; j < d && !nz; ++j)
      if (nil.ahat[i * d + j] != 0 || nil.bhat[i * d + j] != 0) nz = true;
    if (nz) rows.push_back(i);
  }
  std::vector<std::pair<int, int>> row_pairs;
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = i + 1; j < rows.size(); ++j)
      row_pairs.emplace_back(rows[i], rows[j]);

  int last = act[da - 1];
  LVec cu(d), cv(d);  // columns of the nilparts at the innermost coordinate
  for (int i = 0; i < d; ++i) {
    cu[i] = nil.ahat[i * d + last];
    cv[i] = nil.bhat[i * d + last];
  }

  std::map<std::pair<long long, long long>, IMat> power_cache;
  auto emit_candidate = [&](const LVec& mvals, const LVec& u, const LVec& v) {
    if (lzero(mvals)) return;
    bool uz = lzero(u), vz = lzero(v);
    if (uz && vz) return;  // C1
    long long k, l;
    if (uz) { k = 1; l = 0; }
    else if (vz) { k = 0; l = 1; }
    else {
      int nz = 0;
      while (u[nz] == 0) ++nz;
      long long g = 0;
      for (long long x : u) g = std::gcd(g, std::llabs(x));
      if (u[nz] < 0) g = -g;
      if (v[nz] % (u[nz] / g) != 0) return;  // not an integer multiple
      long long p = g;
      long long q = v[nz] / (u[nz] / g);
      // consistency across coordinates (u = p w, v = q w with w = u/g)
      for (int i = 0; i < (int)u.size(); ++i)
        if ((__int128)v[i] * p != (__int128)u[i] * q) return;
      long long gk = std::gcd(std::llabs(p), std::llabs(q));
      k = q / gk;
      l = -p / gk;
      normalize_pair(k, l);
      auto key = std::make_pair(k, l);
      auto it = power_cache.find(key);
      if (it == power_cache.end())
        it = power_cache.emplace(key, power_pair(A, B, k, l, true)).first;
      IVec m = ivec_of(mvals);
      if (matvec(it->second, m) != m) return;  // necessary but not sufficient
    }
    fn(classify_mode(A, B, ivec_of(mvals)));
  };

  // enumerate prefix coordinates act[0..da-2], sweep the innermost line
  LVec mvals(d, 0);
  std::vector<long long> roots;
  auto sweep_line = [&]() {
    long long acc = 0;
    for (int i = 0; i < da - 1; ++i) acc += mvals[act[i]] * mvals[act[i]];
    long long T = static_cast<long long>(std::sqrt(
        std::max<double>(0.0, static_cast<double>(N * N - acc))));
    while (T * T > N * N - acc) --T;
    // u0, v0 at t = 0
    LVec u0(d, 0), v0(d, 0);
    for (int i : rows)
      for (int jj = 0; jj < da - 1; ++jj) {
        int j = act[jj];
        u0[i] += nil.ahat[i * d + j] * mvals[j];
        v0[i] += nil.bhat[i * d + j] * mvals[j];
      }
    // minors: (u0+tcu)_i (v0+tcv)_j - (u0+tcu)_j (v0+tcv)_i
    bool all_zero = true;
    long long fa = 0, fb = 0, fc = 0;
    for (auto [i, j] : row_pairs) {
      long long a2 = cu[i] * cv[j] - cu[j] * cv[i];
      long long b1 = u0[i] * cv[j] + cu[i] * v0[j] - u0[j] * cv[i] - cu[j] * v0[i];
      long long c0 = u0[i] * v0[j] - u0[j] * v0[i];
      if (a2 != 0 || b1 != 0 || c0 != 0) {
        if (all_zero) { fa = a2; fb = b1; fc = c0; }
        all_zero = false;
      }
    }
    LVec u(d), v(d);
    auto at_t = [&](long long t) {
      mvals[last] = t;
      for (int i = 0; i < d; ++i) {
        u[i] = u0[i] + t * cu[i];
        v[i] = v0[i] + t * cv[i];
      }
      // verify every minor (roots came from just one)
      for (auto [i, j] : row_pairs)
        if ((__int128)u[i] * v[j] != (__int128)u[j] * v[i]) return;
      emit_candidate(mvals, u, v);
    };
    if (all_zero) {
      for (long long t = -T; t <= T; ++t) at_t(t);
    } else {
      int_roots(fa, fb, fc, T, roots);
      for (long long t : roots) at_t(t);
    }
    mvals[last] = 0;
  };

  std::function<void(int, long long)> rec = [&](int idx, long long acc) {
    if (idx == da - 1) {
      sweep_line();
      return;
    }
    int j = act[idx];
    long long T = static_cast<long long>(std::sqrt(
        std::max<double>(0.0, static_cast<double>(N * N - acc))));
    while (T * T > N * N - acc) --T;
    for (long long w = -T; w <= T; ++w) {
      mvals[j] = w;
      rec(idx + 1, acc + w * w);
    }
    mvals[j] = 0;
  };
  rec(0, 0);
}

PairSet resonance_pairs_up_to(const UniMat& A, const UniMat& B, long long N) {
  PairSet ps;
  ps.pairs = {{1, 0}, {0, 1}};
  // best constant tracking: minimize |m|^2 / (|k|+|l|)^2 exactly
  long long best_num = 0, best_den = 1;
  scan_resonances(A, B, N, [&](const ResonanceRecord& r) {
    auto pr = std::make_pair(r.k, r.l);
    if (std::find(ps.pairs.begin(), ps.pairs.end(), pr) == ps.pairs.end())
      ps.pairs.push_back(pr);
    long long m2 = norm2(r.m).convert_to<long long>();
    long long s = std::llabs(r.k) + std::llabs(r.l);
    if (!ps.c_fit_valid || (__int128)m2 * best_den < (__int128)best_num * s * s) {
      best_num = m2;
      best_den = s * s;
      ps.c_fit_valid = true;
      ps.c_witness = r.m;
      ps.c_wk = r.k;
      ps.c_wl = r.l;
    }
  });
  if (ps.c_fit_valid)
    ps.c_fit = std::sqrt(static_cast<double>(best_num) /
                         static_cast<double>(best_den));
  std::sort(ps.pairs.begin(), ps.pairs.end());
  return ps;
}

}  // namespace parakam
