#include "parakam/action.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace parakam {

namespace {

double frac_dist(double x) {
  // |1 - e^{2 pi i x}| = 2 |sin(pi x)|
  double f = x - std::round(x);
  return 2.0 * std::abs(std::sin(M_PI * f));
}

bool imat_zero(const IMat& m) { return m.is_zero(); }

std::vector<double> dvec_of(const QVec& q) {
  std::vector<double> r(q.size());
  for (size_t i = 0; i < q.size(); ++i)
    r[i] = numerator(q[i]).convert_to<double>() /
           denominator(q[i]).convert_to<double>();
  return r;
}

// Solve M s = r exactly over Q; returns empty optional if inconsistent.
std::optional<QVec> solve_q(const IMat& m, const QVec& rhs) {
  int rows = m.rows, cols = m.cols;
  QMat aug(rows, cols + 1);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) aug.at(i, j) = Rat(m.at(i, j));
    aug.at(i, cols) = rhs[i];
  }
  std::vector<int> pivot_row(cols, -1);
  int rr = 0;
  for (int c = 0; c < cols && rr < rows; ++c) {
    int p = -1;
    for (int i = rr; i < rows; ++i)
      if (aug.at(i, c) != 0) { p = i; break; }
    if (p < 0) continue;
    for (int j = 0; j <= cols; ++j) std::swap(aug.at(rr, j), aug.at(p, j));
    Rat piv = aug.at(rr, c);
    for (int j = c; j <= cols; ++j) aug.at(rr, j) /= piv;
    for (int i = 0; i < rows; ++i) {
      if (i == rr || aug.at(i, c) == 0) continue;
      Rat f = aug.at(i, c);
      for (int j = c; j <= cols; ++j) aug.at(i, j) -= f * aug.at(rr, j);
    }
    pivot_row[c] = rr;
    ++rr;
  }
  for (int i = rr; i < rows; ++i)
    if (aug.at(i, cols) != 0) return std::nullopt;
  QVec s(cols, Rat(0));
  for (int c = 0; c < cols; ++c)
    if (pivot_row[c] >= 0) s[c] = aug.at(pivot_row[c], cols);
  return s;
}

void compute_transfactor(ActionPair& p) {
  int d = p.A.dim;
  IMat st(2 * d, d);
  IMat ant = transpose(p.A.nilpart), bnt = transpose(p.B.nilpart);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      st.at(i, j) = ant.at(i, j);
      st.at(d + i, j) = bnt.at(i, j);
    }
  RatSubspace fixed = kernel_q(st);
  p.d1 = fixed.rank();
  p.P = IMat(p.d1, d);
  for (int i = 0; i < p.d1; ++i)
    for (int j = 0; j < d; ++j) p.P.at(i, j) = fixed.saturated_zbasis[i][j];
  p.alpha1.assign(p.d1, 0.0);
  p.beta1.assign(p.d1, 0.0);
  if (p.exact) {
    p.alpha1_q.assign(p.d1, Rat(0));
    p.beta1_q.assign(p.d1, Rat(0));
  }
  for (int i = 0; i < p.d1; ++i)
    for (int j = 0; j < d; ++j) {
      double c = p.P.at(i, j).convert_to<double>();
      p.alpha1[i] += c * p.alpha[j];
      p.beta1[i] += c * p.beta[j];
      if (p.exact) {
        p.alpha1_q[i] += Rat(p.P.at(i, j)) * p.alpha_q[j];
        p.beta1_q[i] += Rat(p.P.at(i, j)) * p.beta_q[j];
      }
    }
}

}  // namespace

RatSubspace commutation_space(const UniMat& A, const UniMat& B) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  int d = A.dim;
  // rows: -(B-Id) on the alpha block, (A-Id) on the beta block
  IMat m(d, 2 * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      m.at(i, j) = -B.nilpart.at(i, j);
      m.at(i, d + j) = A.nilpart.at(i, j);
    }
  return kernel_q(m);
}

ActionPair make_action_pair(const UniMat& A, const UniMat& B, QVec alpha,
                            QVec beta) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  int d = A.dim;
  ActionPair p;
  p.A = A;
  p.B = B;
  p.exact = true;
  p.lift_repair_alpha.assign(d, Int(0));
  p.lift_repair_beta.assign(d, Int(0));
  // defect (A-Id)beta - (B-Id)alpha must be an integer vector; repair the
  // lift of beta when it is a nonzero one.
  QVec defect(d, Rat(0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      defect[i] += Rat(A.nilpart.at(i, j)) * beta[j] -
                   Rat(B.nilpart.at(i, j)) * alpha[j];
  bool nonzero = false;
  for (int i = 0; i < d; ++i) {
    if (denominator(defect[i]) != 1)
      throw std::invalid_argument(
          "translations are not compatible with commutation");
    if (defect[i] != 0) nonzero = true;
  }
  if (nonzero) {
    auto s = solve_q(A.nilpart, defect);
    if (!s) throw std::invalid_argument("lift repair failed");
    for (int i = 0; i < d; ++i) {
      if (denominator((*s)[i]) != 1)
        throw std::invalid_argument("lift repair is not integral");
      Int si = numerator((*s)[i]);
      beta[i] -= Rat(si);
      p.lift_repair_beta[i] = si;
    }
  }
  p.alpha_q = alpha;
  p.beta_q = beta;
  p.alpha = dvec_of(alpha);
  p.beta = dvec_of(beta);
  p.tspace = commutation_space(A, B);
  compute_transfactor(p);
  return p;
}

ActionPair make_action_pair(const UniMat& A, const UniMat& B,
                            std::vector<double> alpha,
                            std::vector<double> beta) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  int d = A.dim;
  ActionPair p;
  p.A = A;
  p.B = B;
  p.exact = false;
  p.lift_repair_alpha.assign(d, Int(0));
  p.lift_repair_beta.assign(d, Int(0));
  std::vector<double> defect(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      defect[i] += A.nilpart.at(i, j).convert_to<double>() * beta[j] -
                   B.nilpart.at(i, j).convert_to<double>() * alpha[j];
  QVec defect_round(d);
  bool nonzero = false;
  for (int i = 0; i < d; ++i) {
    double r = std::round(defect[i]);
    if (std::abs(defect[i] - r) > 1e-12)
      throw std::invalid_argument(
          "translations are not compatible with commutation (defect " +
          std::to_string(defect[i]) + ")");
    defect_round[i] = Rat(Int(static_cast<long long>(r)));
    if (r != 0) nonzero = true;
  }
  if (nonzero) {
    auto s = solve_q(A.nilpart, defect_round);
    if (!s) throw std::invalid_argument("lift repair failed");
    for (int i = 0; i < d; ++i) {
      Int si = numerator((*s)[i]);
      beta[i] -= si.convert_to<double>();
      p.lift_repair_beta[i] = si;
    }
  }
  p.alpha = std::move(alpha);
  p.beta = std::move(beta);
  p.tspace = commutation_space(A, B);
  compute_transfactor(p);
  return p;
}

std::pair<IMat, IMat> translation_matrices(const UniMat& A, const UniMat& B,
                                           long long k, long long l) {
  int d = A.dim;
  IMat p(d, d), q(d, d);  // alpha_{k,l} = p alpha + q beta, start at (0,0)
  IMat id = IMat::identity(d);
  if (l >= 0) {
    for (long long i = 0; i < l; ++i) {
      p = mul(B.entries, p);
      q = add(mul(B.entries, q), id);
    }
  } else {
    IMat binv = inverse_unimodular(B.entries);
    for (long long i = 0; i < -l; ++i) {
      p = mul(binv, p);
      q = mul(binv, sub(q, id));
    }
  }
  if (k >= 0) {
    for (long long i = 0; i < k; ++i) {
      p = add(mul(A.entries, p), id);
      q = mul(A.entries, q);
    }
  } else {
    IMat ainv = inverse_unimodular(A.entries);
    for (long long i = 0; i < -k; ++i) {
      p = mul(ainv, sub(p, id));
      q = mul(ainv, q);
    }
  }
  return {p, q};
}

std::vector<double> translation_part(const ActionPair& pair, long long k,
                                     long long l) {
  auto [pm, qm] = translation_matrices(pair.A, pair.B, k, l);
  int d = pair.A.dim;
  std::vector<double> r(d, 0.0);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      r[i] += pm.at(i, j).convert_to<double>() * pair.alpha[j] +
              qm.at(i, j).convert_to<double>() * pair.beta[j];
  return r;
}

QVec translation_part_q(const ActionPair& pair, long long k, long long l) {
  if (!pair.exact)
    throw std::invalid_argument("exact translation part of a float action");
  auto [pm, qm] = translation_matrices(pair.A, pair.B, k, l);
  int d = pair.A.dim;
  QVec r(d, Rat(0));
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      r[i] += Rat(pm.at(i, j)) * pair.alpha_q[j] +
              Rat(qm.at(i, j)) * pair.beta_q[j];
  return r;
}

LockCertificate classify_locked(const UniMat& A, const UniMat& B,
                                long long scan_bound) {
  if (!commutes(A, B)) throw NonCommuting("AB != BA");
  int d = A.dim;
  LockCertificate cert;
  cert.scan_bound = scan_bound;
  cert.generator_step2 = (A.step <= 2 || B.step <= 2);
  cert.action_step2 = imat_zero(mul(A.nilpart, A.nilpart)) &&
                      imat_zero(mul(B.nilpart, B.nilpart)) &&
                      imat_zero(mul(A.nilpart, B.nilpart));

  RatSubspace v = commutation_space(A, B);
  // common fixed sublattice of A^T, B^T
  IMat st(2 * d, d);
  IMat ant = transpose(A.nilpart), bnt = transpose(B.nilpart);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      st.at(i, j) = ant.at(i, j);
      st.at(d + i, j) = bnt.at(i, j);
    }
  RatSubspace fixed = kernel_q(st);
  int d1 = fixed.rank();

  // (1) identity factor: kbar in the fixed space with (kbar,alpha) =
  // (kbar,beta) = 0 on all of V -- exact kernel in the coefficients.
  if (d1 > 0) {
    int nv = v.rank();
    IMat cons(2 * nv, d1);
    for (int r = 0; r < nv; ++r)
      for (int i = 0; i < d1; ++i) {
        Int sa = 0, sb = 0;
        for (int j = 0; j < d; ++j) {
          sa += fixed.saturated_zbasis[i][j] * v.saturated_zbasis[r][j];
          sb += fixed.saturated_zbasis[i][j] * v.saturated_zbasis[r][d + j];
        }
        cons.at(2 * r, i) = sa;
        cons.at(2 * r + 1, i) = sb;
      }
    RatSubspace kc = nv > 0 ? kernel_q(cons) : kernel_q(IMat(1, d1));
    if (kc.rank() > 0) {
      cert.verdict = Verdict::Locked;
      cert.kind = LockKind::IdentityFactor;
      cert.witness_k.assign(d, Int(0));
      for (int i = 0; i < d1; ++i)
        for (int j = 0; j < d; ++j)
          cert.witness_k[j] +=
              kc.saturated_zbasis[0][i] * fixed.saturated_zbasis[i][j];
      cert.evidence =
          "common fixed covector annihilates all compatible translations";
      return cert;
    }
  }

  if (cert.action_step2) {
    cert.verdict = Verdict::Unlocked;
    cert.evidence = "action is step <= 2: no identity factor implies unlocked";
    return cert;
  }

  // (3) parabolic-factor scan: collect the resonance pairs seen up to the
  // bound, then decide each pair exactly on the fixed lattice of the dual
  // power (witness = resonant mode whose functional vanishes on V).
  std::vector<std::pair<long long, long long>> pairs;
  scan_resonances(A, B, scan_bound, [&](const ResonanceRecord& r) {
    auto pr = std::make_pair(r.k, r.l);
    if (std::find(pairs.begin(), pairs.end(), pr) == pairs.end())
      pairs.push_back(pr);
  });

  // C1 space (modes fixed by both dual generators)
  IMat c1st(2 * d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      c1st.at(i, j) = A.dualnil.at(i, j);
      c1st.at(d + i, j) = B.dualnil.at(i, j);
    }
  RatSubspace c1space = kernel_q(c1st);

  for (auto [k, l] : pairs) {
    IMat pw = power_pair(A, B, k, l, /*use_dual=*/true);
    IMat fix_m = sub(pw, IMat::identity(d));
    RatSubspace lat = kernel_q(fix_m);
    int r = lat.rank();
    if (r == 0) continue;
    auto [pm, qm] = translation_matrices(A, B, k, l);
    int nv = v.rank();
    // constraints on lattice coefficients c: for every basis point of V,
    // (sum_j c_j b_j, pm alpha + qm beta) = 0
    IMat cons(std::max(nv, 1), r);
    for (int rv = 0; rv < nv; ++rv) {
      // w = pm*valpha + qm*vbeta (integer since basis is integral)
      IVec w(d, Int(0));
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          w[i] += pm.at(i, j) * v.saturated_zbasis[rv][j] +
                  qm.at(i, j) * v.saturated_zbasis[rv][d + j];
      for (int j = 0; j < r; ++j)
        cons.at(rv, j) = dot(lat.saturated_zbasis[j], w);
    }
    RatSubspace z = kernel_q(cons);
    for (int zi = 0; zi < z.rank(); ++zi) {
      IVec m(d, Int(0));
      for (int j = 0; j < r; ++j)
        for (int t = 0; t < d; ++t)
          m[t] += z.saturated_zbasis[zi][j] * lat.saturated_zbasis[j][t];
      if (!c1space.contains(m)) {
        cert.verdict = Verdict::Locked;
        cert.kind = LockKind::ParabolicFactor;
        cert.witness_m = m;
        cert.pair_k = k;
        cert.pair_l = l;
        std::ostringstream os;
        os << "resonant functional (m, alpha_{" << k << "," << l
           << "}) vanishes identically on the commutation space";
        cert.evidence = os.str();
        return cert;
      }
    }
  }

  cert.verdict = Verdict::UnlockedUpTo;
  cert.evidence = "no lock witness among resonance pairs seen up to the bound";
  return cert;
}

DioCertificate diophantine_certificate(const ActionPair& pair, double tau,
                                       long long scan_bound) {
  DioCertificate cert;
  cert.tau = tau;
  cert.scan_bound = scan_bound;
  const long long N = scan_bound;
  // SDC over the translation factor
  cert.gamma_sdc = std::numeric_limits<double>::infinity();
  if (pair.d1 > 0) {
    std::vector<long long> k(pair.d1, 0);
    std::function<void(int, long long)> rec = [&](int idx, long long acc) {
      if (idx == pair.d1) {
        if (acc == 0) return;
        double ka = 0, kb = 0;
        for (int i = 0; i < pair.d1; ++i) {
          ka += k[i] * pair.alpha1[i];
          kb += k[i] * pair.beta1[i];
        }
        double val = std::max(frac_dist(ka), frac_dist(kb)) *
                     std::pow(std::sqrt(static_cast<double>(acc)), tau);
        if (val < cert.gamma_sdc) {
          cert.gamma_sdc = val;
          cert.sdc_witness.assign(pair.d1, Int(0));
          for (int i = 0; i < pair.d1; ++i) cert.sdc_witness[i] = k[i];
        }
        return;
      }
      long long t = static_cast<long long>(
          std::sqrt(std::max<double>(0.0, static_cast<double>(N * N - acc))));
      while (t * t > N * N - acc) --t;
      for (long long w = -t; w <= t; ++w) {
        k[idx] = w;
        rec(idx + 1, acc + w * w);
      }
      k[idx] = 0;
    };
    rec(0, 0);
  }

  // resonance divisors over the full ball: resonant active sections plus
  // arbitrary inactive completions (inactive coordinates do not change the
  // class or pair, only the mode and its norm)
  cert.gamma_res = std::numeric_limits<double>::infinity();
  std::vector<int> act = active_coords(pair.A, pair.B);
  std::vector<int> ina;
  for (int j = 0; j < pair.A.dim; ++j)
    if (std::find(act.begin(), act.end(), j) == act.end()) ina.push_back(j);
  std::map<std::pair<long long, long long>, std::vector<double>> akl_cache;
  std::map<std::pair<long long, long long>, QVec> akl_cache_q;

  scan_resonances(pair.A, pair.B, N, [&](const ResonanceRecord& rec) {
    auto key = std::make_pair(rec.k, rec.l);
    if (!akl_cache.count(key)) {
      akl_cache[key] = translation_part(pair, rec.k, rec.l);
      if (pair.exact) akl_cache_q[key] = translation_part_q(pair, rec.k, rec.l);
    }
    const auto& akl = akl_cache[key];
    long long act_n2 = norm2(rec.m).convert_to<long long>();
    double base = 0;
    for (int j = 0; j < pair.A.dim; ++j)
      base += rec.m[j].convert_to<double>() * akl[j];
    Rat base_q = 0;
    if (pair.exact) {
      const QVec& aq = akl_cache_q[key];
      for (int j = 0; j < pair.A.dim; ++j) base_q += Rat(rec.m[j]) * aq[j];
    }
    // enumerate inactive completions
    std::vector<long long> mi(ina.size(), 0);
    std::function<void(size_t, long long, double, Rat)> go =
        [&](size_t idx, long long acc, double val, Rat val_q) {
          if (idx == ina.size()) {
            ++cert.resonances_scanned;
            double dist = frac_dist(val);
            bool degenerate;
            if (pair.exact) {
              degenerate = (denominator(val_q) == 1);
            } else {
              degenerate = dist < 1e-14;
            }
            if (degenerate) {
              std::ostringstream os;
              os << "resonance with unit multiplier: m = (";
              for (int j = 0; j < pair.A.dim; ++j) {
                long long mj = rec.m[j].convert_to<long long>();
                for (size_t q = 0; q < ina.size(); ++q)
                  if (ina[q] == j) mj += mi[q];
                os << (j ? "," : "") << mj;
              }
              os << "), pair (" << rec.k << "," << rec.l << ")";
              throw DegenerateResonance(os.str());
            }
            double g =
                dist * std::pow(std::sqrt(static_cast<double>(acc)), tau);
            if (g < cert.gamma_res) {
              cert.gamma_res = g;
              cert.res_witness.assign(pair.A.dim, Int(0));
              for (int j = 0; j < pair.A.dim; ++j)
                cert.res_witness[j] = rec.m[j];
              for (size_t q = 0; q < ina.size(); ++q)
                cert.res_witness[ina[q]] += Int(mi[q]);
              cert.res_k = rec.k;
              cert.res_l = rec.l;
            }
            return;
          }
          long long budget = N * N - acc;
          long long t = static_cast<long long>(
              std::sqrt(std::max<double>(0.0, static_cast<double>(budget))));
          while (t * t > budget) --t;
          int j = ina[idx];
          for (long long w = -t; w <= t; ++w) {
            mi[idx] = w;
            go(idx + 1, acc + w * w, val + w * akl[j],
               pair.exact ? val_q + Rat(Int(w)) * akl_cache_q[key][j] : val_q);
          }
          mi[idx] = 0;
        };
    go(0, act_n2, base, base_q);
  });
  return cert;
}

}  // namespace parakam
