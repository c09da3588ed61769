#include "parakam/cohomo.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace parakam {

namespace {

std::complex<double> unit(double turns) {
  return std::complex<double>(std::cos(2.0 * M_PI * turns),
                              std::sin(2.0 * M_PI * turns));
}

std::complex<double> lambda_of(const IVec& n, const std::vector<double>& t) {
  double phase = 0.0;
  for (size_t i = 0; i < n.size(); ++i)
    phase += n[i].convert_to<double>() * t[i];
  return unit(phase);
}

struct OrbitCtx {
  const UniMat* gen;                   // generator whose dual orbit we walk
  const std::vector<double>* trans;    // its translation
  IVec u;                              // dual-nilpart image of m
};

OrbitCtx orbit_ctx(const ActionPair& pair, const IVec& m, OrbitGenerator g) {
  OrbitCtx c;
  c.gen = (g == OrbitGenerator::A) ? &pair.A : &pair.B;
  c.trans = (g == OrbitGenerator::A) ? &pair.alpha : &pair.beta;
  c.u = matvec(c.gen->dualnil, m);
  IVec uu = matvec(c.gen->dualnil, c.u);
  for (const Int& x : uu)
    if (x != 0)
      throw NotStep2Orbit("dual orbit is not affine in the exponent");
  return c;
}

IVec orbit_point(const IVec& m, const IVec& u, long long k) {
  IVec n(m.size());
  for (size_t i = 0; i < m.size(); ++i) n[i] = m[i] + Int(k) * u[i];
  return n;
}

}  // namespace

std::map<long long, std::complex<double>> multipliers(
    const ActionPair& pair, const IVec& m, long long k_min, long long k_max,
    OrbitGenerator gen) {
  const UniMat& g = (gen == OrbitGenerator::A) ? pair.A : pair.B;
  const std::vector<double>& t =
      (gen == OrbitGenerator::A) ? pair.alpha : pair.beta;
  std::map<long long, std::complex<double>> out;
  out[0] = 1.0;
  IVec n = m;
  std::complex<double> acc = 1.0;
  for (long long k = 1; k <= k_max; ++k) {
    n = matvec(g.dual, n);
    acc *= lambda_of(n, t);
    out[k] = acc;
  }
  n = m;
  acc = 1.0;
  IMat ginv = inverse_unimodular(g.dual);
  for (long long k = -1; k >= k_min; --k) {
    acc /= lambda_of(n, t);  // divides by lambda at Abar^{k+1} m
    n = matvec(ginv, n);
    out[k] = acc;
  }
  for (auto it = out.begin(); it != out.end();)
    it = (it->first < k_min || it->first > k_max) ? out.erase(it)
                                                  : std::next(it);
  return out;
}

std::complex<double> solve_mode_C1(std::complex<double> f_m,
                                   std::complex<double> g_m, const IVec& m,
                                   const ActionPair& pair, double gamma,
                                   double tau, C1Branch* branch) {
  double nm = std::sqrt(norm2(m).convert_to<double>());
  double threshold = gamma * std::pow(nm, -tau);
  std::complex<double> da = lambda_of(m, pair.alpha) - 1.0;
  std::complex<double> db = lambda_of(m, pair.beta) - 1.0;
  if (std::abs(da) >= threshold) {
    if (branch) *branch = C1Branch::F;
    return f_m / da;
  }
  if (std::abs(db) >= threshold) {
    if (branch) *branch = C1Branch::G;
    return g_m / db;
  }
  throw BothDivisorsSmall("both divisors below gamma |m|^-tau at a C1 mode");
}

std::complex<double> solve_mode_orbit(const FourierField& f, const IVec& m,
                                      const ActionPair& pair,
                                      OrbitGenerator gen, long long* terms) {
  OrbitCtx c = orbit_ctx(pair, m, gen);
  bool zero_u = true;
  for (const Int& x : c.u)
    if (x != 0) zero_u = false;
  if (zero_u) throw NotStep2Orbit("constant dual orbit has no one-sided sum");
  OrbitGeometry geo = (gen == OrbitGenerator::A)
                          ? orbit_geometry(pair.A, pair.B, m)
                          : orbit_geometry(pair.B, pair.A, m);
  const long long n2max = f.trunc_N * f.trunc_N;
  std::complex<double> sum = 0.0;
  long long used = 0;
  std::complex<double> lam = 1.0;
  if (geo.k0 < 0) {
    // lowest point behind: the forward orbit exits the ball
    for (long long k = 0;; ++k) {
      IVec n = orbit_point(m, c.u, k);
      if (k > 0) lam *= lambda_of(n, *c.trans);
      if (norm2(n).convert_to<long long>() > n2max) break;
      if (const CVec* v = f.find(mode_of(n))) sum += (*v)[0] * lam;
      ++used;
    }
    if (terms) *terms = used;
    return -sum;
  }
  // lowest point ahead of (or at) m: sum backward over k <= -1
  IVec n = m;
  for (long long k = -1;; --k) {
    lam /= lambda_of(n, *c.trans);
    n = orbit_point(m, c.u, k);
    if (norm2(n).convert_to<long long>() > n2max) break;
    if (const CVec* v = f.find(mode_of(n))) sum += (*v)[0] * lam;
    ++used;
  }
  if (terms) *terms = used;
  return sum;
}

ObstructionSum obstruction_full(const FourierField& f, const IVec& m_bar,
                                const ActionPair& pair) {
  OrbitGeometry geo = orbit_geometry(pair.A, pair.B, m_bar);
  if (geo.k0 != 0)
    throw std::invalid_argument("obstruction sum requires a lowest point");
  OrbitCtx c = orbit_ctx(pair, m_bar, OrbitGenerator::A);
  ObstructionSum out;
  out.m = mode_of(m_bar);
  out.direction = SumDirection::FullA;
  const long long n2max = f.trunc_N * f.trunc_N;
  std::complex<double> lam = 1.0;
  for (long long k = 0;; ++k) {
    IVec n = orbit_point(m_bar, c.u, k);
    if (k > 0) lam *= lambda_of(n, *c.trans);
    if (norm2(n).convert_to<long long>() > n2max) break;
    if (const CVec* v = f.find(mode_of(n))) out.value += (*v)[0] * lam;
    ++out.terms_used;
  }
  lam = 1.0;
  IVec n = m_bar;
  for (long long k = -1;; --k) {
    lam /= lambda_of(n, *c.trans);
    n = orbit_point(m_bar, c.u, k);
    if (norm2(n).convert_to<long long>() > n2max) break;
    if (const CVec* v = f.find(mode_of(n))) out.value += (*v)[0] * lam;
    ++out.terms_used;
  }
  return out;
}

FourierField commutator_L(const FieldMap& p, PairKey kl, PairKey st,
                          const ActionPair& pair) {
  return sub(coboundary(p.at(st), pair, kl.first, kl.second),
             coboundary(p.at(kl), pair, st.first, st.second));
}

FourierField commutator_L_vec(const FieldMap& p, PairKey kl, PairKey st,
                              const ActionPair& pair) {
  return sub(twisted_diff_vec(p.at(kl), pair, st.first, st.second),
             twisted_diff_vec(p.at(st), pair, kl.first, kl.second));
}

namespace {

struct CaseCounts {
  long long c1_f = 0, c1_g = 0, c2p = 0, c2pp = 0, c3 = 0;
};

// the scalar mode loop shared by solve_scalar and the vector rows
FourierField assemble_h(const FourierField& f, const FourierField& g,
                        const ActionPair& pair, long long n, double gamma,
                        double tau, CaseCounts& counts) {
  int d = pair.A.dim;
  FourierField h = FourierField::zero(d, 1, n, true);
  IVec m(d, Int(0));
  std::function<void(int, long long)> rec = [&](int idx, long long acc) {
    if (idx == d) {
      if (acc == 0) return;  // h_0 = 0 always; averages go to V
      ResonanceRecord rc = classify_mode(pair.A, pair.B, m);
      std::complex<double> hm;
      if (rc.cls == ModeClass::C1) {
        C1Branch br;
        hm = solve_mode_C1(f.at(mode_of(m))[0], g.at(mode_of(m))[0], m, pair,
                           gamma, tau, &br);
        (br == C1Branch::F ? counts.c1_f : counts.c1_g) += 1;
      } else {
        bool a_orbit = false;
        IVec u = matvec(pair.A.dualnil, m);
        for (const Int& x : u)
          if (x != 0) a_orbit = true;
        if (a_orbit) {
          hm = solve_mode_orbit(f, m, pair, OrbitGenerator::A);
          (rc.cls == ModeClass::C2 ? counts.c2p : counts.c3) += 1;
        } else {
          // C2'': Ahat m = 0, Bhat m != 0 -- solve the g-equation along
          // the Bbar-orbit (affine by the step lemma on unlocked data)
          hm = solve_mode_orbit(g, m, pair, OrbitGenerator::B);
          counts.c2pp += 1;
        }
      }
      if (hm != 0.0) h.set(mode_of(m), {hm});
      return;
    }
    long long t = 0;
    while ((t + 1) * (t + 1) <= n * n - acc) ++t;
    for (long long x = -t; x <= t; ++x) {
      m[idx] = Int(x);
      rec(idx + 1, acc + x * x);
    }
    m[idx] = Int(0);
  };
  rec(0, 0);
  return h;
}

void finish_report(SolveReport& rep, const FieldMap& p, const ActionPair& pair,
                   double tau, const std::vector<double>& r_list,
                   bool vector_case) {
  int d = pair.A.dim;
  for (const auto& [st, q] : p) {
    CVec ave = q.average();
    rep.V[st] = ave;
    FourierField dh = vector_case
                          ? twisted_diff_vec(rep.h, pair, st.first, st.second)
                          : coboundary(rep.h, pair, st.first, st.second);
    FourierField pt = sub(q, dh);
    CVec a0 = pt.at(Mode{});
    for (size_t c = 0; c < a0.size(); ++c) a0[c] -= ave[c];
    pt.set(Mode{}, std::move(a0));
    rep.p_tilde[st] = std::move(pt);
  }
  rep.r_list = r_list;
  for (double r : r_list) rep.h_norm[r] = norm_r(rep.h, r);
  for (const auto& [st, pt] : rep.p_tilde)
    for (double r : r_list) rep.p_tilde_norm[st][r] = norm_r(pt, r);
  rep.sigma = tau + d + 2;
  double denom = 0.0;
  for (const auto& [st, q] : p) denom = std::max(denom, norm_r(q, rep.sigma));
  rep.tameness_ratio = denom > 0 ? norm_r(rep.h, 0.0) / denom : 0.0;
}

}  // namespace

SolveReport solve_scalar(const FieldMap& p, const ActionPair& pair,
                         long long n, double gamma, double tau,
                         std::vector<double> r_list) {
  const FourierField& f = p.at({1, 0});
  const FourierField& g = p.at({0, 1});
  SolveReport rep;
  CaseCounts counts;
  rep.h = assemble_h(f, g, pair, n, gamma, tau, counts);
  rep.count_c1_f = counts.c1_f;
  rep.count_c1_g = counts.c1_g;
  rep.count_c2_prime = counts.c2p;
  rep.count_c2_dprime = counts.c2pp;
  rep.count_c3 = counts.c3;
  finish_report(rep, p, pair, tau, r_list, /*vector_case=*/false);
  return rep;
}

SolveReport solve_vector(const FieldMap& p, const ActionPair& pair,
                         long long n, double gamma, double tau,
                         std::vector<double> r_list) {
  int d = pair.A.dim;
  CommonFlag flag;
  try {
    flag = common_flag(pair.A, pair.B);
  } catch (const std::exception& e) {
    throw BasisFailure(std::string("triangularization failed: ") + e.what());
  }
  // values in the flag frame: p'(s,t) = U p(s,t); the linear parts become
  // upper unitriangular T_{s,t} = U A^s B^t U^{-1}
  auto apply = [&](const IMat& mat, const FourierField& q) {
    FourierField r = FourierField::zero(q.d, q.width, q.trunc_N, q.is_real);
    for (const auto& [m, v] : q.coeffs) {
      CVec w(q.width, 0.0);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          w[i] += mat.at(i, j).convert_to<double>() * v[j];
      r.set(m, std::move(w));
    }
    return r;
  };
  FieldMap pf;
  std::map<PairKey, IMat> tri;
  for (const auto& [st, q] : p) {
    pf[st] = apply(flag.U, q);
    tri.emplace(st, mul(mul(flag.U, power_pair(pair.A, pair.B, st.first,
                                               st.second, false)),
                        flag.U_inv));
  }

  // row induction, bottom-up: row i obeys a scalar equation once the
  // already-solved rows j > i are folded into its data
  std::vector<FourierField> hrow(d);
  CaseCounts counts;
  auto component = [&](const FourierField& q, int i) {
    FourierField r = FourierField::zero(d, 1, q.trunc_N, q.is_real);
    for (const auto& [m, v] : q.coeffs)
      if (v[i] != 0.0) r.set(m, {v[i]});
    return r;
  };
  for (int i = d - 1; i >= 0; --i) {
    FieldMap qi;
    for (const auto& [st, q] : pf) {
      FourierField row = component(q, i);
      const IMat& t = tri.at(st);
      for (int j = i + 1; j < d; ++j) {
        double u = t.at(i, j).convert_to<double>();
        if (u != 0.0) row = add(row, scale(hrow[j], u));
      }
      qi[st] = std::move(row);
    }
    hrow[i] = assemble_h(qi.at({1, 0}), qi.at({0, 1}), pair, n, gamma, tau,
                         counts);
  }
  FourierField hf = FourierField::zero(d, d, n, true);
  for (int i = 0; i < d; ++i)
    for (const auto& [m, v] : hrow[i].coeffs) {
      CVec cur = hf.at(m);
      cur[i] = v[0];
      hf.set(m, std::move(cur));
    }
  SolveReport rep;
  rep.h = apply(flag.U_inv, hf);
  rep.count_c1_f = counts.c1_f;
  rep.count_c1_g = counts.c1_g;
  rep.count_c2_prime = counts.c2p;
  rep.count_c2_dprime = counts.c2pp;
  rep.count_c3 = counts.c3;
  finish_report(rep, p, pair, tau, r_list, /*vector_case=*/true);
  return rep;
}

}  // namespace parakam
