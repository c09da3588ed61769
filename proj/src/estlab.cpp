#include "parakam/estlab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

namespace parakam {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Generalized binomial coefficient C(l, j) for integer l of either sign.
Int binom(long long l, int j) {
  Int num = 1;
  for (int i = 0; i < j; ++i) num *= Int(l - i);
  Int den = 1;
  for (int i = 2; i <= j; ++i) den *= i;
  return num / den;  // exact: product of j consecutive integers
}

bool is_zero_vec(const IVec& v) {
  for (const auto& x : v)
    if (x != 0) return false;
  return true;
}

double dnorm(const IVec& v) {
  return std::sqrt(norm2(v).convert_to<double>());
}

// The orbit polynomial's building blocks: bj[j] = Bhat^j m (up to the
// step of m) and abj[j] = Ahat Bhat^j m.
struct OrbitPoly {
  std::vector<IVec> bj, abj;

  IVec w(long long l) const {  // Bbar^l m
    IVec r(bj[0].size(), Int(0));
    for (size_t j = 0; j < bj.size(); ++j) {
      Int c = binom(l, static_cast<int>(j));
      for (size_t i = 0; i < r.size(); ++i) r[i] += c * bj[j][i];
    }
    return r;
  }
  IVec u(long long l) const {  // Ahat Bbar^l m
    IVec r(bj[0].size(), Int(0));
    for (size_t j = 0; j < abj.size(); ++j) {
      Int c = binom(l, static_cast<int>(j));
      for (size_t i = 0; i < r.size(); ++i) r[i] += c * abj[j][i];
    }
    return r;
  }
  // |m|-style bound on |w(l)| by the triangle inequality.
  double w_bound(long long l) const {
    double s = 0.0;
    for (size_t j = 0; j < bj.size(); ++j)
      s += std::abs(binom(l, static_cast<int>(j)).convert_to<double>()) *
           dnorm(bj[j]);
    return s;
  }
};

OrbitPoly make_poly(const UniMat& A, const UniMat& B, const IVec& m) {
  if (A.step > 2) throw NotStep2("closed-form orbit needs a step-2 A");
  OrbitPoly p;
  IVec cur = m;
  while (!is_zero_vec(cur)) {
    p.bj.push_back(cur);
    cur = matvec(B.dualnil, cur);
  }
  for (const auto& v : p.bj) p.abj.push_back(matvec(A.dualnil, v));
  while (!p.abj.empty() && is_zero_vec(p.abj.back())) p.abj.pop_back();
  return p;
}

double norm_wku(const IVec& w, const IVec& u, long long k) {
  Int s = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    Int x = w[i] + Int(k) * u[i];
    s += x * x;
  }
  return std::sqrt(s.convert_to<double>());
}

// Exact min over integer k of |w + k u| (u != 0): the norm is a convex
// quadratic in k, so the minimizer is one of the two integers around the
// real critical point.
double min_over_k(const IVec& w, const IVec& u) {
  double ks = -dot(w, u).convert_to<double>() / norm2(u).convert_to<double>();
  long long k0 = static_cast<long long>(std::floor(ks));
  return std::min(norm_wku(w, u, k0), norm_wku(w, u, k0 + 1));
}

// Orthonormal basis of the span of the given vectors (Gram-Schmidt).
std::vector<std::vector<double>> orthonormalize(
    const std::vector<std::vector<double>>& vs) {
  std::vector<std::vector<double>> q;
  for (auto v : vs) {
    for (const auto& e : q) {
      double c = 0.0;
      for (size_t i = 0; i < v.size(); ++i) c += v[i] * e[i];
      for (size_t i = 0; i < v.size(); ++i) v[i] -= c * e[i];
    }
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-9) continue;
    for (double& x : v) x /= n;
    q.push_back(v);
  }
  return q;
}

std::vector<double> project_perp(const std::vector<std::vector<double>>& q,
                                 const IVec& v) {
  std::vector<double> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].convert_to<double>();
  for (const auto& e : q) {
    double c = 0.0;
    for (size_t i = 0; i < r.size(); ++i) c += r[i] * e[i];
    for (size_t i = 0; i < r.size(); ++i) r[i] -= c * e[i];
  }
  return r;
}

double dnorm_d(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// One-sided double sum along l of the given sign, with a certified tail.
struct SideSum {
  double sum = 0.0;
  double tail = kInf;  // certified bound on the omitted part (inf = none)
  long long k_window = 0, l_window = 0;
};

SideSum side_sum(const OrbitPoly& poly, double r, int sign, double na,
                 double nbb) {
  SideSum out;
  long long lcur = sign > 0 ? 0 : -1;
  const long long l_cap = 5000;
  while (true) {
    IVec w = poly.w(lcur), u = poly.u(lcur);
    if (is_zero_vec(u)) {
      // the k-line is constant: the sum over k diverges
      out.sum = kInf;
      out.tail = 0.0;
      return out;
    }
    // inner sum over k, enumerated outward from the line's closest point;
    // |w + k u|^2 = |u|^2 (k - k*)^2 + q^2 is an exact quadratic, so
    // |v| >= |u| (|k - k0| - 1) bounds the one-sided k-tails
    double ks =
        -dot(w, u).convert_to<double>() / norm2(u).convert_to<double>();
    long long k0 = static_cast<long long>(std::llround(ks));
    double nu = dnorm(u);
    double inner = 0.0;
    double stop_g = 0.0;  // growth bound at the last enumerated k
    for (int dir : {+1, -1}) {
      long long k = dir > 0 ? k0 : k0 - 1;
      int steps = 0;
      while (true) {
        double v = norm_wku(w, u, k);
        inner += std::pow(v, -r);
        out.k_window = std::max(out.k_window, std::llabs(k));
        ++steps;
        double growth =
            nu * (static_cast<double>(std::llabs(k - k0)) - 1.0);
        if (steps > 4 && growth >= 2.0 &&
            std::pow(growth, 1.0 - r) / ((r - 1.0) * nu) <
                1e-6 * std::max(inner, 1e-300)) {
          stop_g = growth;
          break;
        }
        k += dir;
      }
    }
    inner += 2.0 * std::pow(std::max(stop_g, 2.0), 1.0 - r) /
             ((r - 1.0) * std::max(nu, 1.0));
    out.sum += inner;
    out.l_window = std::llabs(lcur);

    // certified outer tail once the projection bound grows past 1
    if (nbb > 1e-12) {
      long long lnext = lcur + sign;
      if (static_cast<double>(std::llabs(lnext)) * nbb - na >= 1.0) {
        double tailb = 0.0;
        long long ll = lnext;
        bool converged = false;
        for (int it = 0; it < 100000; ++it) {
          double rho = static_cast<double>(std::llabs(ll)) * nbb - na;
          double wb = poly.w_bound(ll);
          double t = (2.0 * wb + 2.0 * rho + 3.0) * std::pow(rho, -r) +
                     2.0 * std::pow(rho, 1.0 - r) / (r - 1.0);
          tailb += t;
          ll += sign;
          if (it > 3 && t < 1e-20 * std::max(out.sum, 1e-300)) {
            converged = true;
            break;
          }
        }
        if (converged && tailb < 0.01 * out.sum) {
          out.tail = tailb;
          return out;
        }
      }
    }
    lcur += sign;
    if (std::llabs(lcur) > l_cap) return out;  // tail stays uncertified
  }
}

}  // namespace

IVec orbit_point_closed_form(const UniMat& A, const UniMat& B, const IVec& m,
                             long long k, long long l) {
  OrbitPoly p = make_poly(A, B, m);
  IVec w = p.w(l), u = p.u(l);
  for (size_t i = 0; i < w.size(); ++i) w[i] += Int(k) * u[i];
  return w;
}

SumProbe probe_double_sum(const ActionPair& pair, const IVec& m, double r) {
  ResonanceRecord rec = classify_mode(pair.A, pair.B, m);
  if (rec.cls != ModeClass::C3)
    throw NotC3("double-sum probe requires a non-resonant mode");
  OrbitGeometry geo = orbit_geometry(pair.A, pair.B, m);
  if (geo.lowest != m)
    throw NotLowest("double-sum probe requires the lowest orbit point");
  int S = std::max(pair.A.step, pair.B.step);
  double eta = 0.99 / S;
  if (r <= 8.0 / eta)
    throw std::invalid_argument("envelope needs r > 8/eta");

  OrbitPoly poly = make_poly(pair.A, pair.B, m);
  // projection onto the complement of
  //   span{ Bhat^j m : j >= 2 } + span{ Ahat Bhat^j m : j <= s-2 }
  // leaves exactly m_perp + l (Bhat m)_perp of the whole orbit polynomial,
  // giving a k-free, l-linear lower bound for the tail certificates.
  std::vector<std::vector<double>> span;
  for (size_t j = 2; j < poly.bj.size(); ++j) {
    std::vector<double> v(m.size());
    for (size_t i = 0; i < v.size(); ++i)
      v[i] = poly.bj[j][i].convert_to<double>();
    span.push_back(v);
  }
  for (const auto& ab : poly.abj) {
    std::vector<double> v(m.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = ab[i].convert_to<double>();
    span.push_back(v);
  }
  auto q = orthonormalize(span);
  double na = dnorm_d(project_perp(q, m));
  double nbb = poly.bj.size() > 1 ? dnorm_d(project_perp(q, poly.bj[1])) : 0.0;

  SideSum plus = side_sum(poly, r, +1, na, nbb);
  SideSum minus = side_sum(poly, r, -1, na, nbb);

  SumProbe probe;
  probe.m = m;
  probe.r = r;
  probe.eta = eta;
  probe.sum_plus_l = plus.sum;
  probe.sum_minus_l = minus.sum;
  probe.tail_plus = plus.tail;
  probe.tail_minus = minus.tail;
  probe.envelope = std::pow(dnorm(m), -eta * r + 8.0);
  double up = plus.sum + (std::isfinite(plus.tail) ? plus.tail : kInf);
  double um = minus.sum + (std::isfinite(minus.tail) ? minus.tail : kInf);
  probe.good_side_positive = up <= um;
  probe.ratio_best = std::min(up, um) / probe.envelope;
  probe.good_side_matches_geometry =
      (probe.good_side_positive && geo.good_l_sign == LSign::Plus) ||
      (!probe.good_side_positive && geo.good_l_sign == LSign::Minus);
  probe.k_window = std::max(plus.k_window, minus.k_window);
  probe.l_window = std::max(plus.l_window, minus.l_window);
  return probe;
}

DriftReport probe_drift(const ActionPair& pair, const IVec& m) {
  ResonanceRecord rec = classify_mode(pair.A, pair.B, m);
  if (rec.cls != ModeClass::C3)
    throw NotC3("drift probe requires a non-resonant mode");
  OrbitGeometry geo = orbit_geometry(pair.A, pair.B, m);
  OrbitPoly poly = make_poly(pair.A, pair.B, m);

  DriftReport rep;
  rep.m = m;
  rep.s_of_m = bhat_step(pair.B, m);
  rep.delta = 0.99 / rep.s_of_m;
  rep.good_l_positive = geo.good_l_sign != LSign::Minus;

  // exact expansion check on the 21x21 box
  rep.expansion_exact = true;
  for (long long k = -10; k <= 10 && rep.expansion_exact; ++k)
    for (long long l = -10; l <= 10; ++l) {
      IVec lhs = orbit_point_closed_form(pair.A, pair.B, m, k, l);
      IVec rhs = matvec(power_pair(pair.A, pair.B, k, l, true), m);
      if (lhs != rhs) {
        rep.expansion_exact = false;
        break;
      }
    }

  auto line_min = [&](long long l) {
    IVec w = poly.w(l), u = poly.u(l);
    return is_zero_vec(u) ? dnorm(w) : min_over_k(w, u);
  };

  double md = dnorm(m);
  double mdelta = std::pow(md, rep.delta);

  // small-l window: |l| <= |m|^delta, all k
  long long lwin = static_cast<long long>(std::ceil(mdelta));
  rep.min_ratio_small_l = kInf;
  for (long long l = -lwin; l <= lwin; ++l)
    rep.min_ratio_small_l =
        std::min(rep.min_ratio_small_l, line_min(l) / mdelta);

  // linear drift in l on the good side
  int sgn = rep.good_l_positive ? 1 : -1;
  rep.min_ratio_drift_l = kInf;
  for (long long j = 1; j <= 200; ++j) {
    long long l = sgn * j;
    rep.min_ratio_drift_l =
        std::min(rep.min_ratio_drift_l,
                 line_min(l) / static_cast<double>(j));
  }

  // drift in k: |k| >= xi |m| with xi = 2, |l| <= |k|^delta
  long long kbase = static_cast<long long>(std::ceil(2.0 * md));
  rep.min_ratio_drift_k = kInf;
  for (long long kk = kbase; kk <= kbase + 100; ++kk) {
    double kd = std::pow(static_cast<double>(kk), rep.delta);
    long long lmax = static_cast<long long>(std::floor(kd));
    for (long long l = -lmax; l <= lmax; ++l) {
      IVec w = poly.w(l), u = poly.u(l);
      for (long long k : {kk, -kk}) {
        rep.min_ratio_drift_k =
            std::min(rep.min_ratio_drift_k, norm_wku(w, u, k) / kd);
      }
    }
  }

  IVec am = matvec(pair.A.dualnil, m);
  IVec b2m = matvec(pair.B.dualnil, matvec(pair.B.dualnil, m));
  rep.hA2_ok = is_zero_vec(b2m) || !is_zero_vec(am);
  IVec a2m = matvec(pair.A.dualnil, am);
  rep.ab2_ok =
      !is_zero_vec(a2m) ||
      is_zero_vec(matvec(pair.A.dualnil, poly.bj[poly.bj.size() - 1]));
  return rep;
}

std::vector<IVec> sample_c3_lowest(const ActionPair& pair, double min_norm,
                                   double max_norm, int count,
                                   unsigned seed) {
  std::vector<int> active = active_coords(pair.A, pair.B);
  int d = pair.A.dim;
  std::mt19937 rng(seed);
  int span = static_cast<int>(std::ceil(max_norm));
  std::uniform_int_distribution<int> dist(-span, span);
  std::set<IVec> seen;
  std::vector<IVec> out;
  for (long long attempt = 0;
       attempt < 20000LL * count && static_cast<int>(out.size()) < count;
       ++attempt) {
    IVec m(d, Int(0));
    for (int c : active) m[c] = dist(rng);
    if (is_zero_vec(m)) continue;
    double n = dnorm(m);
    if (n < min_norm || n > max_norm) continue;
    if (classify_mode(pair.A, pair.B, m).cls != ModeClass::C3) continue;
    OrbitGeometry geo = orbit_geometry(pair.A, pair.B, m);
    IVec low = geo.lowest;
    double nl = dnorm(low);
    if (nl < min_norm || nl > max_norm) continue;
    if (seen.insert(low).second) out.push_back(low);
  }
  return out;
}

}  // namespace parakam
