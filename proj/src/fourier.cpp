#include "parakam/fourier.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <functional>

namespace parakam {

namespace {

std::complex<double> unit(double turns) {
  return std::complex<double>(std::cos(2.0 * M_PI * turns),
                              std::sin(2.0 * M_PI * turns));
}

double cvec_abs(const CVec& v) {
  double s = 0;
  for (auto c : v) s += std::norm(c);
  return std::sqrt(s);
}

}  // namespace

Mode make_mode(std::initializer_list<int> xs) {
  Mode m{};
  int i = 0;
  for (int x : xs) m[i++] = x;
  return m;
}

Mode mode_of(const IVec& v) {
  Mode m{};
  for (size_t i = 0; i < v.size(); ++i)
    m[i] = static_cast<int32_t>(v[i].convert_to<long long>());
  return m;
}

long long mode_norm2(const Mode& m) {
  long long s = 0;
  for (int i = 0; i < kMaxDim; ++i) s += (long long)m[i] * m[i];
  return s;
}

double mode_abs(const Mode& m) {
  return std::sqrt(static_cast<double>(mode_norm2(m)));
}

Mode mode_neg(const Mode& m) {
  Mode r{};
  for (int i = 0; i < kMaxDim; ++i) r[i] = -m[i];
  return r;
}

Mode mode_pushforward(const Mode& m, const IMat& l) {
  Mode r{};
  for (int j = 0; j < l.cols; ++j) {
    long long s = 0;
    for (int i = 0; i < l.rows; ++i)
      s += l.at(i, j).convert_to<long long>() * m[i];
    r[j] = static_cast<int32_t>(s);
  }
  return r;
}

FourierField FourierField::zero(int d, int width, long long n, bool real) {
  FourierField f;
  f.d = d;
  f.width = width;
  f.trunc_N = n;
  f.is_real = real;
  return f;
}

const CVec* FourierField::find(const Mode& m) const {
  auto it = coeffs.find(m);
  return it == coeffs.end() ? nullptr : &it->second;
}

CVec FourierField::at(const Mode& m) const {
  if (const CVec* v = find(m)) return *v;
  return CVec(width, 0.0);
}

void FourierField::set(const Mode& m, CVec v) {
  bool zero = true;
  for (auto c : v)
    if (c != 0.0) zero = false;
  if (zero) {
    coeffs.erase(m);
    return;
  }
  long long n2 = mode_norm2(m);
  if (n2 > trunc_N * trunc_N) {
    long long r = static_cast<long long>(std::ceil(std::sqrt((double)n2)));
    while (r * r < n2) ++r;
    trunc_N = r;
  }
  coeffs[m] = std::move(v);
}

void FourierField::accumulate(const Mode& m, const CVec& v) {
  CVec cur = at(m);
  for (int i = 0; i < width; ++i) cur[i] += v[i];
  set(m, std::move(cur));
}

void FourierField::prune(double eps) {
  for (auto it = coeffs.begin(); it != coeffs.end();)
    it = cvec_abs(it->second) <= eps ? coeffs.erase(it) : std::next(it);
}

FourierField add(const FourierField& a, const FourierField& b) {
  FourierField r = a;
  r.trunc_N = std::max(a.trunc_N, b.trunc_N);
  r.is_real = a.is_real && b.is_real;
  for (const auto& [m, v] : b.coeffs) r.accumulate(m, v);
  return r;
}

FourierField sub(const FourierField& a, const FourierField& b) {
  return add(a, scale(b, -1.0));
}

FourierField scale(const FourierField& a, std::complex<double> c) {
  FourierField r = a;
  if (c.imag() != 0.0) r.is_real = false;
  for (auto& [m, v] : r.coeffs)
    for (auto& x : v) x *= c;
  if (c == 0.0) r.coeffs.clear();
  return r;
}

double norm_r(const FourierField& f, double r) {
  double best = 0.0;
  for (const auto& [m, v] : f.coeffs)
    best = std::max(best, cvec_abs(v) * std::pow(1.0 + mode_abs(m), r));
  return best;
}

FourierField compose_affine(const FourierField& h, const IMat& l,
                            const std::vector<double>& t, double* leakage) {
  FourierField r = FourierField::zero(h.d, h.width, h.trunc_N, h.is_real);
  double leak = 0.0;
  const long long n2_in = h.trunc_N * h.trunc_N;
  for (const auto& [m, v] : h.coeffs) {
    double phase = 0.0;
    for (int i = 0; i < h.d; ++i) phase += m[i] * t[i];
    std::complex<double> mult = unit(phase);
    CVec w(v.size());
    for (size_t i = 0; i < v.size(); ++i) w[i] = v[i] * mult;
    Mode n = mode_pushforward(m, l);
    if (mode_norm2(n) > n2_in) leak = std::max(leak, cvec_abs(w));
    r.accumulate(n, w);
  }
  if (leakage) *leakage = leak;
  return r;
}

FourierField coboundary(const FourierField& h, const ActionPair& pair,
                        long long k, long long l) {
  IMat pw = power_pair(pair.A, pair.B, k, l, /*use_dual=*/false);
  std::vector<double> akl = translation_part(pair, k, l);
  return sub(compose_affine(h, pw, akl), h);
}

FourierField twisted_diff_vec(const FourierField& h, const ActionPair& pair,
                              long long s, long long t) {
  if (h.width != h.d)
    throw std::invalid_argument("twisted difference needs a vector field");
  IMat pw = power_pair(pair.A, pair.B, s, t, /*use_dual=*/false);
  std::vector<double> ast = translation_part(pair, s, t);
  FourierField comp = compose_affine(h, pw, ast);
  // subtract A^s B^t h modewise
  FourierField lin = FourierField::zero(h.d, h.width, h.trunc_N, h.is_real);
  for (const auto& [m, v] : h.coeffs) {
    CVec w(h.width, 0.0);
    for (int i = 0; i < h.d; ++i)
      for (int j = 0; j < h.d; ++j)
        w[i] += pw.at(i, j).convert_to<double>() * v[j];
    lin.set(m, std::move(w));
  }
  return sub(comp, lin);
}

FourierField truncate(const FourierField& f, long long n) {
  FourierField r = FourierField::zero(f.d, f.width, n, f.is_real);
  for (const auto& [m, v] : f.coeffs)
    if (mode_norm2(m) <= n * n) r.coeffs[m] = v;
  return r;
}

FourierField residue(const FourierField& f, long long n) {
  FourierField r = FourierField::zero(f.d, f.width, f.trunc_N, f.is_real);
  for (const auto& [m, v] : f.coeffs)
    if (mode_norm2(m) > n * n) r.coeffs[m] = v;
  return r;
}

std::vector<double> eval_at(const FourierField& f,
                            const std::vector<double>& x) {
  CVec acc(f.width, 0.0);
  for (const auto& [m, v] : f.coeffs) {
    double phase = 0.0;
    for (int i = 0; i < f.d; ++i) phase += m[i] * x[i];
    std::complex<double> e = unit(phase);
    for (int i = 0; i < f.width; ++i) acc[i] += v[i] * e;
  }
  std::vector<double> r(f.width);
  for (int i = 0; i < f.width; ++i) r[i] = acc[i].real();
  return r;
}

GridField GridField::zero(int d, int width, int m) {
  GridField g;
  g.d = d;
  g.width = width;
  g.m = m;
  long long n = 1;
  for (int i = 0; i < d; ++i) n *= m;
  g.samples.assign(n * width, 0.0);
  return g;
}

long long GridField::points() const {
  return static_cast<long long>(samples.size()) / width;
}

std::vector<double> grid_point(const GridField& g, long long idx) {
  std::vector<double> x(g.d);
  for (int i = g.d - 1; i >= 0; --i) {
    x[i] = static_cast<double>(idx % g.m) / g.m;
    idx /= g.m;
  }
  return x;
}

std::vector<double> grid_average(const GridField& g) {
  std::vector<double> a(g.width, 0.0);
  long long n = g.points();
  for (long long i = 0; i < n; ++i)
    for (int c = 0; c < g.width; ++c) a[c] += g.value(i)[c];
  for (auto& v : a) v /= static_cast<double>(n);
  return a;
}

double grid_max_abs(const GridField& g) {
  double b = 0.0;
  for (double v : g.samples) b = std::max(b, std::abs(v));
  return b;
}

GridField grid_add(const GridField& a, const GridField& b) {
  GridField r = a;
  for (size_t i = 0; i < r.samples.size(); ++i) r.samples[i] += b.samples[i];
  return r;
}

GridField grid_sub(const GridField& a, const GridField& b) {
  GridField r = a;
  for (size_t i = 0; i < r.samples.size(); ++i) r.samples[i] -= b.samples[i];
  return r;
}

namespace {

long long flat_bin(const Mode& m, int d, int grid) {
  long long idx = 0;
  for (int i = 0; i < d; ++i) {
    long long b = ((m[i] % grid) + grid) % grid;
    idx = idx * grid + b;
  }
  return idx;
}

}  // namespace

GridField synthesize(const FourierField& f, int m) {
  if (m < 4 * f.trunc_N)
    throw AliasRisk("grid size " + std::to_string(m) +
                    " below 4x truncation " + std::to_string(f.trunc_N));
  GridField g = GridField::zero(f.d, f.width, m);
  long long n = g.points();
  std::vector<std::complex<double>> buf(n);
  std::vector<int> dims(f.d, m);
  fftw_plan plan = fftw_plan_dft(
      f.d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD,
      FFTW_ESTIMATE);
  for (int c = 0; c < f.width; ++c) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (const auto& [mode, v] : f.coeffs) buf[flat_bin(mode, f.d, m)] = v[c];
    fftw_execute(plan);
    for (long long i = 0; i < n; ++i) g.value(i)[c] = buf[i].real();
  }
  fftw_destroy_plan(plan);
  return g;
}

FourierField analyze(const GridField& g, long long n, double floor_eps) {
  if (g.m < 4 * n)
    throw AliasRisk("grid size " + std::to_string(g.m) +
                    " below 4x truncation " + std::to_string(n));
  FourierField f = FourierField::zero(g.d, g.width, n, true);
  long long pts = g.points();
  std::vector<std::complex<double>> buf(pts);
  std::vector<int> dims(g.d, g.m);
  fftw_plan plan = fftw_plan_dft(
      g.d, dims.data(), reinterpret_cast<fftw_complex*>(buf.data()),
      reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD,
      FFTW_ESTIMATE);
  std::vector<std::vector<std::complex<double>>> comp(g.width);
  for (int c = 0; c < g.width; ++c) {
    for (long long i = 0; i < pts; ++i) buf[i] = g.value(i)[c];
    fftw_execute(plan);
    comp[c] = buf;
  }
  fftw_destroy_plan(plan);
  double scale = 1.0 / static_cast<double>(pts);
  // walk the mode ball
  std::vector<int> w(g.d, 0);
  Mode mode{};
  std::function<void(int, long long)> rec = [&](int idx, long long acc) {
    if (idx == g.d) {
      CVec v(g.width);
      long long bin = flat_bin(mode, g.d, g.m);
      double abs2 = 0.0;
      for (int c = 0; c < g.width; ++c) {
        v[c] = comp[c][bin] * scale;
        abs2 += std::norm(v[c]);
      }
      if (abs2 > floor_eps * floor_eps) f.coeffs[mode] = std::move(v);
      return;
    }
    long long t = 0;
    while ((t + 1) * (t + 1) <= n * n - acc) ++t;
    for (long long x = -t; x <= t; ++x) {
      mode[idx] = static_cast<int32_t>(x);
      rec(idx + 1, acc + x * x);
    }
    mode[idx] = 0;
  };
  rec(0, 0);
  return f;
}

namespace {

// interpolation-checked spectral lift of a grid perturbation
FourierField lift_checked(const GridField& u) {
  FourierField fu = analyze(u, u.m / 4);
  // the lift must reproduce its own samples (band-limited data)
  double worst = 0.0;
  long long n = u.points();
  long long stride = std::max<long long>(1, n / 64);
  for (long long i = 0; i < n; i += stride) {
    std::vector<double> v = eval_at(fu, grid_point(u, i));
    for (int c = 0; c < u.width; ++c)
      worst = std::max(worst, std::abs(v[c] - u.value(i)[c]));
  }
  if (worst > 1e-9)
    throw ConditioningLoss("interpolation residual " + std::to_string(worst));
  return fu;
}

}  // namespace

GridField compose_maps(const AffineGridMap& f, const AffineGridMap& g) {
  const GridField& ug = g.pert;
  int d = ug.d;
  FourierField fu = lift_checked(f.pert);
  GridField out = GridField::zero(d, d, ug.m);
  long long n = out.points();
  std::vector<double> y(d);
  for (long long i = 0; i < n; ++i) {
    std::vector<double> x = grid_point(out, i);
    // y = G(x) = L_G x + t_G + u_G(x)
    for (int r = 0; r < d; ++r) {
      double s = g.trans[r] + ug.value(i)[r];
      for (int c = 0; c < d; ++c)
        s += g.lin.at(r, c).convert_to<double>() * x[c];
      y[r] = s;
    }
    std::vector<double> fv = eval_at(fu, y);
    for (int r = 0; r < d; ++r) {
      double s = fv[r];
      for (int c = 0; c < d; ++c)
        s += f.lin.at(r, c).convert_to<double>() * ug.value(i)[c];
      out.value(i)[r] = s;
    }
  }
  return out;
}

GridField invert_near_identity(const GridField& h) {
  int d = h.d;
  FourierField fh = lift_checked(h);
  GridField hp = GridField::zero(d, d, h.m);
  long long n = hp.points();
  std::vector<double> y(d);
  for (int sweep = 0; sweep < 50; ++sweep) {
    double delta = 0.0;
    for (long long i = 0; i < n; ++i) {
      std::vector<double> x = grid_point(hp, i);
      for (int c = 0; c < d; ++c) y[c] = x[c] + hp.value(i)[c];
      std::vector<double> v = eval_at(fh, y);
      for (int c = 0; c < d; ++c) {
        double nv = -v[c];
        delta = std::max(delta, std::abs(nv - hp.value(i)[c]));
        hp.value(i)[c] = nv;
      }
    }
    if (delta < 1e-13) return hp;
  }
  throw NoContraction("inverse iteration did not contract in 50 sweeps");
}

}  // namespace parakam
