#include "parakam/kamloop.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace parakam {

namespace {

std::vector<double> apply_lin(const IMat& l, const std::vector<double>& x) {
  std::vector<double> r(l.rows, 0.0);
  for (int i = 0; i < l.rows; ++i)
    for (int j = 0; j < l.cols; ++j)
      r[i] += l.at(i, j).convert_to<double>() * x[j];
  return r;
}

GridField apply_lin_grid(const IMat& l, const GridField& u) {
  GridField r = u;
  for (long long i = 0; i < u.points(); ++i) {
    std::vector<double> v(u.width);
    for (int c = 0; c < u.width; ++c) v[c] = u.value(i)[c];
    std::vector<double> w = apply_lin(l, v);
    for (int c = 0; c < u.width; ++c) r.value(i)[c] = w[c];
  }
  return r;
}

AffineGridMap identity_map(int d, int m) {
  return {IMat::identity(d), std::vector<double>(d, 0.0),
          GridField::zero(d, d, m)};
}

// full composition F o G including the affine parts
AffineGridMap full_compose(const AffineGridMap& f, const AffineGridMap& g) {
  AffineGridMap r;
  r.lin = mul(f.lin, g.lin);
  r.trans = apply_lin(f.lin, g.trans);
  for (size_t i = 0; i < r.trans.size(); ++i) r.trans[i] += f.trans[i];
  r.pert = compose_maps(f, g);
  return r;
}

AffineGridMap map_inverse(const AffineGridMap& f) {
  int d = f.pert.d;
  IMat ainv = inverse_unimodular(f.lin);
  // F = T o (Id + v) with v = A^{-1} u, so F^{-1} = (Id + v') o T^{-1}
  GridField v = apply_lin_grid(ainv, f.pert);
  GridField vp = invert_near_identity(v);
  AffineGridMap r;
  r.lin = ainv;
  r.trans = apply_lin(ainv, f.trans);
  for (auto& t : r.trans) t = -t;
  AffineGridMap vpmap{IMat::identity(d), std::vector<double>(d, 0.0), vp};
  AffineGridMap tinv{ainv, r.trans, GridField::zero(d, d, f.pert.m)};
  r.pert = compose_maps(vpmap, tinv);
  return r;
}

AffineGridMap map_power(const AffineGridMap& f, const AffineGridMap& g,
                        long long k, long long l) {
  int d = f.pert.d, m = f.pert.m;
  AffineGridMap r = identity_map(d, m);
  const AffineGridMap gi = l < 0 ? map_inverse(g) : g;
  for (long long i = 0; i < std::llabs(l); ++i) r = full_compose(gi, r);
  const AffineGridMap fi = k < 0 ? map_inverse(f) : f;
  for (long long i = 0; i < std::llabs(k); ++i) r = full_compose(fi, r);
  return r;
}

double commuting_residual_of(const AffineGridMap& f, const AffineGridMap& g) {
  GridField fg = compose_maps(f, g);
  GridField gf = compose_maps(g, f);
  return grid_max_abs(grid_sub(fg, gf));
}

double vec_max_abs(const std::vector<double>& v) {
  double b = 0.0;
  for (double x : v) b = std::max(b, std::abs(x));
  return b;
}

}  // namespace

GridField adjust_average(const GridField& h_n, const GridField& h_prev) {
  FourierField hf = analyze(h_n, h_n.m / 4);
  int d = h_n.d;
  std::vector<double> mean(d, 0.0);
  long long n = h_n.points();
  std::vector<double> y(d);
  for (long long i = 0; i < n; ++i) {
    std::vector<double> x = grid_point(h_n, i);
    for (int c = 0; c < d; ++c) y[c] = x[c] + h_prev.value(i)[c];
    std::vector<double> v = eval_at(hf, y);
    for (int c = 0; c < d; ++c) mean[c] += v[c];
  }
  for (auto& v : mean) v /= static_cast<double>(n);
  GridField r = h_n;
  for (long long i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) r.value(i)[c] -= mean[c];
  return r;
}

KamReport kam_run(const PerturbedAction& input, const KamConfig& config) {
  const int d = input.pair.A.dim;
  const int m = input.grid_size;
  const int cap_d = config.cap_d > 0 ? config.cap_d : d * (d + 1);
  const int l_index =
      config.l_index > 0 ? config.l_index : 8 * cap_d + 16;
  KamReport rep;
  rep.h_total = GridField::zero(d, d, m);

  AffineGridMap fmap{input.pair.A.entries, input.pair.alpha, input.f};
  AffineGridMap gmap{input.pair.B.entries, input.pair.beta, input.g};
  const AffineGridMap f0 = fmap, g0 = gmap;

  auto delta_r = [&](double r) {
    return std::max(norm_r(analyze(fmap.pert, m / 4), r),
                    norm_r(analyze(gmap.pert, m / 4), r));
  };
  {
    double d0 = delta_r(0.0), dl = delta_r(static_cast<double>(l_index));
    rep.entry_delta0_ok = d0 < config.eps;
    rep.entry_deltal_ok = dl < 1.0 / config.eps;
  }

  double prev_delta0 = -1.0;
  int grow_streak = 0;
  int stall_streak = 0;
  rep.status = KamStatus::MaxStepsReached;
  for (int n = 1; n <= config.n_max; ++n) {
    KamStepRecord rec;
    rec.n = n;
    rec.eps_n = std::pow(config.eps, std::pow(config.k_exp, n));
    rec.n_real = std::pow(rec.eps_n, -1.0 / (3.0 * (cap_d + 2)));
    rec.n_freq = std::max<long long>(
        1, static_cast<long long>(std::ceil(rec.n_real)));
    rec.delta0 =
        std::max(grid_max_abs(fmap.pert), grid_max_abs(gmap.pert));
    double delta1 = delta_r(1.0);
    rec.delta_l = delta_r(static_cast<double>(l_index));
    rep.final_delta0 = rec.delta0;
    if (rec.delta0 <= config.target) {
      rep.steps.push_back(rec);
      rep.status = KamStatus::Converged;
      break;
    }
    if (std::pow(static_cast<double>(rec.n_freq), cap_d) * delta1 >= 1.0) {
      rep.steps.push_back(rec);
      rep.status = KamStatus::SmallnessViolated;
      break;
    }

    // The schedule's cutoff can lag behind quadratic tail modes that are
    // already numerically present; widen the solve ball to cover every
    // coefficient of the current perturbation above the target so a step
    // never parks removable error outside the truncation.
    long long n_solve = rec.n_freq;
    for (auto* mp : {&fmap, &gmap}) {
      FourierField sp = analyze(mp->pert, m / 4, 1e-16);
      for (const auto& [mm, vv] : sp.coeffs) {
        double a = 0.0;
        for (const auto& c : vv) a = std::max(a, std::abs(c));
        if (a > 0.1 * config.target)
          n_solve = std::max(
              n_solve, static_cast<long long>(std::ceil(mode_abs(mm))));
      }
    }
    n_solve = std::min<long long>(n_solve, m / 4);

    // data for the linearized equation at every needed power pair
    PairSet qn =
        resonance_pairs_up_to(input.pair.A, input.pair.B, n_solve);
    FieldMap p;
    for (auto [k, l] : qn.pairs) {
      GridField pg = (k == 1 && l == 0)   ? fmap.pert
                     : (k == 0 && l == 1) ? gmap.pert
                                          : map_power(fmap, gmap, k, l).pert;
      p[{k, l}] = analyze(pg, n_solve, 1e-16);
    }
    SolveReport sol =
        solve_vector(p, input.pair, n_solve, config.gamma, config.tau);
    // The linearized conjugation equation removes the perturbation with
    // H = Id - h, so flip the sign of the solved field before composing.
    sol.h = scale(sol.h, -1.0);
    rec.h_norm1 = norm_r(sol.h, 1.0);

    GridField h_grid = synthesize(sol.h, m);
    GridField h_adj = adjust_average(h_grid, rep.h_total);
    {
      std::vector<double> c(d);
      for (int i = 0; i < d; ++i) c[i] = h_adj.value(0)[i] - h_grid.value(0)[i];
      rec.c_adjust = c;
    }
    AffineGridMap hstep{IMat::identity(d), std::vector<double>(d, 0.0),
                        h_adj};
    AffineGridMap hinv = map_inverse(hstep);
    fmap = full_compose(full_compose(hstep, fmap), hinv);
    gmap = full_compose(full_compose(hstep, gmap), hinv);
    AffineGridMap htot{IMat::identity(d), std::vector<double>(d, 0.0),
                       rep.h_total};
    rep.h_total = compose_maps(hstep, htot);
    rec.ave_h_after = vec_max_abs(grid_average(rep.h_total));
    rep.steps.push_back(rec);

    double new_delta0 =
        std::max(grid_max_abs(fmap.pert), grid_max_abs(gmap.pert));
    if (n > 2 && prev_delta0 >= 0.0 && new_delta0 > config.target) {
      grow_streak = new_delta0 > rec.delta0 ? grow_streak + 1 : 0;
      if (grow_streak >= 2) {
        rep.final_delta0 = new_delta0;
        rep.status = KamStatus::DivergenceDetected;
        break;
      }
      // A step can legitimately stall while the frequency cutoff catches
      // up with quadratic tail modes, so require a sustained stagnation
      // before giving up.
      stall_streak = new_delta0 > 0.5 * rec.delta0 ? stall_streak + 1 : 0;
      if (stall_streak >= 3) {
        rep.final_delta0 = new_delta0;
        rep.status = KamStatus::NoProgress;
        break;
      }
    }
    prev_delta0 = rec.delta0;
    rep.final_delta0 = new_delta0;
    if (new_delta0 <= config.target && n == config.n_max) {
      rep.status = KamStatus::Converged;
    }
  }
  if (rep.status == KamStatus::MaxStepsReached &&
      rep.final_delta0 <= config.target)
    rep.status = KamStatus::Converged;

  // residuals of the assembled conjugacy against the affine model
  AffineGridMap htot{IMat::identity(d), std::vector<double>(d, 0.0),
                     rep.h_total};
  auto residual = [&](const AffineGridMap& pert_map, const UniMat& lin,
                      const std::vector<double>& trans) {
    GridField lhs = compose_maps(htot, pert_map);  // pert of H o F0
    GridField rhs = apply_lin_grid(lin.entries, rep.h_total);
    return grid_max_abs(grid_sub(lhs, rhs));
    (void)trans;
  };
  rep.residual_f = residual(f0, input.pair.A, input.pair.alpha);
  rep.residual_g = residual(g0, input.pair.B, input.pair.beta);
  rep.h_total_fourier = analyze(rep.h_total, m / 4, 1e-15);

  // Jacobian statistics of Id + H via spectral derivatives
  {
    std::vector<GridField> deriv(d * d);
    for (int j = 0; j < d; ++j) {
      FourierField dj =
          FourierField::zero(d, d, rep.h_total_fourier.trunc_N, false);
      for (const auto& [mo, v] : rep.h_total_fourier.coeffs) {
        CVec w(d);
        std::complex<double> fac(0.0, 2.0 * M_PI * mo[j]);
        for (int i = 0; i < d; ++i) w[i] = fac * v[i];
        dj.set(mo, std::move(w));
      }
      GridField gj = synthesize(dj, m);
      for (int i = 0; i < d; ++i) deriv[i * d + j] = gj;  // column j
    }
    double mean = 0.0;
    long long pts = rep.h_total.points();
    for (long long idx = 0; idx < pts; ++idx) {
      // det(Id + Dh) for d <= 3 directly
      double a[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          a[i][j] += deriv[i * d + j].value(idx)[i];
      double det;
      if (d == 1)
        det = a[0][0];
      else if (d == 2)
        det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
      else
        det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
              a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
              a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
      mean += det;
    }
    rep.jacobian_mean = mean / static_cast<double>(pts);
  }
  return rep;
}

FourierField conjugacy_fixture_h0(const ActionPair& pair,
                                  const FixtureParams& params) {
  int d = pair.A.dim;
  std::mt19937 rng(params.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FourierField h0 = FourierField::zero(d, d, 1, true);
  // low-frequency smooth displacement: all modes with |m| = 1
  for (int j = 0; j < d; ++j) {
    Mode mo{};
    mo[j] = 1;
    CVec v(d), vc(d);
    for (int i = 0; i < d; ++i) {
      v[i] = 0.5 * params.amplitude * std::complex<double>(u(rng), u(rng));
      vc[i] = std::conj(v[i]);
    }
    h0.set(mo, v);
    h0.set(mode_neg(mo), vc);
  }
  return h0;
}

PerturbedAction make_fixture(FixtureKind kind, const ActionPair& pair,
                             const FixtureParams& params) {
  int d = pair.A.dim;
  int m = params.grid_size;
  PerturbedAction out;
  out.pair = pair;
  out.grid_size = m;
  AffineGridMap amap{pair.A.entries, pair.alpha, GridField::zero(d, d, m)};
  AffineGridMap bmap{pair.B.entries, pair.beta, GridField::zero(d, d, m)};
  switch (kind) {
    case FixtureKind::Conjugacy: {
      FourierField h0 = conjugacy_fixture_h0(pair, params);
      AffineGridMap h0map{IMat::identity(d), std::vector<double>(d, 0.0),
                          synthesize(h0, m)};
      AffineGridMap h0inv = map_inverse(h0map);
      AffineGridMap fm = full_compose(full_compose(h0inv, amap), h0map);
      AffineGridMap gm = full_compose(full_compose(h0inv, bmap), h0map);
      out.f = fm.pert;
      out.g = gm.pert;
      out.commuting_residual = commuting_residual_of(fm, gm);
      out.volume_flag = false;
      break;
    }
    case FixtureKind::StandardMap: {
      out.f = GridField::zero(d, d, m);
      for (long long i = 0; i < out.f.points(); ++i) {
        std::vector<double> x = grid_point(out.f, i);
        out.f.value(i)[0] =
            params.amplitude * std::sin(2.0 * M_PI * (x[0] + x[1]));
      }
      out.g = GridField::zero(d, d, m);
      AffineGridMap fm{pair.A.entries, pair.alpha, out.f};
      out.commuting_residual = commuting_residual_of(fm, bmap);
      out.volume_flag = true;
      break;
    }
    case FixtureKind::IdentityFactor: {
      out.f = GridField::zero(d, d, m);
      for (long long i = 0; i < out.f.points(); ++i) {
        std::vector<double> x = grid_point(out.f, i);
        out.f.value(i)[d - 1] =
            params.amplitude * std::sin(2.0 * M_PI * x[0]);
      }
      out.g = GridField::zero(d, d, m);
      AffineGridMap fm{pair.A.entries, pair.alpha, out.f};
      out.commuting_residual = commuting_residual_of(fm, bmap);
      out.volume_flag = true;
      break;
    }
  }
  double ave = std::max(vec_max_abs(grid_average(out.f)),
                        vec_max_abs(grid_average(out.g)));
  out.zero_average_flag = ave < 1e-12;
  return out;
}

}  // namespace parakam
