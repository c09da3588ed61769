// Command-line surface: classification certificates, resonance tables,
// Diophantine certificates, linearized solves, the nonlinear iteration,
// and the orbit-growth laboratory.  Every command echoes its resolved
// configuration in a JSON manifest and serializes floating-point values
// at fixed precision so identical configs produce identical reports.
//
// Exit codes: 0 success / converged / unlocked; 1 I/O or schema error;
// 2 locked action (gate); 3 unlocked only up to the scan bound;
// 4 non-convergence; 5 degenerate or missing Diophantine data.

#include "CLI11.hpp"
#include "json.hpp"

#include "parakam/estlab.hpp"
#include "parakam/kamloop.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>

using json = nlohmann::ordered_json;
using namespace parakam;

namespace {

// fixed-precision double for deterministic reports
json jd(double x) {
  if (!std::isfinite(x)) return x > 0 ? "inf" : (x < 0 ? "-inf" : "nan");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.15e", x);
  return json::parse(buf);
}

json jvec(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(jd(x));
  return a;
}

json jivec(const IVec& v) {
  json a = json::array();
  for (const auto& x : v) a.push_back(x.convert_to<long long>());
  return a;
}

IMat parse_imat(const json& j, int d) {
  IMat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) m.at(i, k) = j.at(i).at(k).get<long long>();
  return m;
}

ActionPair load_action(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open action file: " + path);
  json j = json::parse(in);
  int d = j.at("dim").get<int>();
  UniMat A = make_unimat(parse_imat(j.at("A"), d));
  UniMat B = make_unimat(parse_imat(j.at("B"), d));
  if (j.contains("alpha_q")) {
    QVec alpha, beta;
    for (const auto& e : j.at("alpha_q"))
      alpha.push_back(Rat(Int(e.at(0).get<std::string>()),
                          Int(e.at(1).get<std::string>())));
    for (const auto& e : j.at("beta_q"))
      beta.push_back(Rat(Int(e.at(0).get<std::string>()),
                         Int(e.at(1).get<std::string>())));
    return make_action_pair(A, B, alpha, beta);
  }
  std::vector<double> alpha = j.at("alpha").get<std::vector<double>>();
  std::vector<double> beta = j.at("beta").get<std::vector<double>>();
  return make_action_pair(A, B, alpha, beta);
}

std::string default_out_dir() {
  const char* env = std::getenv("PARAKAM_OUT_DIR");
  return env ? env : ".";
}

void emit(const std::string& out_dir, const std::string& name,
          const json& report) {
  std::string path = out_dir + "/" + name;
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << report.dump(2) << "\n";
  std::printf("%s\n", report.dump(2).c_str());
}

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Locked: return "Locked";
    case Verdict::Unlocked: return "Unlocked";
    default: return "UnlockedUpTo";
  }
}

const char* kind_name(LockKind k) {
  switch (k) {
    case LockKind::IdentityFactor: return "IdentityFactor";
    case LockKind::ParabolicFactor: return "ParabolicFactor";
    default: return "None";
  }
}

int cmd_classify(const std::string& action, long long n,
                 const std::string& out_dir) {
  ActionPair pair = load_action(action);
  LockCertificate c = classify_locked(pair.A, pair.B, n);
  // with a step-2 generator the per-pair resonance test decides every
  // pair the scan can ever produce, so the bounded verdict is conclusive
  bool conclusive =
      c.verdict != Verdict::UnlockedUpTo || c.generator_step2;
  const char* verdict = c.verdict == Verdict::UnlockedUpTo && conclusive
                            ? "Unlocked"
                            : verdict_name(c.verdict);
  json r = {
      {"command", "classify"},
      {"config", {{"action", action}, {"N", n}}},
      {"result",
       {{"verdict", verdict},
        {"scan_conclusive", conclusive},
        {"kind", kind_name(c.kind)},
        {"witness_k", jivec(c.witness_k)},
        {"witness_m", jivec(c.witness_m)},
        {"pair_k", c.pair_k},
        {"pair_l", c.pair_l},
        {"scan_bound", c.scan_bound},
        {"generator_step2", c.generator_step2},
        {"action_step2", c.action_step2},
        {"evidence", c.evidence}}}};
  emit(out_dir, "classify_report.json", r);
  if (c.verdict == Verdict::Locked) return 2;
  if (c.verdict == Verdict::Unlocked) return 0;
  // a step-2 generator makes the per-pair resonance test conclusive
  return c.generator_step2 ? 0 : 3;
}

int cmd_resonances(const std::string& action, long long n,
                   const std::string& out_dir) {
  ActionPair pair = load_action(action);
  int d = pair.A.dim;
  std::string csv_path = out_dir + "/resonances.csv";
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  for (int i = 0; i < d; ++i) csv << "m" << i + 1 << ",";
  csv << "class,k,l,s,delta,lowest,mn_side,good_l\n";

  // full Euclidean ball for small d; the sublattice of coordinates the
  // dual nilparts can see for large d (class and pair depend only on it)
  std::vector<int> coords;
  if (d <= 3)
    for (int i = 0; i < d; ++i) coords.push_back(i);
  else
    coords = active_coords(pair.A, pair.B);

  long long count = 0;
  IVec m(d, Int(0));
  std::function<void(size_t)> walk = [&](size_t i) {
    if (i == coords.size()) {
      bool zero = true;
      Int n2 = 0;
      for (const auto& x : m) {
        if (x != 0) zero = false;
        n2 += x * x;
      }
      if (zero || n2 > Int(n) * Int(n)) return;
      ResonanceRecord rec = classify_mode(pair.A, pair.B, m);
      if (rec.cls != ModeClass::C2) return;
      for (int c = 0; c < d; ++c)
        csv << m[c].convert_to<long long>() << ",";
      csv << "C2," << rec.k << "," << rec.l << "," << rec.s_of_m << ","
          << rec.delta << "," << (rec.is_lowest_on_A_orbit ? 1 : 0) << ","
          << (rec.mn_side == MNSide::M ? "M"
                                       : rec.mn_side == MNSide::N ? "N"
                                                                  : "Fixed")
          << ","
          << (rec.good_l_sign == LSign::Plus
                  ? "+"
                  : rec.good_l_sign == LSign::Minus ? "-" : "?")
          << "\n";
      ++count;
      return;
    }
    for (long long v = -n; v <= n; ++v) {
      m[coords[i]] = v;
      walk(i + 1);
    }
    m[coords[i]] = 0;
  };
  walk(0);

  json r = {{"command", "resonances"},
            {"config", {{"action", action}, {"N", n}}},
            {"result", {{"rows", count}, {"csv", csv_path}}}};
  emit(out_dir, "resonances_report.json", r);
  return 0;
}

int cmd_diophantine(const std::string& action, long long n, double tau,
                    const std::string& out_dir) {
  ActionPair pair = load_action(action);
  DioCertificate c = diophantine_certificate(pair, tau, n);
  json r = {{"command", "diophantine"},
            {"config", {{"action", action}, {"N", n}, {"tau", jd(tau)}}},
            {"result",
             {{"gamma_sdc", jd(c.gamma_sdc)},
              {"sdc_witness", jivec(c.sdc_witness)},
              {"gamma_res", jd(c.gamma_res)},
              {"res_witness", jivec(c.res_witness)},
              {"res_k", c.res_k},
              {"res_l", c.res_l},
              {"resonances_scanned", c.resonances_scanned}}}};
  emit(out_dir, "diophantine_report.json", r);
  return 0;
}

int cmd_solve(const std::string& action, long long n, double tau,
              unsigned seed, const std::string& out_dir) {
  ActionPair pair = load_action(action);
  LockCertificate cls = classify_locked(pair.A, pair.B, n);
  if (cls.verdict == Verdict::Locked) {
    std::fprintf(stderr, "error: action is locked (%s)\n",
                 kind_name(cls.kind));
    return 2;
  }
  int d = pair.A.dim;

  // coboundary fixture: random smooth ground truth with spectral decay,
  // supported on the coordinates the dual nilparts act on
  std::vector<int> coords;
  if (d <= 3)
    for (int i = 0; i < d; ++i) coords.push_back(i);
  else
    coords = active_coords(pair.A, pair.B);
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> mdist(-8, 8);
  std::uniform_real_distribution<double> pdist(0.0, 2 * M_PI);
  FourierField h_star = FourierField::zero(d, d, 8);
  for (int t = 0; t < 60; ++t) {
    Mode m{};
    double n2 = 0;
    for (int c : coords) {
      m[c] = mdist(rng);
      n2 += static_cast<double>(m[c]) * m[c];
    }
    if (n2 == 0.0 || n2 > 64.0) continue;
    double decay = std::exp(-std::sqrt(n2) / 2.0);
    CVec v(d), vc(d);
    for (int c = 0; c < d; ++c) {
      double ph = pdist(rng);
      v[c] = decay * std::complex<double>(std::cos(ph), std::sin(ph));
      vc[c] = std::conj(v[c]);
    }
    h_star.set(m, v);
    Mode mc{};
    for (int c = 0; c < d; ++c) mc[c] = -m[c];
    h_star.set(mc, vc);
  }
  h_star.clear_average();

  PairSet qn = resonance_pairs_up_to(pair.A, pair.B, n);
  FieldMap p;
  for (auto [s, t] : qn.pairs)
    p[{s, t}] = twisted_diff_vec(h_star, pair, s, t);
  SolveReport sol = solve_vector(p, pair, n, 0.05, tau);

  double recovery = norm_r(sub(sol.h, h_star), 0.0);
  double worst_pt = 0.0;
  for (const auto& [kl, f] : sol.p_tilde)
    worst_pt = std::max(worst_pt, norm_r(f, 0.0));
  json norms = json::object();
  for (const auto& [r, v] : sol.h_norm)
    norms[std::to_string(r)] = jd(v);
  json r = {{"command", "solve"},
            {"config",
             {{"action", action},
              {"N", n},
              {"tau", jd(tau)},
              {"seed", seed},
              {"fixture", "coboundary"}}},
            {"result",
             {{"recovery_error", jd(recovery)},
              {"worst_p_tilde", jd(worst_pt)},
              {"h_norms", norms},
              {"count_c1_f", sol.count_c1_f},
              {"count_c1_g", sol.count_c1_g},
              {"count_c2_prime", sol.count_c2_prime},
              {"count_c2_dprime", sol.count_c2_dprime},
              {"count_c3", sol.count_c3},
              {"tameness_ratio", jd(sol.tameness_ratio)}}}};
  emit(out_dir, "solve_report.json", r);
  return 0;
}

const char* status_name(KamStatus s) {
  switch (s) {
    case KamStatus::Converged: return "Converged";
    case KamStatus::MaxStepsReached: return "MaxStepsReached";
    case KamStatus::DivergenceDetected: return "DivergenceDetected";
    case KamStatus::NoProgress: return "NoProgress";
    default: return "SmallnessViolated";
  }
}

int cmd_kam(const std::string& action, const std::string& fixture,
            double eps, double amplitude, int grid, int steps, int cap_d,
            double tau, double target, unsigned seed,
            const std::string& out_dir) {
  ActionPair pair = load_action(action);
  LockCertificate cls = classify_locked(pair.A, pair.B, 30);
  if (cls.verdict == Verdict::Locked) {
    std::fprintf(stderr, "error: action is locked (%s); no conjugacy\n",
                 kind_name(cls.kind));
    return 2;
  }
  DioCertificate dio = diophantine_certificate(pair, tau, 30);  // may throw

  FixtureKind kind;
  if (fixture == "conjugacy")
    kind = FixtureKind::Conjugacy;
  else if (fixture == "standard-map")
    kind = FixtureKind::StandardMap;
  else if (fixture == "identity-factor")
    kind = FixtureKind::IdentityFactor;
  else
    throw std::runtime_error("unknown fixture: " + fixture);

  FixtureParams fp;
  fp.amplitude = amplitude;
  fp.grid_size = grid;
  fp.seed = seed;
  PerturbedAction input = make_fixture(kind, pair, fp);
  KamConfig cfg;
  cfg.eps = eps;
  cfg.cap_d = cap_d;
  cfg.tau = tau;
  cfg.n_max = steps;
  cfg.target = target;
  KamReport rep = kam_run(input, cfg);

  std::string csv_path = out_dir + "/kam_steps.csv";
  std::ofstream csv(csv_path);
  csv << "n,eps_n,N_n,delta0,delta_l,h_norm1,ave_h_after\n";
  for (const auto& s : rep.steps) {
    char line[256];
    std::snprintf(line, sizeof line, "%d,%.15e,%lld,%.15e,%.15e,%.15e,%.15e\n",
                  s.n, s.eps_n, s.n_freq, s.delta0, s.delta_l, s.h_norm1,
                  s.ave_h_after);
    csv << line;
  }
  json r = {{"command", "kam"},
            {"config",
             {{"action", action},
              {"fixture", fixture},
              {"eps", jd(eps)},
              {"amplitude", jd(amplitude)},
              {"grid", grid},
              {"steps", steps},
              {"D", cap_d},
              {"tau", jd(tau)},
              {"target", jd(target)},
              {"seed", seed}}},
            {"result",
             {{"status", status_name(rep.status)},
              {"steps", (long long)rep.steps.size()},
              {"final_delta0", jd(rep.final_delta0)},
              {"residual_f", jd(rep.residual_f)},
              {"residual_g", jd(rep.residual_g)},
              {"jacobian_mean", jd(rep.jacobian_mean)},
              {"gamma_sdc", jd(dio.gamma_sdc)},
              {"commuting_residual", jd(input.commuting_residual)},
              {"csv", csv_path}}}};
  emit(out_dir, "kam_report.json", r);
  return rep.status == KamStatus::Converged ? 0 : 4;
}

int cmd_estlab(const std::string& action, double r, int count,
               double min_norm, double max_norm, unsigned seed,
               const std::string& out_dir) {
  ActionPair pair = load_action(action);
  auto samples = sample_c3_lowest(pair, min_norm, max_norm, count, seed);
  if (samples.empty()) {
    std::fprintf(stderr, "error: no non-resonant lowest modes in range\n");
    return 5;
  }
  std::string csv_path = out_dir + "/estlab_probes.csv";
  std::ofstream csv(csv_path);
  csv << "norm_m,r,sum_plus,sum_minus,envelope,ratio_best,good_side,"
         "matches_geometry,k_window,l_window\n";
  double max_ratio = 0.0;
  int matches = 0;
  bool expansion_all = true;
  for (const auto& m : samples) {
    SumProbe probe = probe_double_sum(pair, m, r);
    DriftReport drift = probe_drift(pair, m);
    expansion_all = expansion_all && drift.expansion_exact;
    max_ratio = std::max(max_ratio, probe.ratio_best);
    matches += probe.good_side_matches_geometry ? 1 : 0;
    char line[512];
    std::snprintf(line, sizeof line,
                  "%.15e,%.15e,%.15e,%.15e,%.15e,%.15e,%c,%d,%lld,%lld\n",
                  std::sqrt(norm2(m).convert_to<double>()), r,
                  probe.sum_plus_l, probe.sum_minus_l, probe.envelope,
                  probe.ratio_best, probe.good_side_positive ? '+' : '-',
                  probe.good_side_matches_geometry ? 1 : 0, probe.k_window,
                  probe.l_window);
    csv << line;
  }
  json rep = {{"command", "estlab"},
              {"config",
               {{"action", action},
                {"r", jd(r)},
                {"count", count},
                {"min_norm", jd(min_norm)},
                {"max_norm", jd(max_norm)},
                {"seed", seed}}},
              {"result",
               {{"samples", (long long)samples.size()},
                {"max_ratio", jd(max_ratio)},
                {"expansion_exact", expansion_all},
                {"good_side_matches", matches},
                {"csv", csv_path}}}};
  emit(out_dir, "estlab_report.json", rep);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact classification and numerical conjugation of "
               "commuting parabolic affine torus actions"};
  app.require_subcommand(1);

  std::string action, out_dir = default_out_dir(), fixture = "conjugacy";
  long long N = 30;
  double tau = 1.2, eps = 1e-3, r_exp = 40.0, target = 1e-9;
  double amplitude = 1e-3, min_norm = 10.0, max_norm = 100.0;
  int grid = 64, steps = 12, cap_d = 0, threads = 1, count = 12;
  unsigned seed = 1;

  auto add_common = [&](CLI::App* c, bool need_action = true) {
    auto* opt = c->add_option("--action", action, "action file (JSON)");
    if (need_action) opt->required();
    c->add_option("--out", out_dir, "output directory");
    c->add_option("--threads", threads, "worker cap (recorded; single-core)");
    c->add_option("--seed", seed, "random seed");
  };

  auto* c_classify = app.add_subcommand("classify", "locked/unlocked");
  add_common(c_classify);
  c_classify->add_option("--N", N, "resonance scan bound");

  auto* c_res = app.add_subcommand("resonances", "resonant mode table");
  add_common(c_res);
  c_res->add_option("--N", N, "mode ball radius");

  auto* c_dio = app.add_subcommand("diophantine", "divisor certificate");
  add_common(c_dio);
  c_dio->add_option("--N", N, "scan bound");
  c_dio->add_option("--tau", tau, "Diophantine exponent");

  auto* c_solve = app.add_subcommand("solve", "linearized solve fixture");
  add_common(c_solve);
  c_solve->add_option("--N", N, "truncation");
  c_solve->add_option("--tau", tau, "Diophantine exponent");

  auto* c_kam = app.add_subcommand("kam", "nonlinear iteration");
  add_common(c_kam);
  c_kam->add_option("--fixture", fixture,
                    "conjugacy | standard-map | identity-factor");
  c_kam->add_option("--eps", eps, "schedule base");
  c_kam->add_option("--amplitude", amplitude, "fixture amplitude");
  c_kam->add_option("--grid", grid, "grid size M");
  c_kam->add_option("--steps", steps, "max steps");
  c_kam->add_option("--D", cap_d, "schedule exponent (0 = d(d+1))");
  c_kam->add_option("--tau", tau, "Diophantine exponent");
  c_kam->add_option("--target", target, "stop threshold");

  auto* c_est = app.add_subcommand("estlab", "orbit-growth probes");
  add_common(c_est);
  c_est->add_option("--r", r_exp, "sum exponent");
  c_est->add_option("--count", count, "sample count");
  c_est->add_option("--min-norm", min_norm, "smallest |m|");
  c_est->add_option("--max-norm", max_norm, "largest |m|");

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_classify->parsed()) return cmd_classify(action, N, out_dir);
    if (c_res->parsed()) return cmd_resonances(action, N, out_dir);
    if (c_dio->parsed()) return cmd_diophantine(action, N, tau, out_dir);
    if (c_solve->parsed()) return cmd_solve(action, N, tau, seed, out_dir);
    if (c_kam->parsed())
      return cmd_kam(action, fixture, eps, amplitude, grid, steps, cap_d,
                     tau, target, seed, out_dir);
    if (c_est->parsed())
      return cmd_estlab(action, r_exp, count, min_norm, max_norm, seed,
                        out_dir);
  } catch (const DegenerateResonance& e) {
    std::fprintf(stderr, "error: degenerate resonance: %s\n", e.what());
    return 5;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
