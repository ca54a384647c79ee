// Preregistered acceptance battery. Prints one PASS/FAIL line per criterion
// and exits nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "height_oracle.hpp"
#include "splitree/analysis.hpp"
#include "splitree/contour.hpp"
#include "splitree/parallel.hpp"
#include "splitree/simulate.hpp"
#include "splitree/verify.hpp"

using namespace splitree;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::size_t workers() { return std::max(1u, std::thread::hardware_concurrency()); }

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

// Exponential(b, d) scale function, derived from 1/psi by partial fractions.
double exponential_w(double b, double d, double x) {
  const double r = b - d;
  if (r == 0.0) return 1.0 + b * x;
  return (b * std::exp(r * x) - d) / r;
}

VerifySettings settings(LifespanSpec spec, double tau, std::size_t n, std::uint64_t seed) {
  VerifySettings s;
  s.spec = std::move(spec);
  s.chi = 1.0;
  s.tau = tau;
  s.tau_cap = tau;
  s.replicates = n;
  s.seed = seed;
  s.workers = workers();
  return s;
}

double extra(const GofReport& r, const char* key) { return r.extra.at(key).get<double>(); }

// Appends "name p=... pass" style summaries and folds pass flags.
bool summarize(const std::vector<GofReport>& reports, std::ostringstream& out) {
  bool ok = true;
  for (const auto& r : reports) {
    out << ' ' << r.name << (r.kind == "tolerance" ? " err=" + fmt(r.statistic) : " p=" + fmt(r.p_value))
        << (r.passed ? "" : "(fail)");
    ok = ok && (r.passed || r.advisory);
  }
  return ok;
}

Outcome contour_identities() {
  const auto spec = exponential_spec(1.2, 1.0);
  struct Check {
    double kill_gap = 0.0;
    double size_gap = 0.0;
    bool decode_equal = false;
    bool reencode_equal = false;
  };
  const auto checks = run_replicates(1000, workers(), [&](std::size_t i) {
    RngStream rng(20261001, i);
    const auto t = sample_tree(spec, 1.0, 5.0, rng);
    const auto path = jccp(t);
    Check c;
    c.kill_gap = std::fabs(path.kill_time - total_length(t));
    std::vector<double> sizes{path.start_level}, life;
    for (const auto& j : path.jumps) sizes.push_back(j.to - j.from);
    for (const auto& v : t.vertices()) life.push_back(v.omega - v.alpha);
    std::sort(sizes.begin(), sizes.end());
    std::sort(life.begin(), life.end());
    if (sizes.size() != life.size()) {
      c.size_gap = INFINITY;
    } else {
      for (std::size_t k = 0; k < life.size(); ++k) c.size_gap = std::max(c.size_gap, std::fabs(sizes[k] - life[k]));
    }
    const auto back = decode(path);
    c.decode_equal = fixture::canonical(back) == fixture::canonical(t);
    c.reencode_equal = jccp(back) == path;
    return c;
  });
  double kill = 0.0, size = 0.0;
  std::size_t decoded = 0, reencoded = 0;
  for (const auto& c : checks) {
    kill = std::max(kill, c.kill_gap);
    size = std::max(size, c.size_gap);
    decoded += c.decode_equal;
    reencoded += c.reencode_equal;
  }
  const bool ok = kill <= 1e-9 && size <= 1e-9 && decoded == 1000 && reencoded == 1000;
  return {ok, "1000 trees: max|kill-length|=" + fmt(kill) + " max jump/lifespan gap=" + fmt(size) +
                  " decode round trips=" + std::to_string(decoded) + " byte-exact re-encodings=" +
                  std::to_string(reencoded)};
}

Outcome local_times_identity() {
  const auto spec = exponential_spec(0.8, 1.0);
  const auto gaps = run_replicates(1000, workers(), [&](std::size_t i) {
    RngStream rng(20261002, i);
    const auto t = sample_tree(spec, 1.0, 1e6, rng);
    const auto L = local_times(height_profile(jccp(t)));
    const auto Z = generation_lengths(t);
    if (L.size() != Z.size()) return double(INFINITY);
    double g = 0.0;
    for (std::size_t n = 0; n < L.size(); ++n) g = std::max(g, std::fabs(L[n] - Z[n]));
    return g;
  });
  const double worst = *std::max_element(gaps.begin(), gaps.end());
  const auto exact = std::count_if(gaps.begin(), gaps.end(), [](double g) { return g <= 1e-9; });
  return {exact == 1000, "1000 subcritical trees: per-tree max|L_n-Z_n| worst=" + fmt(worst) +
                             " trees within 1e-9=" + std::to_string(exact)};
}

Outcome scale_solver() {
  struct Case {
    const char* name;
    double b, d;
    LifespanSpec spec;
  };
  const std::vector<Case> cases{{"yule b=1", 1.0, 0.0, yule_spec(1.0)},
                                {"exponential b=1.2 d=1", 1.2, 1.0, exponential_spec(1.2, 1.0)},
                                {"critical b=d=1", 1.0, 1.0, exponential_spec(1.0, 1.0)}};
  std::ostringstream out;
  bool ok = true;
  for (const auto& c : cases) {
    const auto table = scale_table(make_model(c.spec), 10.0, 1e-3);
    double sup = 0.0;
    for (std::size_t i = 0; i < table.values().size(); ++i) {
      const double x = 1e-3 * static_cast<double>(i);
      const double exact = c.d == 0.0 ? std::exp(c.b * x) : exponential_w(c.b, c.d, x);
      sup = std::max(sup, std::fabs(table.values()[i] - exact));
    }
    ok = ok && sup <= 1e-6;
    out << ' ' << c.name << " sup=" << fmt(sup);
  }
  return {ok, "[0,10] h=1e-3:" + out.str()};
}

Outcome marginal_law() {
  const auto reports = verify_marginal(settings(exponential_spec(1.2, 1.0), 3.0, 100000, 20261004));
  std::ostringstream out;
  bool ok = summarize(reports, out);
  const double p_zero = exponential_w(1.2, 1.0, 2.0) / exponential_w(1.2, 1.0, 3.0);
  const double mean = exponential_w(1.2, 1.0, 3.0);
  for (const auto& r : reports) {
    if (r.name == "marginal_p_zero") ok = ok && std::fabs(extra(r, "target") - p_zero) <= 1e-9;
    if (r.name == "marginal_conditional_mean") ok = ok && std::fabs(extra(r, "target") - mean) <= 1e-9 * mean;
  }
  return {ok, "N=1e5 W(2)/W(3)=" + fmt(p_zero) + " W(3)=" + fmt(mean) + out.str()};
}

Outcome levy_equivalence() {
  auto s = settings(exponential_spec(1.2, 1.0), 3.0, 100000, 20261005);
  const auto reports = verify_levy_equivalence(s);
  std::ostringstream out;
  bool ok = summarize(reports, out);
  for (const auto& r : reports) ok = ok && r.p_value > 0.01;
  return {ok, "N=1e5 each:" + out.str()};
}

Outcome cpp_law() {
  std::ostringstream out;
  auto sup = verify_cpp(settings(exponential_spec(1.2, 1.0), 3.0, 310000, 20261006));
  bool ok = summarize(sup, out);
  const auto profiles = sup.front().extra.at("profiles").get<std::size_t>();
  ok = ok && profiles >= 100000;
  out << " profiles=" << profiles << ';';

  // Critical case: the closed-form law with W(x) = 1 + b x.
  const double b = 1.0, tau = 3.0;
  const auto crit_model = make_model(exponential_spec(b, b));
  const ScaleFunction W(crit_model, tau);
  double gap = 0.0;
  for (int k = 0; k <= 300; ++k) {
    const double sigma = tau * k / 300.0;
    const double depth = (1.0 / (1.0 + b * (tau - sigma)) - 1.0 / (1.0 + b * tau)) * (1.0 + b * tau) / (b * tau);
    const double coal = (1.0 - 1.0 / (1.0 + b * sigma)) * (1.0 + b * tau) / (b * tau);
    gap = std::max({gap, std::fabs(depth_cdf(W, tau, sigma) - depth), std::fabs(coalescence_cdf(crit_model, tau, sigma) - coal)});
  }
  ok = ok && gap <= 1e-9;
  out << " critical cdf gap=" << fmt(gap);
  auto crit = verify_cpp(settings(exponential_spec(b, b), tau, 400000, 20261016));
  ok = summarize(crit, out) && ok;
  return {ok, "tau=3" + out.str()};
}

Outcome extinction() {
  auto s = settings(exponential_spec(1.2, 1.0), 3.0, 100000, 20261007);
  s.extinction_cap = 150.0;
  const auto start = std::chrono::steady_clock::now();
  const auto reports = verify_extinction(s);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const auto& r = reports.front();
  const double bias = extra(r, "cap_bias");
  const bool ok = r.passed && std::fabs(extra(r, "target") - std::exp(-0.2)) <= 1e-9 && bias < 1e-4 && secs < 300;
  return {ok, "N=1e5 cap=150 extinct=" + fmt(extra(r, "estimate")) + " e^-0.2=" + fmt(std::exp(-0.2)) +
                  " err=" + fmt(r.statistic) + " cap_bias=" + fmt(bias) + " time=" + fmt(secs) + "s"};
}

Outcome conditioning() {
  const auto spec = exponential_spec(1.2, 1.0);
  const bool same = same_parameters(conditioned_spec(spec), exponential_spec(1.0, 1.2), 1e-12);
  const auto reports = verify_conditioning(settings(spec, 3.0, 20000, 20261008));
  std::ostringstream out;
  bool ok = summarize(reports, out);
  for (const auto& r : reports)
    if (r.kind == "test") ok = ok && r.p_value > 0.01;
  return {ok && same, std::string("conditioned spec is Exponential(b=1,d=1.2): ") + (same ? "yes" : "no") +
                          "; N=2e4" + out.str()};
}

Outcome limit_laws_check() {
  std::ostringstream out;
  bool ok = true;

  auto sub = settings(exponential_spec(0.8, 1.0), 30.0, 2300000, 20261009);
  sub.limit_tau = 30.0;
  const auto yaglom = verify_limits(sub);
  ok = summarize(yaglom, out) && ok;
  out << " (n=" << yaglom.front().n << ");";

  auto crit = settings(exponential_spec(1.0, 1.0), 50.0, 200000, 20261019);
  crit.limit_tau = 50.0;
  for (const auto& r : verify_limits(crit))
    out << ' ' << r.name << " recorded gap=" << fmt(extra(r, "gap")) << " mean_gap=" << fmt(extra(r, "mean_gap"))
        << " n=" << r.n << ';';

  const double b = 1.2, d = 1.0, p = 1.0 - d / b;
  auto sup = settings(exponential_spec(b, d), 25.0, 55000, 20261029);
  sup.limit_tau = 25.0;
  const auto growth = verify_limits(sup);
  ok = summarize(growth, out) && ok;
  for (const auto& r : growth) {
    if (r.name == "limit_growth_mean") {
      ok = ok && std::fabs(extra(r, "target") - 1.0 / p) <= 1e-9;
      out << " estimate=" << fmt(extra(r, "estimate")) << " target=" << fmt(1.0 / p);
    }
    if (r.name == "limit_overshoot_functional") ok = ok && std::fabs(extra(r, "target") - p) <= 1e-9;
  }
  auto split = settings(exponential_spec(b, d), 25.0, 1500, 20261039);
  const auto ratio = verify_split(split);
  ok = summarize(ratio, out) && ok;
  const auto& r = ratio.front();
  ok = ok && std::fabs(extra(r, "target") - p) <= 1e-9;
  out << " ratio=" << fmt(extra(r, "estimate")) << " p=" << fmt(p) << " misclassification_bound="
      << fmt(extra(r, "misclassification_bound"));
  return {ok, out.str()};
}

Outcome height_oracle() {
  const std::vector<LifespanSpec> specs{exponential_spec(1.2, 1.0), dirac_spec(1.5, 0.7), exponential_spec(0.8, 1.0),
                                        empirical_spec(2.0, {0.2, 0.5, 1.5})};
  RngStream rng(20261010, 0);
  std::size_t paths = 0, probes = 0, mismatches = 0;
  while (paths < 500) {
    const auto path = sample_levy_reflected(specs[paths % specs.size()], 1.0, 3.0, rng);
    if (path.jumps.size() > 200) continue;
    const auto hp = height_profile(path);
    for (double t : oracle::probe_times(path)) {
      ++probes;
      if (hp.at(t) != oracle::literal_height(path, t)) ++mismatches;
    }
    ++paths;
  }
  return {mismatches == 0, std::to_string(paths) + " paths, " + std::to_string(probes) +
                               " probe times, mismatches=" + std::to_string(mismatches)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"exact contour identities", contour_identities},
      {"local times equal generation sums", local_times_identity},
      {"scale solver", scale_solver},
      {"marginal law", marginal_law},
      {"reflected Levy equivalence", levy_equivalence},
      {"coalescent point process", cpp_law},
      {"extinction probability", extinction},
      {"conditioning on extinction", conditioning},
      {"limit laws", limit_laws_check},
      {"height process oracle", height_oracle},
  };
  const std::vector<double> budget{30.0, 0.0, 10.0, 0.0, 0.0, 0.0, 300.0, 0.0, 0.0, 0.0};
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (budget[k] > 0.0 && secs > budget[k]) {
      o.pass = false;
      o.detail += " over time budget " + fmt(budget[k]) + "s";
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
