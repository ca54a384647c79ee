#include "splitree/verify.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>

#include "splitree/contour.hpp"
#include "splitree/parallel.hpp"
#include "splitree/simulate.hpp"

namespace splitree {
namespace {

// Stream families, one per suite and role.
enum Tag : std::uint64_t {
  kMarginal = 1,
  kCpp,
  kLevyTree,
  kLevyPath,
  kJirinaTree,
  kJirinaTrace,
  kLocalTimes,
  kAgesTree,
  kAgesOvershoot,
  kSplit,
  kLimitWidth,
  kLimitOvershoot,
  kExtinction,
  kCondReject,
  kCondDirect,
};

RngStream stream(const VerifySettings& s, Tag tag, std::size_t i) { return RngStream(derive_seed(s.seed, tag), i); }

PsiModel analytic_model(const VerifySettings& s) {
  LifespanSpec spec = s.spec;
  spec.b *= 1.0 + s.perturb_b;
  return make_model(spec);
}

GofReport seeded(GofReport r, const VerifySettings& s) {
  r.seed = s.seed;
  return r;
}

GofReport named(GofReport r, std::string name, const VerifySettings& s) {
  r.name = std::move(name);
  return seeded(std::move(r), s);
}

GofReport skipped(std::string name, const std::string& reason, const VerifySettings& s) {
  GofReport r;
  r.name = std::move(name);
  r.kind = "skipped";
  r.p_value = 1.0;
  r.passed = true;
  r.advisory = true;
  r.extra["reason"] = reason;
  return seeded(std::move(r), s);
}

GofReport failed(std::string name, const std::string& reason, const VerifySettings& s) {
  GofReport r;
  r.name = std::move(name);
  r.kind = "error";
  r.extra["error"] = reason;
  return seeded(std::move(r), s);
}

double mean_of(const std::vector<double>& x) {
  return x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double se_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()));
}

double default_limit_tau(Criticality c) {
  switch (c) {
    case Criticality::Subcritical: return 30.0;
    case Criticality::Critical: return 50.0;
    case Criticality::Supercritical: return 25.0;
  }
  return 30.0;
}

}  // namespace

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("correlation needs two equal samples");
  const double mx = mean_of(x), my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<GofReport> verify_marginal(const VerifySettings& s) {
  const auto model = analytic_model(s);
  const ScaleFunction W(model, s.tau);
  const Marginal m = marginal(W, s.chi, s.tau);
  const auto widths = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kMarginal, i);
    return static_cast<std::uint64_t>(sample_width(s.spec, s.chi, s.tau, rng));
  });
  std::vector<std::uint64_t> cond;
  for (auto w : widths)
    if (w > 0) cond.push_back(w);
  const double n = static_cast<double>(widths.size());
  const double p0 = m.p_zero;
  std::vector<GofReport> out;
  out.push_back(named(z_report("", static_cast<double>(widths.size() - cond.size()) / n, p0, std::sqrt(p0 * (1 - p0) / n),
                               widths.size()),
                      "marginal_p_zero", s));
  out.push_back(named(gof_geometric(cond, m.success), "marginal_geometric", s));
  std::vector<double> cd(cond.begin(), cond.end());
  auto mean = tolerance_report("", std::fabs(mean_of(cd) - m.mean_conditional) / m.mean_conditional, 0.02, cd.size());
  mean.extra["estimate"] = mean_of(cd);
  mean.extra["target"] = m.mean_conditional;
  out.push_back(named(std::move(mean), "marginal_conditional_mean", s));
  return out;
}

std::vector<GofReport> verify_cpp(const VerifySettings& s) {
  const auto model = analytic_model(s);
  const ScaleFunction W(model, s.tau);
  const auto profiles = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kCpp, i);
    const auto t = sample_tree(s.spec, s.chi, s.tau, rng);
    if (width(t, s.tau) == 0) return std::vector<double>{};
    return coalescent_profile(t, s.tau).depths;
  });
  std::vector<double> positive, a1, a2;
  std::size_t count = 0;
  for (const auto& d : profiles) {
    if (d.empty()) continue;
    ++count;
    positive.insert(positive.end(), d.begin(), d.end() - 1);
    if (d.size() >= 3) {
      a1.push_back(d[0]);
      a2.push_back(d[1]);
    }
  }
  std::vector<GofReport> out;
  auto law = gof_ks(positive, [&](double x) { return depth_cdf(W, s.tau, x); });
  law.extra["profiles"] = count;
  out.push_back(named(std::move(law), "cpp_depth_law", s));
  out.push_back(named(gof_ks_two_sample(a1, a2), "cpp_a1_vs_a2", s));
  const double rho = pearson_correlation(a1, a2);
  auto corr = tolerance_report("", std::fabs(rho), 3.0 / std::sqrt(static_cast<double>(a1.size())), a1.size());
  corr.extra["correlation"] = rho;
  out.push_back(named(std::move(corr), "cpp_a1_a2_correlation", s));
  return out;
}

std::vector<GofReport> verify_levy_equivalence(const VerifySettings& s) {
  const auto from_trees = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kLevyTree, i);
    return summarize(jccp(sample_tree(s.spec, s.chi, s.tau, rng)), s.tau);
  });
  const auto from_paths = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kLevyPath, i);
    return summarize(sample_levy_reflected(s.spec, std::min(s.chi, s.tau), s.tau, rng), s.tau);
  });
  auto column = [](const std::vector<ExcursionSummary>& v, auto field) {
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) out.push_back(field(x));
    return out;
  };
  const auto kill = [](const ExcursionSummary& x) { return x.kill_time; };
  const auto visits = [](const ExcursionSummary& x) { return static_cast<double>(x.tau_visits); };
  const auto low = [](const ExcursionSummary& x) { return x.first_excursion_min; };
  return {
      named(gof_ks_two_sample(column(from_trees, kill), column(from_paths, kill)), "levy_kill_time", s),
      named(gof_ks_two_sample(column(from_trees, visits), column(from_paths, visits)), "levy_tau_visits", s),
      named(gof_ks_two_sample(column(from_trees, low), column(from_paths, low)), "levy_first_excursion_min", s),
  };
}

std::vector<GofReport> verify_jirina(const VerifySettings& s) {
  if (s.spec.q() > 0.0) return {skipped("jirina", "lifespans must be finite", s)};
  if (!std::isfinite(s.chi)) return {skipped("jirina", "chi must be finite", s)};
  const auto tree_z = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kJirinaTree, i);
    auto z = generation_lengths(sample_generations(s.spec, s.chi, 2, rng));
    z.resize(3, 0.0);
    return z;
  });
  const auto trace_z = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kJirinaTrace, i);
    return jirina_trace(s.spec, s.chi, 2, rng).z;
  });
  std::vector<GofReport> out;
  for (std::size_t g : {1, 2}) {
    std::vector<double> a, b;
    for (const auto& z : tree_z) a.push_back(z[g]);
    for (const auto& z : trace_z) b.push_back(z[g]);
    out.push_back(named(gof_ks_two_sample(a, b), "jirina_generation_" + std::to_string(g), s));
  }
  return out;
}

std::vector<GofReport> verify_local_times(const VerifySettings& s) {
  struct Gap {
    double local = 0.0;
    double length = 0.0;
  };
  const auto gaps = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kLocalTimes, i);
    const auto t = sample_tree(s.spec, s.chi, s.tau_cap, rng);
    const auto path = jccp(t);
    const auto L = local_times(height_profile(path));
    auto Z = generation_lengths(t);
    Gap g;
    if (L.size() != Z.size()) {
      g.local = kInf;
    } else {
      for (std::size_t n = 0; n < L.size(); ++n) g.local = std::max(g.local, std::fabs(L[n] - Z[n]));
    }
    g.length = std::fabs(path.kill_time - total_length(t));
    return g;
  });
  double local = 0.0, length = 0.0;
  for (const auto& g : gaps) {
    local = std::max(local, g.local);
    length = std::max(length, g.length);
  }
  return {named(tolerance_report("", local, 1e-9, gaps.size()), "local_times_equal_generation_sums", s),
          named(tolerance_report("", length, 1e-9, gaps.size()), "kill_time_equals_length", s)};
}

std::vector<GofReport> verify_ages(const VerifySettings& s) {
  const auto per_tree = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kAgesTree, i);
    const auto t = sample_tree(s.spec, s.chi, s.tau, rng);
    std::vector<AgeResidual::Entry> e;
    if (width(t, s.tau) >= 2) {
      e = ages_residuals(t, s.tau).entries;
      e.erase(e.begin());
    }
    return e;
  });
  std::vector<double> ages, residuals;
  for (const auto& v : per_tree)
    for (const auto& e : v) {
      ages.push_back(e.age);
      residuals.push_back(e.residual);
    }
  if (ages.empty()) return {failed("ages", "no tree had two individuals alive at tau", s)};
  const auto reference = run_replicates(ages.size(), s.workers, [&](std::size_t i) {
    auto rng = stream(s, kAgesOvershoot, i);
    for (;;)
      if (auto o = sample_overshoot(s.spec, s.tau, rng)) return *o;
  });
  std::vector<double> under, over;
  for (const auto& o : reference) {
    under.push_back(o.undershoot);
    over.push_back(o.overshoot);
  }
  return {named(gof_ks_two_sample(ages, under), "ages_vs_undershoot", s),
          named(gof_ks_two_sample(residuals, over), "residuals_vs_overshoot", s)};
}

std::vector<GofReport> verify_split(const VerifySettings& s) {
  const auto model = make_model(s.spec);
  if (model.criticality != Criticality::Supercritical) return {skipped("split", "law is not supercritical", s)};
  if (model.spec.q() >= model.spec.b) return {skipped("split", "every individual is immortal", s)};
  const DescendanceClassifier cls(model, s.horizon_margin);
  const auto stats = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kSplit, i);
    const auto t = sample_tree(s.spec, s.chi, s.tau, rng);
    return cls.classify(t, s.tau, rng);
  });
  double inf = 0.0, all = 0.0;
  std::size_t trees = 0;
  for (const auto& w : stats)
    if (w.xi > 0) {
      inf += static_cast<double>(w.xi_inf);
      all += static_cast<double>(w.xi);
      ++trees;
    }
  if (trees < 2) return {failed("split_proportion", "too few surviving trees", s)};
  const double ratio = inf / all;
  double ss = 0.0;
  for (const auto& w : stats)
    if (w.xi > 0) {
      const double d = static_cast<double>(w.xi_inf) - ratio * static_cast<double>(w.xi);
      ss += d * d;
    }
  const double se = std::sqrt(ss * static_cast<double>(trees) / static_cast<double>(trees - 1)) / all;
  auto r = z_report("", ratio, psi_prime(model, model.eta), se, trees);
  r.extra["horizon"] = s.tau + s.horizon_margin;
  r.extra["misclassification_bound"] = cls.misclassification_bound();
  return {named(std::move(r), "split_proportion", s)};
}

std::vector<GofReport> verify_limits(const VerifySettings& s) {
  const auto model = make_model(s.spec);
  const double tau = s.limit_tau.value_or(default_limit_tau(model.criticality));
  const auto widths = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kLimitWidth, i);
    return static_cast<std::uint64_t>(sample_width(s.spec, s.chi, tau, rng));
  });
  std::vector<std::uint64_t> alive;
  for (auto w : widths)
    if (w > 0) alive.push_back(w);
  std::vector<GofReport> out;
  const auto laws = limit_laws(model);
  switch (model.criticality) {
    case Criticality::Subcritical: {
      auto r = gof_geometric(alive, *laws.yaglom_success);
      r.extra["tau"] = tau;
      out.push_back(named(std::move(r), "limit_yaglom", s));
      break;
    }
    case Criticality::Critical: {
      std::vector<double> scaled;
      for (auto w : alive) scaled.push_back(static_cast<double>(w) / tau);
      const double rate = *laws.critical_tail_rate;
      auto r = gof_ks(scaled, [rate](double x) { return -std::expm1(-rate * x); });
      r.advisory = true;
      r.extra["tau"] = tau;
      r.extra["gap"] = r.statistic;
      r.extra["mean_gap"] = mean_of(scaled) - 1.0 / rate;
      r.passed = true;
      out.push_back(named(std::move(r), "limit_critical_exponential", s));
      break;
    }
    case Criticality::Supercritical: {
      const double p = *laws.growth_rate;
      std::vector<double> scaled;
      for (auto w : alive) scaled.push_back(std::exp(-model.eta * tau) * static_cast<double>(w));
      const double est = mean_of(scaled);
      auto r = tolerance_report("", std::fabs(est * p - 1.0), 0.05, scaled.size());
      r.extra["estimate"] = est;
      r.extra["target"] = 1.0 / p;
      r.extra["se"] = se_of(scaled);
      r.extra["tau"] = tau;
      out.push_back(named(std::move(r), "limit_growth_mean", s));

      const auto overs = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
        auto rng = stream(s, kLimitOvershoot, i);
        for (;;)
          if (auto o = sample_overshoot(s.spec, s.overshoot_level, rng)) return -std::expm1(-model.eta * o->overshoot);
      });
      out.push_back(named(z_report("", mean_of(overs), p, se_of(overs), overs.size()), "limit_overshoot_functional", s));
      break;
    }
  }
  return out;
}

std::vector<GofReport> verify_extinction(const VerifySettings& s) {
  const auto model = analytic_model(s);
  const auto reach = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kExtinction, i);
    return static_cast<char>(reaches_level(s.spec, s.chi, s.extinction_cap, rng));
  });
  const double extinct =
      static_cast<double>(std::count(reach.begin(), reach.end(), 0)) / static_cast<double>(reach.size());
  const double target = extinction_prob(model, s.chi);
  auto r = tolerance_report("", std::fabs(extinct - target), 0.005, reach.size());
  r.extra["estimate"] = extinct;
  r.extra["target"] = target;
  r.extra["cap"] = s.extinction_cap;
  // P(extinct by the cap) - P(extinct) for a tree that reached the cap.
  if (s.chi < s.extinction_cap) {
    const ScaleFunction W(model, s.extinction_cap, 0.01);
    r.extra["cap_bias"] = target - W(s.extinction_cap - s.chi) / W(s.extinction_cap);
  }
  return {named(std::move(r), "extinction_probability", s)};
}

std::vector<GofReport> verify_conditioning(const VerifySettings& s) {
  const auto model = make_model(s.spec);
  if (model.criticality != Criticality::Supercritical || !std::isfinite(s.chi))
    return {skipped("conditioning", "law is not supercritical or chi is infinite", s)};
  const auto cond = conditioned_spec(s.spec);
  std::vector<GofReport> out;
  auto rate = tolerance_report("", std::fabs(cond.b - (s.spec.b - model.eta)), 1e-12, 1);
  rate.extra["conditioned"] = cond.to_json();
  out.push_back(named(std::move(rate), "conditioned_birth_rate", s));

  struct Stat {
    double length = 0.0;
    double mid_width = 0.0;
  };
  const double mid = 0.5 * s.tau;
  const auto rejected = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kCondReject, i);
    for (std::size_t attempt = 0; attempt < 1000000; ++attempt)
      if (auto t = sample_tree_if_extinct(s.spec, s.chi, s.conditioning_cap, rng))
        return Stat{total_length(*t), static_cast<double>(width(*t, mid))};
    throw std::runtime_error("extinction is too rare to condition on");
  });
  const auto direct = run_replicates(s.replicates, s.workers, [&](std::size_t i) {
    auto rng = stream(s, kCondDirect, i);
    const auto t = sample_tree(cond, s.chi, s.conditioning_cap, rng);
    return Stat{total_length(t), static_cast<double>(width(t, mid))};
  });
  std::vector<double> la, lb, wa, wb;
  for (const auto& x : rejected) {
    la.push_back(x.length);
    wa.push_back(x.mid_width);
  }
  for (const auto& x : direct) {
    lb.push_back(x.length);
    wb.push_back(x.mid_width);
  }
  out.push_back(named(gof_ks_two_sample(la, lb), "conditioned_kill_time", s));
  out.push_back(named(gof_ks_two_sample(wa, wb), "conditioned_mid_width", s));
  return out;
}

std::vector<std::string> suite_names() {
  return {"marginal", "cpp", "levy-equivalence", "jirina", "local-times", "ages",
          "split", "limits", "extinction", "conditioning"};
}

bool is_suite(const std::string& name) {
  const auto names = suite_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::vector<GofReport> run_suite(const std::string& name, const VerifySettings& s) {
  static const std::map<std::string, std::function<std::vector<GofReport>(const VerifySettings&)>> table{
      {"marginal", verify_marginal},       {"cpp", verify_cpp},
      {"levy-equivalence", verify_levy_equivalence},
      {"jirina", verify_jirina},           {"local-times", verify_local_times},
      {"ages", verify_ages},               {"split", verify_split},
      {"limits", verify_limits},           {"extinction", verify_extinction},
      {"conditioning", verify_conditioning},
  };
  const auto it = table.find(name);
  if (it == table.end()) throw std::invalid_argument("unknown suite: " + name);
  if (s.replicates == 0) return {skipped(name, "no replicates", s)};
  try {
    return it->second(s);
  } catch (const std::exception& e) {
    return {failed(name, e.what(), s)};
  }
}

}  // namespace splitree
