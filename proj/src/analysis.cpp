#include "splitree/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

#include "splitree/simulate.hpp"

namespace splitree {

// ----- coalescent point process -----------------------------------------

std::vector<VertexId> alive_in_order(const ChronologicalTree& tree, double tau) {
  std::vector<std::pair<TreePoint, VertexId>> pts;
  const auto& vs = tree.vertices();
  for (VertexId v = 0; v < vs.size(); ++v)
    if (vs[v].alpha < tau && tau <= vs[v].omega) pts.push_back({TreePoint{tree.label_of(v), tau}, v});
  std::sort(pts.begin(), pts.end(),
            [&](const auto& x, const auto& y) { return linear_compare(tree, x.first, y.first) < 0; });
  std::vector<VertexId> out;
  out.reserve(pts.size());
  for (const auto& p : pts) out.push_back(p.second);
  return out;
}

CoalescentProfile coalescent_profile(const ChronologicalTree& tree, double tau) {
  const auto alive = alive_in_order(tree, tau);
  if (alive.empty()) throw std::invalid_argument("no individual alive at tau");
  CoalescentProfile prof;
  prof.tau = tau;
  for (std::size_t i = 0; i + 1 < alive.size(); ++i) {
    const TreePoint x{tree.label_of(alive[i]), tau}, y{tree.label_of(alive[i + 1]), tau};
    prof.depths.push_back(coalescence_point(tree, x, y).level);
  }
  prof.depths.push_back(0.0);
  return prof;
}

CoalescentProfile coalescent_profile(const ContourPath& path, double tau) {
  const auto visits = level_visits(path, tau);
  if (visits.empty()) throw std::invalid_argument("no individual alive at tau");
  CoalescentProfile prof;
  prof.tau = tau;
  for (std::size_t i = 0; i + 1 < visits.size(); ++i) prof.depths.push_back(coalescence_level(path, visits[i], visits[i + 1]));
  prof.depths.push_back(0.0);
  return prof;
}

double coalescence_cdf(const ScaleFunction& W, double tau, double sigma) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(sigma >= 0.0 && sigma <= tau)) throw std::invalid_argument("sigma must lie in [0, tau]");
  if (sigma == tau) return 1.0;
  return (1.0 - 1.0 / W(sigma)) / (1.0 - 1.0 / W(tau));
}

double coalescence_cdf(const PsiModel& model, double tau, double sigma) {
  return coalescence_cdf(ScaleFunction(model, tau), tau, sigma);
}

double depth_cdf(const ScaleFunction& W, double tau, double sigma) {
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (sigma <= 0.0) return 0.0;
  if (sigma >= tau) return 1.0;
  const double wt = 1.0 / W(tau);
  return (1.0 / W(tau - sigma) - wt) / (1.0 - wt);
}

Marginal marginal(const ScaleFunction& W, double chi, double tau) {
  if (!(chi > 0.0) || !(tau > 0.0)) throw std::invalid_argument("chi and tau must be positive");
  const double wt = W(tau);
  Marginal m;
  m.p_zero = chi > tau ? 0.0 : W(tau - chi) / wt;
  m.success = 1.0 / wt;
  m.mean_conditional = wt;
  return m;
}

Marginal marginal(const PsiModel& model, double chi, double tau) { return marginal(ScaleFunction(model, tau), chi, tau); }

double extinction_prob(const PsiModel& model, double chi) {
  if (!(chi > 0.0)) throw std::invalid_argument("chi must be positive");
  return std::exp(-model.eta * chi);
}

LimitLaws limit_laws(const PsiModel& model) {
  LimitLaws l;
  l.criticality = model.criticality;
  l.eta = model.eta;
  switch (model.criticality) {
    case Criticality::Subcritical:
      l.yaglom_success = 1.0 - model.spec.m();
      break;
    case Criticality::Critical: {
      const double s = psi_second(model, 0.0);
      if (!std::isfinite(s)) throw std::invalid_argument("critical limit needs a finite second moment");
      l.critical_tail_rate = 0.5 * s;
      break;
    }
    case Criticality::Supercritical:
      l.growth_rate = psi_prime(model, model.eta);
      l.split_p = l.growth_rate;
      break;
  }
  return l;
}

// ----- ages and descendance ---------------------------------------------

AgeResidual ages_residuals(const ChronologicalTree& tree, double tau) {
  const auto alive = alive_in_order(tree, tau);
  if (alive.empty()) throw std::invalid_argument("no individual alive at tau");
  AgeResidual out;
  out.tau = tau;
  for (std::size_t i = 0; i < alive.size(); ++i) {
    const auto& v = tree.vertex(alive[i]);
    if (tree.cap() && v.omega >= *tree.cap() && v.omega_uncut == v.omega)
      throw std::invalid_argument("cap too low to observe residual lifetimes");
    out.entries.push_back({tau - v.alpha, v.omega_uncut - tau, i == 0});
  }
  return out;
}

DescendanceClassifier::DescendanceClassifier(const PsiModel& model, double margin) : model_(model), margin_(margin) {
  if (!(margin > 0.0) || !std::isfinite(margin)) throw std::invalid_argument("horizon must exceed tau");
  const ScaleFunction W(model, margin);
  const double wm = W(margin);
  double bound = std::exp(-model.eta * margin);
  const int grid = 400;
  for (int k = 0; k <= grid; ++k) {
    const double r = margin * k / grid;
    const double survive_margin = 1.0 - W(margin - r) / wm;
    const double infinite = 1.0 - std::exp(-model.eta * r);
    bound = std::max(bound, survive_margin - infinite);
  }
  bound_ = std::min(1.0, bound);
}

WidthStats DescendanceClassifier::classify(const ChronologicalTree& tree, double tau, RngStream& rng) const {
  WidthStats ws;
  ws.tau = tau;
  ws.horizon = tau + margin_;
  ws.misclassification_bound = bound_;
  const auto& vs = tree.vertices();
  const bool complete = !tree.cap() || *tree.cap() >= ws.horizon;
  std::vector<double> reach;
  if (complete) {
    // Highest death level in each subtree; ids are in depth-first pre-order.
    reach.resize(vs.size());
    for (std::size_t i = vs.size(); i-- > 0;) {
      reach[i] = vs[i].omega;
      for (VertexId c : vs[i].children) reach[i] = std::max(reach[i], reach[c]);
    }
  }
  for (VertexId v = 0; v < vs.size(); ++v) {
    const auto& x = vs[v];
    if (!(x.alpha < tau && tau <= x.omega)) continue;
    ++ws.xi;
    bool survives;
    if (complete) {
      double top = x.omega;
      for (VertexId c : x.children)
        if (vs[c].alpha > tau) top = std::max(top, reach[c]);
      survives = top >= ws.horizon;
    } else {
      const double residual = x.omega_uncut - tau;
      survives = residual > 0.0 && reaches_level(model_.spec, residual, margin_, rng);
    }
    if (survives) ++ws.xi_inf;
  }
  ws.xi_fin = ws.xi - ws.xi_inf;
  return ws;
}

WidthStats descendance_split(const PsiModel& model, const ChronologicalTree& tree, double tau, double horizon,
                             RngStream& rng) {
  if (!(horizon > tau)) throw std::invalid_argument("horizon must exceed tau");
  return DescendanceClassifier(model, horizon - tau).classify(tree, tau, rng);
}

// ----- goodness of fit --------------------------------------------------

nlohmann::json GofReport::to_json() const {
  nlohmann::ordered_json j;
  j["test"] = name;
  j["kind"] = kind;
  j["statistic"] = statistic;
  j["p_value"] = p_value;
  j["n"] = n;
  j["seed"] = seed;
  j["alpha"] = alpha;
  if (tolerance) j["tolerance"] = *tolerance;
  j["pass"] = passed;
  if (advisory) j["advisory"] = true;
  for (const auto& [k, v] : extra.items()) j[k] = v;
  return j;
}

GofReport z_report(std::string name, double estimate, double target, double se, std::size_t n) {
  GofReport r;
  r.name = std::move(name);
  r.n = n;
  r.statistic = se > 0.0 ? std::fabs(estimate - target) / se : (estimate == target ? 0.0 : kInf);
  r.p_value = std::erfc(r.statistic / std::numbers::sqrt2);
  r.alpha = std::erfc(3.0 / std::numbers::sqrt2);
  r.passed = r.p_value > r.alpha;
  r.extra["estimate"] = estimate;
  r.extra["target"] = target;
  r.extra["se"] = se;
  return r;
}

GofReport tolerance_report(std::string name, double error, double tol, std::size_t n) {
  GofReport r;
  r.name = std::move(name);
  r.kind = "tolerance";
  r.statistic = error;
  r.tolerance = tol;
  r.n = n;
  r.passed = error <= tol;
  r.p_value = r.passed ? 1.0 : 0.0;
  return r;
}

double kolmogorov_survival(double x) {
  if (x <= 0.0) return 1.0;
  if (x < 1.18) {
    const double y = -std::numbers::pi * std::numbers::pi / (8.0 * x * x);
    double s = 0.0;
    for (int k = 1; k <= 20; ++k) {
      const double odd = 2.0 * k - 1.0;
      s += std::exp(odd * odd * y);
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / x * s, 0.0, 1.0);
  }
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * x * x);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

namespace {

double ks_p_value(double d, double n_eff) {
  const double en = std::sqrt(n_eff);
  return kolmogorov_survival((en + 0.12 + 0.11 / en) * d);
}

GofReport finish(std::string name, double stat, double p, std::size_t n) {
  GofReport r;
  r.name = std::move(name);
  r.statistic = stat;
  r.p_value = std::clamp(p, 0.0, 1.0);
  r.n = n;
  r.passed = r.p_value > r.alpha;
  return r;
}

}  // namespace

GofReport gof_geometric(const std::vector<std::uint64_t>& sample, double success) {
  if (sample.empty()) throw std::invalid_argument("sample is empty");
  if (!(success > 0.0 && success < 1.0)) throw std::invalid_argument("geometric success must lie in (0, 1)");
  const double n = static_cast<double>(sample.size());
  const double fail = 1.0 - success;
  // Cells 1..K-1 singly, K pooled with the tail.
  std::size_t k = 1;
  while (n * success * std::pow(fail, static_cast<double>(k - 1)) >= 5.0 &&
         n * std::pow(fail, static_cast<double>(k)) >= 5.0)
    ++k;
  if (k < 2) throw std::invalid_argument("sample too small for a chi-square test");
  std::vector<double> observed(k, 0.0);
  for (auto x : sample) {
    if (x < 1) throw std::invalid_argument("geometric sample values must be >= 1");
    observed[std::min<std::uint64_t>(x, k) - 1] += 1.0;
  }
  double stat = 0.0;
  for (std::size_t c = 1; c <= k; ++c) {
    const double e = c < k ? n * success * std::pow(fail, static_cast<double>(c - 1))
                           : n * std::pow(fail, static_cast<double>(k - 1));
    const double diff = observed[c - 1] - e;
    stat += diff * diff / e;
  }
  const double df = static_cast<double>(k - 1);
  return finish("chi2_geometric", stat, boost::math::gamma_q(0.5 * df, 0.5 * stat), sample.size());
}

GofReport gof_ks(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("sample is empty");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
  }
  return finish("ks_one_sample", d, ks_p_value(d, n), sample.size());
}

GofReport gof_ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("sample is empty");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= v) ++i;
    while (j < b.size() && b[j] <= v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return finish("ks_two_sample", d, ks_p_value(d, na * nb / (na + nb)), a.size() + b.size());
}

}  // namespace splitree
