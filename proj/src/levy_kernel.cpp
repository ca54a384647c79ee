#include "splitree/levy_kernel.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace splitree {
namespace {

double parse_level(const nlohmann::json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "+inf" || s == "infinity" || s == "Infinity") return kInf;
  }
  throw std::invalid_argument(std::string("field '") + what + "' must be a number or \"inf\"");
}

double require_number(const nlohmann::json& cfg, const char* key) {
  if (!cfg.contains(key)) throw std::invalid_argument(std::string("missing field '") + key + "'");
  return parse_level(cfg.at(key), key);
}

LawPtr make_law(const nlohmann::json& cfg);

LawPtr make_law(const nlohmann::json& cfg) {
  if (!cfg.is_object() || !cfg.contains("family") || !cfg.at("family").is_string())
    throw std::invalid_argument("measure must declare a 'family'");
  const auto family = cfg.at("family").get<std::string>();
  if (family == "exponential") {
    const double d = require_number(cfg, "d");
    if (!(d > 0.0)) throw std::invalid_argument("exponential rate d must be positive");
    return std::make_shared<ExponentialLaw>(d);
  }
  if (family == "dirac") return std::make_shared<DiracLaw>(require_number(cfg, "a"));
  if (family == "yule") return std::make_shared<DiracLaw>(kInf);
  if (family == "empirical") {
    if (!cfg.contains("sample") || !cfg.at("sample").is_array()) throw std::invalid_argument("empirical needs 'sample'");
    std::vector<double> sample;
    for (const auto& v : cfg.at("sample")) sample.push_back(parse_level(v, "sample"));
    if (cfg.contains("weights")) return std::make_shared<EmpiricalLaw>(sample, cfg.at("weights").get<std::vector<double>>());
    return std::make_shared<EmpiricalLaw>(sample);
  }
  if (family == "mixture") {
    if (!cfg.contains("components") || !cfg.at("components").is_array())
      throw std::invalid_argument("mixture needs 'components'");
    std::vector<std::pair<double, LawPtr>> comps;
    double total = 0.0;
    for (const auto& c : cfg.at("components")) {
      const double w = require_number(c, "weight");
      if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
      total += w;
      comps.emplace_back(w, make_law(c));
    }
    if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
    return std::make_shared<MixtureLaw>(std::move(comps));
  }
  if (family == "hazard") {
    if (!cfg.contains("breaks") || !cfg.contains("rates")) throw std::invalid_argument("hazard needs 'breaks' and 'rates'");
    auto h = HazardRate::piecewise(cfg.at("breaks").get<std::vector<double>>(), cfg.at("rates").get<std::vector<double>>());
    if (h.rates.size() == 1) {
      if (h.rates[0] == 0.0) return std::make_shared<DiracLaw>(kInf);
      return std::make_shared<ExponentialLaw>(h.rates[0]);
    }
    return std::make_shared<HazardLaw>(std::move(h));
  }
  throw std::invalid_argument("unknown measure family '" + family + "'");
}

bool json_close(const nlohmann::json& x, const nlohmann::json& y, double tol) {
  if (x.is_number() && y.is_number()) {
    const double a = x.get<double>(), c = y.get<double>();
    return std::fabs(a - c) <= tol * std::max(1.0, std::fabs(a));
  }
  if (x.type() != y.type()) return false;
  if (x.is_array()) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!json_close(x[i], y[i], tol)) return false;
    return true;
  }
  if (x.is_object()) {
    if (x.size() != y.size()) return false;
    for (auto it = x.begin(); it != x.end(); ++it) {
      if (!y.contains(it.key()) || !json_close(it.value(), y.at(it.key()), tol)) return false;
    }
    return true;
  }
  return x == y;
}

// Root of an increasing function g on [lo, hi] with g(lo) <= 0 <= g(hi).
template <class G, class DG>
double solve_increasing(G&& g, DG&& dg, double lo, double hi, double tol) {
  double glo = g(lo);
  if (glo >= 0.0) return lo;
  if (g(hi) <= 0.0) return hi;
  for (int i = 0; i < 200 && hi - lo > 1e-9 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int i = 0; i < 100; ++i) {
    const double gx = g(x);
    if (std::fabs(gx) <= tol) break;
    if (gx < 0.0) lo = x; else hi = x;
    const double slope = dg(x);
    double next = slope > 0.0 ? x - gx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == x) break;
    x = next;
  }
  return x;
}

}  // namespace

// ----- spec -------------------------------------------------------------

double LifespanSpec::m() const {
  if (q() > 0.0) return kInf;
  return b * law->mean();
}

nlohmann::json LifespanSpec::to_json() const {
  nlohmann::json j = law->to_json();
  j["b"] = b;
  return j;
}

LifespanSpec make_spec(const nlohmann::json& config) {
  if (!config.is_object()) throw std::invalid_argument("measure must be a JSON object");
  const double b = require_number(config, "b");
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("birth rate b must be positive");
  return LifespanSpec{b, make_law(config)};
}

LifespanSpec make_spec_from_hazard(double b, const HazardRate& hazard) {
  if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument("birth rate b must be positive");
  if (hazard.constant) {
    if (*hazard.constant == 0.0) return yule_spec(b);
    return exponential_spec(b, *hazard.constant);
  }
  return LifespanSpec{b, std::make_shared<HazardLaw>(hazard)};
}

LifespanSpec exponential_spec(double b, double d) {
  return make_spec({{"family", "exponential"}, {"b", b}, {"d", d}});
}

LifespanSpec dirac_spec(double b, double a) {
  return make_spec({{"family", "dirac"}, {"b", b}, {"a", a == kInf ? nlohmann::json("inf") : nlohmann::json(a)}});
}

LifespanSpec yule_spec(double b) { return dirac_spec(b, kInf); }

LifespanSpec empirical_spec(double b, std::vector<double> sample) {
  if (!(b > 0.0)) throw std::invalid_argument("birth rate b must be positive");
  return LifespanSpec{b, std::make_shared<EmpiricalLaw>(std::move(sample))};
}

bool same_parameters(const LifespanSpec& x, const LifespanSpec& y, double tol) {
  return json_close(x.to_json(), y.to_json(), tol);
}

std::string to_string(Criticality c) {
  switch (c) {
    case Criticality::Subcritical: return "subcritical";
    case Criticality::Critical: return "critical";
    case Criticality::Supercritical: return "supercritical";
  }
  return "?";
}

// ----- Laplace exponent -------------------------------------------------

namespace {

double F_spec(const LifespanSpec& spec, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return spec.q();
  return spec.b * (1.0 - spec.law->laplace(lambda));
}

double psi_spec(const LifespanSpec& spec, double lambda) { return lambda - F_spec(spec, lambda); }

double psi_prime_spec(const LifespanSpec& spec, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  if (lambda == 0.0) return 1.0 - spec.m();
  return 1.0 - spec.b * spec.law->mean_exp(lambda);
}

Criticality classify(const LifespanSpec& spec) {
  if (spec.q() > 0.0) return Criticality::Supercritical;
  const double m = spec.m();
  if (std::fabs(m - 1.0) <= 1e-12) return Criticality::Critical;
  return m > 1.0 ? Criticality::Supercritical : Criticality::Subcritical;
}

}  // namespace

double compute_eta(const LifespanSpec& spec) {
  if (classify(spec) != Criticality::Supercritical) return 0.0;
  const double b = spec.b;
  double lo = 0.0;
  if (spec.q() == 0.0) {
    lo = b;
    for (int k = 0; k < 1100 && psi_spec(spec, lo) >= 0.0; ++k) lo *= 0.5;
  }
  double hi = b;
  if (psi_spec(spec, hi) <= 0.0) return hi;
  return solve_increasing([&](double x) { return psi_spec(spec, x); },
                          [&](double x) { return psi_prime_spec(spec, x); }, lo, hi, 1e-13);
}

PsiModel make_model(const LifespanSpec& spec) {
  if (!spec.law || !(spec.b > 0.0)) throw std::invalid_argument("invalid lifespan spec");
  PsiModel model;
  model.spec = spec;
  model.criticality = classify(spec);
  model.eta = compute_eta(spec);
  return model;
}

double F(const PsiModel& model, double lambda) { return F_spec(model.spec, lambda); }
double psi(const PsiModel& model, double lambda) { return psi_spec(model.spec, lambda); }
double psi_prime(const PsiModel& model, double lambda) { return psi_prime_spec(model.spec, lambda); }

double psi_second(const PsiModel& model, double lambda) {
  if (lambda < 0.0) throw std::invalid_argument("lambda must be nonnegative");
  return model.spec.b * model.spec.law->second_exp(lambda);
}

double phi_inverse(const PsiModel& model, double qarg) {
  if (!(qarg >= 0.0)) throw std::invalid_argument("argument of phi must be nonnegative");
  if (qarg == 0.0) return model.eta;
  const auto& spec = model.spec;
  return solve_increasing([&](double x) { return psi_spec(spec, x) - qarg; },
                          [&](double x) { return psi_prime_spec(spec, x); }, model.eta, qarg + spec.b,
                          1e-13 * std::max(1.0, qarg));
}

// ----- scale function ---------------------------------------------------

ScaleTable::ScaleTable(double h, std::vector<double> values) : h_(h), values_(std::move(values)) {
  if (values_.size() < 2) throw std::invalid_argument("scale table needs at least two points");
}

double ScaleTable::operator()(double x) const {
  if (x < 0.0) return 0.0;
  const double pos = x / h_;
  const auto n = values_.size() - 1;
  if (pos > static_cast<double>(n) * (1.0 + 1e-12)) throw std::out_of_range("scale table evaluated beyond x_max");
  auto i = static_cast<std::size_t>(pos);
  if (i >= n) return values_[n];
  const double frac = pos - static_cast<double>(i);
  return values_[i] + frac * (values_[i + 1] - values_[i]);
}

std::string ScaleTable::to_csv() const {
  std::ostringstream out;
  out << "x,W\n";
  char buf[64];
  for (std::size_t i = 0; i < values_.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", h_ * static_cast<double>(i), values_[i]);
    out << buf;
  }
  return out.str();
}

namespace {

// Product trapezoid for W(x) = 1 + int_0^x tail(x - y) W(y) dy: the tail is
// integrated exactly against the piecewise-linear interpolant of W.
std::vector<double> volterra_solve(const LifespanSpec& spec, std::size_t n, double h) {
  std::vector<double> after(n + 2), before(n + 2);  // weights on the right / left node of interval k
  for (std::size_t k = 1; k <= n; ++k) {
    const double lo = static_cast<double>(k - 1) * h;
    const KernelMoments km = spec.law->kernel_moments(lo, lo + h);
    before[k] = spec.b * km.moment / h;
    after[k] = spec.b * (km.mass - km.moment / h);
  }
  std::vector<double> c(n + 1, 0.0);
  c[0] = after[1];
  for (std::size_t k = 1; k < n; ++k) c[k] = before[k] + after[k + 1];
  const double denom = 1.0 - c[0];
  std::vector<double> w(n + 1);
  w[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i) {
    double s = 1.0 + before[i] * w[0];
    const double* cp = c.data() + 1;
    const double* wp = w.data() + (i - 1);
    for (std::size_t k = 0; k + 1 < i; ++k) s += cp[k] * wp[-static_cast<std::ptrdiff_t>(k)];
    w[i] = s / denom;
  }
  return w;
}

}  // namespace

ScaleTable scale_table(const PsiModel& model, double x_max, double h, ScaleOptions options) {
  if (!(x_max > 0.0) || !std::isfinite(x_max)) throw std::invalid_argument("x_max must be positive and finite");
  if (!(h > 0.0) || h > x_max / 10.0) throw std::invalid_argument("step h must satisfy 0 < h <= x_max/10");
  if (!(h * model.spec.b < 0.1))
    throw std::invalid_argument("step too coarse for the birth rate: need h*b < 0.1");
  const auto n = static_cast<std::size_t>(std::ceil(x_max / h - 1e-9));
  std::vector<double> w = volterra_solve(model.spec, n, h);
  if (options.extrapolate && model.spec.law->smooth()) {
    const std::vector<double> fine = volterra_solve(model.spec, 2 * n, 0.5 * h);
    for (std::size_t i = 1; i <= n; ++i) w[i] = (4.0 * fine[2 * i] - w[i]) / 3.0;
  }
  w[0] = 1.0;
  for (std::size_t i = 1; i <= n; ++i)
    if (!(w[i] >= w[i - 1] * (1.0 - 1e-12))) throw std::runtime_error("scale table lost monotonicity; reduce the step");
  return ScaleTable(h, std::move(w));
}

std::optional<double> closed_form_scale(const LifespanSpec& spec, double x) {
  if (x < 0.0) return 0.0;
  const double b = spec.b;
  if (const auto* dir = dynamic_cast<const DiracLaw*>(spec.law.get()); dir && dir->a() == kInf) return std::exp(b * x);
  if (const auto* ex = dynamic_cast<const ExponentialLaw*>(spec.law.get())) {
    const double d = ex->d();
    if (b == d) return 1.0 + b * x;
    return (d - b * std::exp((b - d) * x)) / (d - b);
  }
  return std::nullopt;
}

ScaleFunction::ScaleFunction(const PsiModel& model, double x_max, double h) : spec_(model.spec) {
  if (closed_form_scale(spec_, 0.0)) return;
  const double step = std::min(h, 0.05 / spec_.b);
  table_.emplace(scale_table(model, std::max(x_max, 10.0 * step), step));
}

double ScaleFunction::operator()(double x) const {
  if (table_) return (*table_)(x);
  return *closed_form_scale(spec_, x);
}

// ----- transforms -------------------------------------------------------

LifespanSpec conditioned_spec(const LifespanSpec& spec) {
  const PsiModel model = make_model(spec);
  if (!(model.eta > 0.0)) throw std::invalid_argument("conditioning on extinction needs a supercritical spec");
  const double mass = spec.law->laplace(model.eta);
  if (!(mass > 0.0)) throw std::invalid_argument("extinction has probability zero for this spec");
  return LifespanSpec{spec.b * mass, spec.law->tilted(model.eta)};
}

double offspring_gf(const LifespanSpec& spec, double s) {
  if (spec.q() > 0.0) throw std::invalid_argument("offspring generating function needs q = 0");
  if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in [0, 1]");
  return spec.law->laplace(spec.b * (1.0 - s));
}

}  // namespace splitree
