#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "splitree/levy_kernel.hpp"

namespace splitree {
namespace {

constexpr double kQuadTol = 1e-12;

template <class Fn>
double integrate_from(double a, Fn&& f) {
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, a, kInf, kQuadTol);
}

// Integral over (0, inf) split at the kinks of the integrand.
template <class Fn>
double integrate_pieces(const std::vector<double>& kinks, Fn&& f) {
  using boost::math::quadrature::gauss_kronrod;
  double lo = 0.0, total = 0.0;
  for (double k : kinks) {
    if (!(k > lo) || !std::isfinite(k)) continue;
    total += gauss_kronrod<double, 15>::integrate(f, lo, k, 15, kQuadTol);
    lo = k;
  }
  return total + integrate_from(lo, f);
}

nlohmann::json level_to_json(double x) {
  if (x == kInf) return "inf";
  return x;
}

// 1 - exp(-x)(1 + x) without cancellation for small x.
double one_minus_exp_linear(double x) {
  if (x < 0.1) {
    double term = -x;
    double sum = 0.0;
    for (int k = 2; k <= 14; ++k) {
      term *= -x / k;
      sum += term * (k - 1);
    }
    return sum;
  }
  return -std::expm1(-x) - x * std::exp(-x);
}

}  // namespace

// ----- defaults ---------------------------------------------------------

double LifespanLaw::mean() const {
  if (mass_at_infinity() > 0.0) return kInf;
  return integrate_pieces(kinks(), [this](double s) { return survival(s); });
}

double LifespanLaw::laplace(double lambda) const {
  if (lambda == 0.0) return 1.0 - mass_at_infinity();
  const double tail = integrate_pieces(kinks(), [&](double s) { return std::exp(-lambda * s) * survival(s); });
  return 1.0 - lambda * tail;
}

double LifespanLaw::mean_exp(double lambda) const {
  if (lambda == 0.0) return mean();
  return integrate_pieces(kinks(), [&](double s) {
    return (1.0 - lambda * s) * std::exp(-lambda * s) * survival(s);
  });
}

double LifespanLaw::second_exp(double lambda) const {
  if (lambda == 0.0) {
    if (mass_at_infinity() > 0.0) return kInf;
    return integrate_pieces(kinks(), [&](double s) { return 2.0 * s * survival(s); });
  }
  return integrate_pieces(kinks(), [&](double s) {
    return (2.0 * s - lambda * s * s) * std::exp(-lambda * s) * survival(s);
  });
}

KernelMoments LifespanLaw::kernel_moments(double lo, double hi) const {
  using boost::math::quadrature::gauss;
  KernelMoments km;
  double a = lo;
  auto piece = [&](double end) {
    if (!(end > a)) return;
    km.mass += gauss<double, 15>::integrate([this](double s) { return survival(s); }, a, end);
    km.moment += gauss<double, 15>::integrate([&](double s) { return (s - lo) * survival(s); }, a, end);
    a = end;
  };
  for (double k : kinks())
    if (k > lo && k < hi) piece(k);
  piece(hi);
  return km;
}

LawPtr LifespanLaw::tilted(double eta) const {
  return std::make_shared<TiltedLaw>(shared_from_this(), eta);
}

// ----- exponential ------------------------------------------------------

ExponentialLaw::ExponentialLaw(double d) : d_(d) {
  if (!(d > 0.0) || !std::isfinite(d)) throw std::invalid_argument("exponential rate d must be positive");
}

double ExponentialLaw::survival(double r) const { return r <= 0.0 ? 1.0 : std::exp(-d_ * r); }
double ExponentialLaw::sample(RngStream& rng) const { return rng.exponential(d_); }
nlohmann::json ExponentialLaw::to_json() const { return {{"family", "exponential"}, {"d", d_}}; }
double ExponentialLaw::mean() const { return 1.0 / d_; }
double ExponentialLaw::laplace(double lambda) const { return d_ / (d_ + lambda); }
double ExponentialLaw::mean_exp(double lambda) const { return d_ / ((d_ + lambda) * (d_ + lambda)); }
double ExponentialLaw::second_exp(double lambda) const {
  const double s = d_ + lambda;
  return 2.0 * d_ / (s * s * s);
}

KernelMoments ExponentialLaw::kernel_moments(double lo, double hi) const {
  const double h = hi - lo;
  const double e = std::exp(-d_ * lo);
  return {e * -std::expm1(-d_ * h) / d_, e * one_minus_exp_linear(d_ * h) / (d_ * d_)};
}

LawPtr ExponentialLaw::tilted(double eta) const { return std::make_shared<ExponentialLaw>(d_ + eta); }

// ----- dirac ------------------------------------------------------------

DiracLaw::DiracLaw(double a) : a_(a) {
  if (!(a > 0.0)) throw std::invalid_argument("dirac level a must be positive");
}

double DiracLaw::survival(double r) const { return r <= a_ ? 1.0 : 0.0; }
double DiracLaw::mass_at_infinity() const { return a_ == kInf ? 1.0 : 0.0; }
double DiracLaw::sample(RngStream&) const { return a_; }
nlohmann::json DiracLaw::to_json() const { return {{"family", "dirac"}, {"a", level_to_json(a_)}}; }

double DiracLaw::laplace(double lambda) const {
  if (a_ == kInf) return 0.0;
  return std::exp(-lambda * a_);
}

double DiracLaw::mean_exp(double lambda) const {
  if (a_ == kInf) return lambda == 0.0 ? kInf : 0.0;
  return a_ * std::exp(-lambda * a_);
}

double DiracLaw::second_exp(double lambda) const {
  if (a_ == kInf) return lambda == 0.0 ? kInf : 0.0;
  return a_ * a_ * std::exp(-lambda * a_);
}

KernelMoments DiracLaw::kernel_moments(double lo, double hi) const {
  if (a_ >= hi) {
    const double h = hi - lo;
    return {h, 0.5 * h * h};
  }
  if (a_ <= lo) return {};
  const double w = a_ - lo;
  return {w, 0.5 * w * w};
}

LawPtr DiracLaw::tilted(double) const {
  if (a_ == kInf) throw std::invalid_argument("cannot tilt a lifespan law concentrated at infinity");
  return std::make_shared<DiracLaw>(a_);
}

// ----- empirical --------------------------------------------------------

EmpiricalLaw::EmpiricalLaw(std::vector<double> sample)
    : EmpiricalLaw(sample, std::vector<double>(sample.size(), 1.0)) {
  uniform_ = true;
}

EmpiricalLaw::EmpiricalLaw(std::vector<double> values, std::vector<double> weights) {
  if (values.empty()) throw std::invalid_argument("empirical sample is empty");
  if (values.size() != weights.size()) throw std::invalid_argument("empirical weights size mismatch");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  double total = 0.0;
  for (std::size_t i : idx) {
    if (!(values[i] > 0.0)) throw std::invalid_argument("empirical lifespans must be positive");
    if (!(weights[i] >= 0.0)) throw std::invalid_argument("empirical weights must be nonnegative");
    if (weights[i] == 0.0) continue;
    values_.push_back(values[i]);
    weights_.push_back(weights[i]);
    total += weights[i];
  }
  if (!(total > 0.0)) throw std::invalid_argument("empirical weights sum to zero");
  uniform_ = true;
  for (double& w : weights_) {
    w /= total;
    if (w != weights_.front()) uniform_ = false;
  }
  upper_.assign(values_.size() + 1, 0.0);
  for (std::size_t i = values_.size(); i-- > 0;) upper_[i] = upper_[i + 1] + weights_[i];
  cumul_.resize(values_.size());
  std::partial_sum(weights_.begin(), weights_.end(), cumul_.begin());
}

double EmpiricalLaw::survival(double r) const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), r);
  return upper_[static_cast<std::size_t>(it - values_.begin())];
}

double EmpiricalLaw::mass_at_infinity() const {
  const auto it = std::lower_bound(values_.begin(), values_.end(), kInf);
  return upper_[static_cast<std::size_t>(it - values_.begin())];
}

double EmpiricalLaw::sample(RngStream& rng) const {
  if (uniform_) return values_[rng.below(values_.size())];
  const double u = rng.uniform() * cumul_.back();
  auto it = std::upper_bound(cumul_.begin(), cumul_.end(), u);
  if (it == cumul_.end()) --it;
  return values_[static_cast<std::size_t>(it - cumul_.begin())];
}

nlohmann::json EmpiricalLaw::to_json() const {
  nlohmann::json sample = nlohmann::json::array();
  for (double v : values_) sample.push_back(level_to_json(v));
  nlohmann::json j = {{"family", "empirical"}, {"sample", sample}};
  if (!uniform_) j["weights"] = weights_;
  return j;
}

double EmpiricalLaw::mean() const {
  if (mass_at_infinity() > 0.0) return kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += weights_[i] * values_[i];
  return s;
}

double EmpiricalLaw::laplace(double lambda) const {
  if (lambda == 0.0) return 1.0 - mass_at_infinity();
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) s += weights_[i] * std::exp(-lambda * values_[i]);
  return s;
}

double EmpiricalLaw::mean_exp(double lambda) const {
  if (lambda == 0.0) return mean();
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] < kInf) s += weights_[i] * values_[i] * std::exp(-lambda * values_[i]);
  return s;
}

double EmpiricalLaw::second_exp(double lambda) const {
  if (lambda == 0.0 && mass_at_infinity() > 0.0) return kInf;
  double s = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    if (values_[i] < kInf) s += weights_[i] * values_[i] * values_[i] * std::exp(-lambda * values_[i]);
  return s;
}

KernelMoments EmpiricalLaw::kernel_moments(double lo, double hi) const {
  const double h = hi - lo;
  const auto first = std::upper_bound(values_.begin(), values_.end(), lo);
  const auto last = std::lower_bound(first, values_.end(), hi);
  const double above = upper_[static_cast<std::size_t>(last - values_.begin())];
  KernelMoments km{above * h, above * 0.5 * h * h};
  for (auto it = first; it != last; ++it) {
    const double w = weights_[static_cast<std::size_t>(it - values_.begin())];
    const double len = *it - lo;
    km.mass += w * len;
    km.moment += w * 0.5 * len * len;
  }
  return km;
}

LawPtr EmpiricalLaw::tilted(double eta) const {
  std::vector<double> vals, ws;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] == kInf) continue;
    vals.push_back(values_[i]);
    ws.push_back(weights_[i] * std::exp(-eta * values_[i]));
  }
  if (vals.empty()) throw std::invalid_argument("cannot tilt a lifespan law concentrated at infinity");
  return std::make_shared<EmpiricalLaw>(std::move(vals), std::move(ws));
}

// ----- mixture ----------------------------------------------------------

MixtureLaw::MixtureLaw(std::vector<std::pair<double, LawPtr>> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("mixture has no components");
  double total = 0.0;
  for (const auto& [w, law] : components_) {
    if (!(w > 0.0)) throw std::invalid_argument("mixture weights must be positive");
    if (!law) throw std::invalid_argument("mixture component is null");
    total += w;
    cumul_.push_back(total);
  }
  if (std::fabs(total - 1.0) > 1e-12) throw std::invalid_argument("mixture weights must sum to 1");
}

double MixtureLaw::survival(double r) const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->survival(r);
  return s;
}

double MixtureLaw::mass_at_infinity() const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->mass_at_infinity();
  return s;
}

double MixtureLaw::sample(RngStream& rng) const {
  const double u = rng.uniform() * cumul_.back();
  auto it = std::upper_bound(cumul_.begin(), cumul_.end(), u);
  if (it == cumul_.end()) --it;
  return components_[static_cast<std::size_t>(it - cumul_.begin())].second->sample(rng);
}

nlohmann::json MixtureLaw::to_json() const {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& [w, law] : components_) {
    nlohmann::json c = law->to_json();
    c["weight"] = w;
    comps.push_back(c);
  }
  return {{"family", "mixture"}, {"components", comps}};
}

double MixtureLaw::mean() const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->mean();
  return s;
}

double MixtureLaw::laplace(double lambda) const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->laplace(lambda);
  return s;
}

double MixtureLaw::mean_exp(double lambda) const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->mean_exp(lambda);
  return s;
}

double MixtureLaw::second_exp(double lambda) const {
  double s = 0.0;
  for (const auto& [w, law] : components_) s += w * law->second_exp(lambda);
  return s;
}

KernelMoments MixtureLaw::kernel_moments(double lo, double hi) const {
  KernelMoments km;
  for (const auto& [w, law] : components_) {
    const KernelMoments c = law->kernel_moments(lo, hi);
    km.mass += w * c.mass;
    km.moment += w * c.moment;
  }
  return km;
}

LawPtr MixtureLaw::tilted(double eta) const {
  std::vector<std::pair<double, LawPtr>> out;
  double total = 0.0;
  for (const auto& [w, law] : components_) {
    const double z = w * law->laplace(eta);
    if (z <= 0.0) continue;
    out.emplace_back(z, law->tilted(eta));
    total += z;
  }
  if (out.empty()) throw std::invalid_argument("cannot tilt a lifespan law concentrated at infinity");
  if (out.size() == 1) return out.front().second;
  for (auto& c : out) c.first /= total;
  // Renormalize exactly so the constructor's tolerance holds.
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < out.size(); ++i) sum += out[i].first;
  out.back().first = 1.0 - sum;
  return std::make_shared<MixtureLaw>(std::move(out));
}

std::vector<double> MixtureLaw::kinks() const {
  std::vector<double> all;
  for (const auto& c : components_) {
    const auto k = c.second->kinks();
    all.insert(all.end(), k.begin(), k.end());
  }
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  return all;
}

bool MixtureLaw::smooth() const {
  return std::all_of(components_.begin(), components_.end(), [](const auto& c) { return c.second->smooth(); });
}

// ----- hazard -----------------------------------------------------------

HazardRate HazardRate::constant_rate(double d) {
  if (!(d >= 0.0)) throw std::invalid_argument("hazard rate must be nonnegative");
  HazardRate h;
  h.constant = d;
  h.density = [d](double) { return d; };
  h.cumulative = [d](double z) { return d * std::max(z, 0.0); };
  return h;
}

HazardRate HazardRate::piecewise(std::vector<double> breaks, std::vector<double> rates) {
  if (breaks.empty() || breaks.size() != rates.size())
    throw std::invalid_argument("piecewise hazard needs one rate per break");
  if (breaks.front() != 0.0) throw std::invalid_argument("piecewise hazard must start at 0");
  for (std::size_t i = 0; i < rates.size(); ++i) {
    if (!(rates[i] >= 0.0) || !std::isfinite(rates[i])) throw std::invalid_argument("hazard rate must be nonnegative");
    if (i > 0 && !(breaks[i] > breaks[i - 1])) throw std::invalid_argument("hazard breaks must increase");
  }
  HazardRate h;
  h.breaks = breaks;
  h.rates = rates;
  h.density = [breaks, rates](double z) {
    const auto it = std::upper_bound(breaks.begin(), breaks.end(), z);
    return it == breaks.begin() ? 0.0 : rates[static_cast<std::size_t>(it - breaks.begin()) - 1];
  };
  h.cumulative = [breaks, rates](double z) {
    double m = 0.0;
    for (std::size_t i = 0; i < breaks.size() && z > breaks[i]; ++i) {
      const double end = i + 1 < breaks.size() ? std::min(z, breaks[i + 1]) : z;
      m += rates[i] * (end - breaks[i]);
    }
    return m;
  };
  return h;
}

HazardRate HazardRate::from_density(std::function<double(double)> density, std::function<double(double)> cumulative) {
  HazardRate h;
  h.density = density;
  if (cumulative) {
    h.cumulative = std::move(cumulative);
  } else {
    h.cumulative = [density](double z) {
      if (z <= 0.0) return 0.0;
      return boost::math::quadrature::gauss_kronrod<double, 15>::integrate(density, 0.0, z, 15, 1e-12);
    };
  }
  return h;
}

HazardLaw::HazardLaw(HazardRate hazard) : hazard_(std::move(hazard)) {
  if (!hazard_.cumulative) throw std::invalid_argument("hazard needs a cumulative function");
  if (!hazard_.rates.empty()) {
    total_ = hazard_.rates.back() > 0.0 ? kInf : hazard_.cumulative(hazard_.breaks.back());
  } else {
    // Probe mu((0, z)) at z = 2^k; beyond exp underflow the tail mass is zero.
    total_ = kInf;
    double prev = -1.0;
    for (int k = 0; k <= 60; ++k) {
      const double m = hazard_.cumulative(std::ldexp(1.0, k));
      if (m > 745.0) break;
      if (k >= 10 && std::fabs(m - prev) <= 1e-13 * std::max(1.0, m)) {
        total_ = m;
        break;
      }
      prev = m;
      if (k == 60) total_ = m;
    }
  }
  tail_mass_ = total_ == kInf ? 0.0 : std::exp(-total_);
}

double HazardLaw::survival(double r) const { return r <= 0.0 ? 1.0 : std::exp(-hazard_.cumulative(r)); }

double HazardLaw::sample(RngStream& rng) const {
  const double e = rng.exponential(1.0);
  if (e >= total_) return kInf;
  double lo = 0.0, hi = 1.0;
  while (hazard_.cumulative(hi) < e) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (hazard_.cumulative(mid) < e ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

nlohmann::json HazardLaw::to_json() const {
  if (!hazard_.rates.empty()) return {{"family", "hazard"}, {"breaks", hazard_.breaks}, {"rates", hazard_.rates}};
  return {{"family", "hazard"}, {"form", "function"}};
}

// ----- tilted -----------------------------------------------------------

TiltedLaw::TiltedLaw(LawPtr base, double eta) : base_(std::move(base)), eta_(eta) {
  if (!(eta > 0.0)) throw std::invalid_argument("tilt parameter must be positive");
  norm_ = base_->laplace(eta_);
  if (!(norm_ > 0.0)) throw std::invalid_argument("cannot tilt a lifespan law concentrated at infinity");
}

double TiltedLaw::survival(double r) const {
  if (r <= 0.0) return 1.0;
  const double head = std::exp(-eta_ * r) * base_->survival(r);
  const double tail = integrate_from(r, [&](double z) { return std::exp(-eta_ * z) * base_->survival(z); });
  return std::max(0.0, (head - eta_ * tail) / norm_);
}

double TiltedLaw::sample(RngStream& rng) const {
  for (int i = 0; i < kMaxAttempts; ++i) {
    const double z = base_->sample(rng);
    if (rng.uniform() < std::exp(-eta_ * z)) return z;
  }
  throw std::runtime_error("rejection sampler exceeded its attempt cap");
}

nlohmann::json TiltedLaw::to_json() const {
  return {{"family", "tilted"}, {"eta", eta_}, {"base", base_->to_json()}};
}

double TiltedLaw::mean() const { return base_->mean_exp(eta_) / norm_; }
double TiltedLaw::laplace(double lambda) const { return base_->laplace(lambda + eta_) / norm_; }
double TiltedLaw::mean_exp(double lambda) const { return base_->mean_exp(lambda + eta_) / norm_; }
double TiltedLaw::second_exp(double lambda) const { return base_->second_exp(lambda + eta_) / norm_; }
LawPtr TiltedLaw::tilted(double eta) const { return std::make_shared<TiltedLaw>(base_, eta_ + eta); }

}  // namespace splitree
