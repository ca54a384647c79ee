#pragma once

#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "splitree/rng.hpp"

namespace splitree {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Integrals of a survival function S over [lo, hi]:
// mass = int S(s) ds, moment = int (s - lo) S(s) ds.
struct KernelMoments {
  double mass = 0.0;
  double moment = 0.0;
};

// Probability law of a single lifespan on (0, +inf]. Survival is
// S(r) = P(lifespan >= r). Defaults integrate S numerically; families
// override them with closed forms.
class LifespanLaw : public std::enable_shared_from_this<LifespanLaw> {
 public:
  virtual ~LifespanLaw() = default;

  virtual std::string family() const = 0;
  virtual double survival(double r) const = 0;
  virtual double mass_at_infinity() const = 0;
  virtual double sample(RngStream& rng) const = 0;
  virtual nlohmann::json to_json() const = 0;

  // E[lifespan], +inf when there is mass at infinity.
  virtual double mean() const;
  // E[exp(-lambda L)] with exp(-inf) = 0; at lambda = 0 this is P(L < inf).
  virtual double laplace(double lambda) const;
  // E[L exp(-lambda L)].
  virtual double mean_exp(double lambda) const;
  // E[L^2 exp(-lambda L)].
  virtual double second_exp(double lambda) const;
  virtual KernelMoments kernel_moments(double lo, double hi) const;
  // Law proportional to exp(-eta r) P(dr).
  virtual std::shared_ptr<const LifespanLaw> tilted(double eta) const;
  // True when survival is smooth enough for extrapolated quadrature.
  virtual bool smooth() const { return true; }
  // Increasing levels where survival has a kink; integrals are split there.
  virtual std::vector<double> kinks() const { return {}; }
};

using LawPtr = std::shared_ptr<const LifespanLaw>;

class ExponentialLaw final : public LifespanLaw {
 public:
  explicit ExponentialLaw(double d);
  double d() const { return d_; }
  std::string family() const override { return "exponential"; }
  double survival(double r) const override;
  double mass_at_infinity() const override { return 0.0; }
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  double mean() const override;
  double laplace(double lambda) const override;
  double mean_exp(double lambda) const override;
  double second_exp(double lambda) const override;
  KernelMoments kernel_moments(double lo, double hi) const override;
  LawPtr tilted(double eta) const override;

 private:
  double d_;
};

class DiracLaw final : public LifespanLaw {
 public:
  explicit DiracLaw(double a);
  double a() const { return a_; }
  std::string family() const override { return "dirac"; }
  double survival(double r) const override;
  double mass_at_infinity() const override;
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  double mean() const override { return a_; }
  double laplace(double lambda) const override;
  double mean_exp(double lambda) const override;
  double second_exp(double lambda) const override;
  KernelMoments kernel_moments(double lo, double hi) const override;
  LawPtr tilted(double eta) const override;
  bool smooth() const override { return a_ == kInf; }

 private:
  double a_;
};

// Weighted atoms; equal weights when built from a raw sample.
class EmpiricalLaw final : public LifespanLaw {
 public:
  explicit EmpiricalLaw(std::vector<double> sample);
  EmpiricalLaw(std::vector<double> values, std::vector<double> weights);
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  std::string family() const override { return "empirical"; }
  double survival(double r) const override;
  double mass_at_infinity() const override;
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  double mean() const override;
  double laplace(double lambda) const override;
  double mean_exp(double lambda) const override;
  double second_exp(double lambda) const override;
  KernelMoments kernel_moments(double lo, double hi) const override;
  LawPtr tilted(double eta) const override;
  bool smooth() const override { return false; }

 private:
  std::vector<double> values_;   // sorted ascending
  std::vector<double> weights_;  // sum to 1
  std::vector<double> upper_;    // upper_[i] = sum of weights_[i..]
  std::vector<double> cumul_;    // cumul_[i] = sum of weights_[..i]
  bool uniform_ = true;
};

class MixtureLaw final : public LifespanLaw {
 public:
  explicit MixtureLaw(std::vector<std::pair<double, LawPtr>> components);
  const std::vector<std::pair<double, LawPtr>>& components() const { return components_; }
  std::string family() const override { return "mixture"; }
  double survival(double r) const override;
  double mass_at_infinity() const override;
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  double mean() const override;
  double laplace(double lambda) const override;
  double mean_exp(double lambda) const override;
  double second_exp(double lambda) const override;
  KernelMoments kernel_moments(double lo, double hi) const override;
  LawPtr tilted(double eta) const override;
  bool smooth() const override;
  std::vector<double> kinks() const override;

 private:
  std::vector<std::pair<double, LawPtr>> components_;
  std::vector<double> cumul_;
};

// Hazard description for make_spec_from_hazard: a rate density with its
// cumulative mu((0, z)). Use the named constructors.
struct HazardRate {
  std::function<double(double)> density;
  std::function<double(double)> cumulative;
  std::optional<double> constant;
  // Piecewise-constant data, kept for serialization.
  std::vector<double> breaks;
  std::vector<double> rates;

  static HazardRate constant_rate(double d);
  static HazardRate piecewise(std::vector<double> breaks, std::vector<double> rates);
  // Cumulative computed by adaptive quadrature when not supplied.
  static HazardRate from_density(std::function<double(double)> density,
                                 std::function<double(double)> cumulative = {});
};

class HazardLaw final : public LifespanLaw {
 public:
  explicit HazardLaw(HazardRate hazard);
  std::string family() const override { return "hazard"; }
  double survival(double r) const override;
  double mass_at_infinity() const override { return tail_mass_; }
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  bool smooth() const override { return hazard_.breaks.empty(); }
  std::vector<double> kinks() const override { return hazard_.breaks; }

 private:
  HazardRate hazard_;
  double total_;      // mu((0, inf)), possibly +inf
  double tail_mass_;  // exp(-total_)
};

// exp(-eta r) P(dr) normalized, sampled by rejection from the base law.
class TiltedLaw final : public LifespanLaw {
 public:
  TiltedLaw(LawPtr base, double eta);
  std::string family() const override { return "tilted"; }
  double survival(double r) const override;
  double mass_at_infinity() const override { return 0.0; }
  double sample(RngStream& rng) const override;
  nlohmann::json to_json() const override;
  double mean() const override;
  double laplace(double lambda) const override;
  double mean_exp(double lambda) const override;
  double second_exp(double lambda) const override;
  LawPtr tilted(double eta) const override;
  bool smooth() const override { return base_->smooth(); }
  std::vector<double> kinks() const override { return base_->kinks(); }

  static constexpr int kMaxAttempts = 1000000;

 private:
  LawPtr base_;
  double eta_;
  double norm_;
};

// Finite lifespan measure: birth rate b times a lifespan law.
struct LifespanSpec {
  double b = 0.0;
  LawPtr law;

  double q() const { return b * law->mass_at_infinity(); }
  double m() const;
  // Lambda([r, +inf]).
  double tail(double r) const { return b * law->survival(r); }
  double sample_lifespan(RngStream& rng) const { return law->sample(rng); }
  nlohmann::json to_json() const;
};

LifespanSpec make_spec(const nlohmann::json& config);
LifespanSpec make_spec_from_hazard(double b, const HazardRate& hazard);
LifespanSpec exponential_spec(double b, double d);
LifespanSpec dirac_spec(double b, double a);
LifespanSpec yule_spec(double b);
LifespanSpec empirical_spec(double b, std::vector<double> sample);

// Compares family and parameters recursively, numbers to within tol.
bool same_parameters(const LifespanSpec& x, const LifespanSpec& y, double tol);

enum class Criticality { Subcritical, Critical, Supercritical };
std::string to_string(Criticality c);

double compute_eta(const LifespanSpec& spec);

struct PsiModel {
  LifespanSpec spec;
  double eta = 0.0;
  Criticality criticality = Criticality::Subcritical;
};

PsiModel make_model(const LifespanSpec& spec);

double F(const PsiModel& model, double lambda);
double psi(const PsiModel& model, double lambda);
double psi_prime(const PsiModel& model, double lambda);
double psi_second(const PsiModel& model, double lambda);
double phi_inverse(const PsiModel& model, double qarg);

// Scale function tabulated on a uniform grid, linear interpolation.
class ScaleTable {
 public:
  ScaleTable(double h, std::vector<double> values);
  double step() const { return h_; }
  double x_max() const { return h_ * static_cast<double>(values_.size() - 1); }
  const std::vector<double>& values() const { return values_; }
  double operator()(double x) const;
  std::string to_csv() const;

 private:
  double h_;
  std::vector<double> values_;
};

struct ScaleOptions {
  // One Richardson step against the half-step solution.
  bool extrapolate = true;
};

ScaleTable scale_table(const PsiModel& model, double x_max, double h, ScaleOptions options = {});

// W in closed form for Yule and exponential lifespans.
std::optional<double> closed_form_scale(const LifespanSpec& spec, double x);

// Closed form when available, otherwise a table.
class ScaleFunction {
 public:
  ScaleFunction(const PsiModel& model, double x_max, double h = 1e-3);
  double operator()(double x) const;
  bool closed_form() const { return !table_.has_value(); }

 private:
  LifespanSpec spec_;
  std::optional<ScaleTable> table_;
};

LifespanSpec conditioned_spec(const LifespanSpec& spec);

double offspring_gf(const LifespanSpec& spec, double s);

}  // namespace splitree
