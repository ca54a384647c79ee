#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "splitree/chrono_tree.hpp"
#include "splitree/contour.hpp"
#include "splitree/levy_kernel.hpp"
#include "splitree/rng.hpp"

namespace splitree {

// Coalescence depths between consecutive individuals alive at tau, in
// linear order, terminated by 0.
struct CoalescentProfile {
  double tau = 0.0;
  std::vector<double> depths;
};

// Vertices alive at tau sorted by the linear order of their points at tau.
std::vector<VertexId> alive_in_order(const ChronologicalTree& tree, double tau);

CoalescentProfile coalescent_profile(const ChronologicalTree& tree, double tau);
CoalescentProfile coalescent_profile(const ContourPath& path, double tau);

// P(C <= sigma) for C = tau - A.
double coalescence_cdf(const ScaleFunction& W, double tau, double sigma);
double coalescence_cdf(const PsiModel& model, double tau, double sigma);
// P(A <= sigma | A > 0).
double depth_cdf(const ScaleFunction& W, double tau, double sigma);

struct Marginal {
  double p_zero = 0.0;
  double success = 0.0;
  double mean_conditional = 0.0;
};
Marginal marginal(const ScaleFunction& W, double chi, double tau);
Marginal marginal(const PsiModel& model, double chi, double tau);

double extinction_prob(const PsiModel& model, double chi);

struct LimitLaws {
  Criticality criticality = Criticality::Subcritical;
  double eta = 0.0;
  std::optional<double> yaglom_success;      // subcritical: 1 - m
  std::optional<double> critical_tail_rate;  // critical: psi''(0+)/2
  std::optional<double> growth_rate;         // supercritical: psi'(eta)
  std::optional<double> split_p;             // supercritical: psi'(eta)
};
LimitLaws limit_laws(const PsiModel& model);

struct AgeResidual {
  struct Entry {
    double age = 0.0;
    double residual = 0.0;
    bool first = false;
  };
  double tau = 0.0;
  std::vector<Entry> entries;
};
AgeResidual ages_residuals(const ChronologicalTree& tree, double tau);

struct WidthStats {
  double tau = 0.0;
  std::size_t xi = 0;
  std::size_t xi_inf = 0;
  std::size_t xi_fin = 0;
  double horizon = 0.0;
  // Worst-case probability, over residual lifetimes, that survival to the
  // horizon is followed by extinction.
  double misclassification_bound = 0.0;
};

// Classifies individuals alive at tau by survival of their descendance to
// tau + margin. Reads the tree when it reaches the horizon, otherwise
// resamples the descendance from the residual lifetime.
class DescendanceClassifier {
 public:
  DescendanceClassifier(const PsiModel& model, double margin);
  WidthStats classify(const ChronologicalTree& tree, double tau, RngStream& rng) const;
  double misclassification_bound() const { return bound_; }

 private:
  PsiModel model_;
  double margin_;
  double bound_;
};

WidthStats descendance_split(const PsiModel& model, const ChronologicalTree& tree, double tau, double horizon,
                             RngStream& rng);

// ----- goodness of fit --------------------------------------------------

struct GofReport {
  std::string name;
  double statistic = 0.0;
  double p_value = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  double alpha = 0.01;
  bool passed = false;
  // "test" for p-value based checks; "tolerance" when the statistic is an
  // error compared against `tolerance` (p_value is then 1 or 0).
  std::string kind = "test";
  std::optional<double> tolerance;
  // Recorded but never fails a run.
  bool advisory = false;
  nlohmann::json extra = nlohmann::json::object();
  nlohmann::json to_json() const;
};

// |estimate - target| / se as a two-sided normal test passing within 3 SE.
GofReport z_report(std::string name, double estimate, double target, double se, std::size_t n);
// Passes when error <= tol.
GofReport tolerance_report(std::string name, double error, double tol, std::size_t n);

// Asymptotic Kolmogorov survival P(K > x).
double kolmogorov_survival(double x);

GofReport gof_geometric(const std::vector<std::uint64_t>& sample, double success);
GofReport gof_ks(std::vector<double> sample, const std::function<double(double)>& cdf);
GofReport gof_ks_two_sample(std::vector<double> a, std::vector<double> b);

}  // namespace splitree
