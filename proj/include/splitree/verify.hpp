#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "splitree/analysis.hpp"
#include "splitree/levy_kernel.hpp"

namespace splitree {

// Inputs shared by the verification suites. Every suite draws from its own
// streams derived from `seed`, one stream per replicate.
struct VerifySettings {
  LifespanSpec spec;
  double chi = 1.0;
  double tau = 3.0;
  double tau_cap = 5.0;
  std::size_t replicates = 1000;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  // Relative change of b on the analytic side only (negative control).
  double perturb_b = 0.0;
  // Survival to tau + horizon_margin stands for infinite descendance.
  double horizon_margin = 40.0;
  double extinction_cap = 150.0;
  double conditioning_cap = 60.0;
  // Lower barrier for overshoot samples in the limit suite.
  double overshoot_level = 200.0;
  // Level for the limit theorems; defaults to 30, 50 or 25 by criticality.
  std::optional<double> limit_tau;
};

std::vector<std::string> suite_names();
bool is_suite(const std::string& name);

// Runs one suite. Errors inside a suite become failing reports; suites
// that do not apply to the law return a single advisory "skipped" report.
std::vector<GofReport> run_suite(const std::string& name, const VerifySettings& s);

std::vector<GofReport> verify_marginal(const VerifySettings& s);
std::vector<GofReport> verify_cpp(const VerifySettings& s);
std::vector<GofReport> verify_levy_equivalence(const VerifySettings& s);
std::vector<GofReport> verify_jirina(const VerifySettings& s);
std::vector<GofReport> verify_local_times(const VerifySettings& s);
std::vector<GofReport> verify_ages(const VerifySettings& s);
std::vector<GofReport> verify_split(const VerifySettings& s);
std::vector<GofReport> verify_limits(const VerifySettings& s);
std::vector<GofReport> verify_extinction(const VerifySettings& s);
std::vector<GofReport> verify_conditioning(const VerifySettings& s);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace splitree
