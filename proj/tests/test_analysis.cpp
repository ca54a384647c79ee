#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "splitree/analysis.hpp"
#include "splitree/contour.hpp"
#include "splitree/simulate.hpp"

using namespace splitree;
using fixture::two_individuals;

TEST_SUITE("analysis") {

TEST_CASE("coalescent profile examples") {
  CHECK(coalescent_profile(ChronologicalTree::single(5.0), 3.0).depths == std::vector<double>{0.0});
  CHECK(coalescent_profile(two_individuals(), 2.5).depths == std::vector<double>{2.0, 0.0});
  CHECK(coalescent_profile(jccp(two_individuals()), 2.5).depths == std::vector<double>{2.0, 0.0});
  CHECK_THROWS(coalescent_profile(two_individuals(), 6.0));
}

TEST_CASE("coalescent profile: tree and contour routes agree") {
  RngStream rng(21, 0);
  const auto spec = exponential_spec(1.5, 1.0);
  int nontrivial = 0;
  for (int rep = 0; rep < 300; ++rep) {
    const auto t = sample_tree(spec, 1.0, 4.0, rng);
    const double tau = 3.0;
    if (width(t, tau) == 0) continue;
    const auto a = coalescent_profile(t, tau);
    const auto b = coalescent_profile(jccp(t), tau);
    REQUIRE(a.depths.size() == width(t, tau));
    REQUIRE(b.depths.size() == a.depths.size());
    for (std::size_t i = 0; i < a.depths.size(); ++i) CHECK(b.depths[i] == doctest::Approx(a.depths[i]).epsilon(1e-12));
    for (std::size_t i = 0; i + 1 < a.depths.size(); ++i) {
      CHECK(a.depths[i] > 0.0);
      CHECK(a.depths[i] < tau);
    }
    // Pairwise coalescence levels are running minima of the depths.
    const auto alive = alive_in_order(t, tau);
    for (std::size_t j = 0; j < alive.size(); ++j)
      for (std::size_t k = j + 1; k < alive.size(); ++k) {
        double m = a.depths[j];
        for (std::size_t i = j; i < k; ++i) m = std::min(m, a.depths[i]);
        CHECK(coalescence_point(t, {t.label_of(alive[j]), tau}, {t.label_of(alive[k]), tau}).level == m);
      }
    nontrivial += alive.size() > 2;
  }
  CHECK(nontrivial > 20);
}

TEST_CASE("coalescence cdf") {
  const auto model = make_model(exponential_spec(1.2, 1.0));
  CHECK(coalescence_cdf(model, 3.0, 3.0) == 1.0);
  CHECK(coalescence_cdf(model, 3.0, 0.0) == 0.0);
  CHECK_THROWS(coalescence_cdf(model, 3.0, 3.5));
  CHECK_THROWS(coalescence_cdf(model, 3.0, -0.1));

  // Critical exponential: density (1 + b tau) / tau / (1 + b sigma)^2.
  const double b = 0.8, tau = 3.0;
  const auto crit = make_model(exponential_spec(b, b));
  const ScaleFunction W(crit, tau);
  for (double s : {0.3, 1.0, 2.2}) {
    const double h = 1e-5;
    const double dens = (coalescence_cdf(W, tau, s + h) - coalescence_cdf(W, tau, s - h)) / (2 * h);
    CHECK(dens == doctest::Approx((1 + b * tau) / tau / ((1 + b * s) * (1 + b * s))).epsilon(1e-7));
    const double integral =
        oracle::simpson([&](double x) { return (1 + b * tau) / tau / ((1 + b * x) * (1 + b * x)); }, 0.0, s, 200);
    CHECK(coalescence_cdf(W, tau, s) == doctest::Approx(integral).epsilon(1e-9));
  }

  // Depth law is the complementary view of C = tau - A.
  const ScaleFunction Ws(model, tau);
  for (double s : {0.5, 1.5, 2.5}) CHECK(depth_cdf(Ws, tau, s) == doctest::Approx(1.0 - coalescence_cdf(Ws, tau, tau - s)));
}

TEST_CASE("marginal and extinction") {
  const auto model = make_model(exponential_spec(1.2, 1.0));
  const ScaleFunction W(model, 3.0);
  const auto m = marginal(model, 1.0, 3.0);
  CHECK(m.p_zero == doctest::Approx(W(2.0) / W(3.0)).epsilon(1e-14));
  CHECK(m.success == doctest::Approx(1.0 / W(3.0)).epsilon(1e-14));
  CHECK(m.mean_conditional == doctest::Approx(W(3.0)).epsilon(1e-14));
  CHECK(marginal(model, 1e-9, 3.0).p_zero == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(marginal(model, 4.0, 3.0).p_zero == 0.0);
  CHECK_THROWS(marginal(model, 0.0, 3.0));
  CHECK_THROWS(marginal(model, 1.0, -3.0));
  CHECK(marginal(make_model(yule_spec(0.7)), 1.0, 2.0).success == doctest::Approx(std::exp(-1.4)).epsilon(1e-14));

  CHECK(extinction_prob(make_model(exponential_spec(0.8, 1.0)), 3.0) == 1.0);
  CHECK(extinction_prob(model, 1.0) == doctest::Approx(std::exp(-0.2)).epsilon(1e-12));
  CHECK(extinction_prob(model, 1e4) < 1e-300);
}

TEST_CASE("limit laws") {
  const auto sub = limit_laws(make_model(exponential_spec(0.8, 1.0)));
  CHECK(*sub.yaglom_success == doctest::Approx(0.2).epsilon(1e-14));
  CHECK(!sub.growth_rate);
  const auto sup = limit_laws(make_model(exponential_spec(1.2, 1.0)));
  CHECK(*sup.split_p == doctest::Approx(1.0 - 1.0 / 1.2).epsilon(1e-12));
  CHECK(*sup.growth_rate == *sup.split_p);
  // Critical exponential: psi''(0+) = 2 b / d^2.
  const auto crit = limit_laws(make_model(exponential_spec(1.0, 1.0)));
  CHECK(*crit.critical_tail_rate == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ages and residuals") {
  const auto ar = ages_residuals(two_individuals(), 2.5);
  REQUIRE(ar.entries.size() == 2);
  CHECK(ar.entries[0].age == 2.5);
  CHECK(ar.entries[0].residual == 2.5);
  CHECK(ar.entries[0].first);
  CHECK(ar.entries[1].age == 0.5);
  CHECK(ar.entries[1].residual == 1.0);
  CHECK(!ar.entries[1].first);

  TreeBuilder capped(2.5);
  capped.set_cap(2.5);
  CHECK_THROWS(ages_residuals(capped.finish(), 2.5));

  // Sampled trees keep the unclipped death level, so residuals survive the cap.
  RngStream rng(22, 0);
  for (int rep = 0; rep < 50; ++rep) {
    const auto t = sample_tree(exponential_spec(1.5, 1.0), 1.0, 2.0, rng);
    if (width(t, 2.0) == 0) continue;
    for (const auto& e : ages_residuals(t, 2.0).entries) {
      CHECK(e.age > 0.0);
      CHECK(e.age <= 2.0);
      CHECK(e.residual >= 0.0);
    }
  }
}

TEST_CASE("descendance split") {
  RngStream rng(23, 0);
  const auto yule = make_model(yule_spec(0.8));
  const auto t = sample_tree(yule.spec, kInf, 3.0, rng);
  auto ws = descendance_split(yule, t, 2.5, 6.0, rng);
  CHECK(ws.xi == width(t, 2.5));
  CHECK(ws.xi_inf == ws.xi);
  CHECK(ws.xi_fin == 0);
  CHECK(ws.horizon == 6.0);
  CHECK_THROWS(descendance_split(yule, t, 2.5, 2.5, rng));

  // Reading a tree that reaches the horizon.
  const auto sub = make_model(exponential_spec(0.8, 1.0));
  const auto big = ChronologicalTree::from_records(
      {{{}, 0.0, 5.0, {}}, {{1}, 2.0, 3.5, {}}, {{2}, 1.0, 2.2, {}}, {{1, 1}, 3.0, 9.0, {}}});
  ws = descendance_split(sub, big, 2.1, 8.0, rng);
  CHECK(ws.xi == 3);
  CHECK(ws.xi_inf == 1);
  CHECK(ws.xi_fin == 2);
  CHECK(ws.misclassification_bound == doctest::Approx(1.0));

  const DescendanceClassifier cls(make_model(exponential_spec(1.2, 1.0)), 40.0);
  CHECK(cls.misclassification_bound() < 1e-3);
}

TEST_CASE("kolmogorov distribution") {
  CHECK(kolmogorov_survival(0.0) == 1.0);
  CHECK(kolmogorov_survival(1.0) == doctest::Approx(0.26999967).epsilon(1e-6));
  CHECK(kolmogorov_survival(0.5) == doctest::Approx(0.96394524).epsilon(1e-6));
  CHECK(kolmogorov_survival(1.36) == doctest::Approx(0.04946).epsilon(1e-3));
  // Both series agree where they switch.
  CHECK(kolmogorov_survival(1.1799999) == doctest::Approx(kolmogorov_survival(1.18)).epsilon(1e-6));
}

TEST_CASE("goodness of fit calibration") {
  RngStream rng(24, 0);
  std::vector<double> p_ks, p_two, p_geo;
  for (int rep = 0; rep < 200; ++rep) {
    std::vector<double> x(500), y(400);
    for (auto& v : x) v = rng.exponential(1.0);
    for (auto& v : y) v = rng.exponential(1.0);
    p_ks.push_back(gof_ks(x, [](double s) { return -std::expm1(-s); }).p_value);
    p_two.push_back(gof_ks_two_sample(x, y).p_value);
    std::vector<std::uint64_t> g(2000);
    for (auto& v : g) v = 1 + static_cast<std::uint64_t>(std::floor(rng.exponential(-std::log(0.7))));
    p_geo.push_back(gof_geometric(g, 0.3).p_value);
  }
  const auto uniform = [](double s) { return std::clamp(s, 0.0, 1.0); };
  CHECK(gof_ks(p_ks, uniform).p_value > 0.01);
  CHECK(gof_ks(p_two, uniform).p_value > 0.01);
  CHECK(gof_ks(p_geo, uniform).p_value > 0.01);
}

TEST_CASE("goodness of fit edge cases") {
  const auto c = gof_ks(std::vector<double>(200, 0.5), [](double s) { return std::clamp(s, 0.0, 1.0); });
  CHECK(c.p_value < 1e-10);
  CHECK(!c.passed);
  const std::vector<double> a{0.1, 0.4, 0.4, 2.0};
  const auto same = gof_ks_two_sample(a, a);
  CHECK(same.statistic == 0.0);
  CHECK(same.p_value == 1.0);
  CHECK_THROWS(gof_ks({}, [](double) { return 0.0; }));
  CHECK_THROWS(gof_ks_two_sample({}, a));
  CHECK_THROWS(gof_geometric({}, 0.5));
  CHECK_THROWS(gof_geometric({1, 2, 0}, 0.5));
  CHECK_THROWS(gof_geometric({1, 1, 2}, 0.5));  // too few for any cell split

  std::vector<std::uint64_t> wrong(3000);
  RngStream rng(25, 0);
  for (auto& v : wrong) v = 1 + static_cast<std::uint64_t>(std::floor(rng.exponential(-std::log(0.5))));
  CHECK(gof_geometric(wrong, 0.3).p_value < 1e-6);

  const auto j = c.to_json();
  CHECK(j["test"] == "ks_one_sample");
  CHECK(j["pass"] == false);
}

}
