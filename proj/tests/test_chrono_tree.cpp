#include <doctest.h>

#include <cmath>
#include <array>
#include <sstream>

#include "fixtures.hpp"
#include "splitree/chrono_tree.hpp"
#include "splitree/simulate.hpp"

using namespace splitree;
using fixture::three_individuals;
using fixture::two_individuals;

TEST_SUITE("chrono_tree") {

TEST_CASE("labels") {
  UlamLabel u{1, 2};
  CHECK(u.generation() == 2);
  CHECK(u.parent() == UlamLabel{1});
  CHECK(u.child(3) == UlamLabel{1, 2, 3});
  CHECK(UlamLabel{}.to_string() == "()");
  CHECK(u.to_string() == "1.2");
  CHECK(UlamLabel{1}.is_prefix_of(u));
  CHECK(!u.is_prefix_of(UlamLabel{1}));
  CHECK(common_prefix(UlamLabel{1, 2, 1}, UlamLabel{1, 3}) == UlamLabel{1});
  CHECK_THROWS(UlamLabel{}.parent());
}

TEST_CASE("lifespan") {
  CHECK(lifespan(ChronologicalTree::single(5.0), {}) == 5.0);
  CHECK(lifespan(two_individuals(), {1}) == 1.5);
  CHECK(std::isinf(lifespan(ChronologicalTree::single(kInf), {})));
  CHECK_THROWS(lifespan(two_individuals(), {2}));
}

TEST_CASE("tree validation") {
  using R = std::vector<VertexRecord>;
  CHECK_THROWS(ChronologicalTree::from_records(R{{{1}, 1.0, 2.0, {}}}));                            // no root
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 0.0, 5.0, {}}, {{2}, 1.0, 2.0, {}}}));        // gap
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 0.0, 5.0, {}}, {{1}, 5.0, 6.0, {}}}));        // born at death
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 0.0, 5.0, {}}, {{1}, 0.0, 1.0, {}}}));        // born at birth
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 0.0, 5.0, {}}, {{1}, 2.0, 2.0, {}}}));        // empty life
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 1.0, 5.0, {}}}));                             // root alpha
  CHECK_THROWS(ChronologicalTree::from_records(
      R{{{}, 0.0, 5.0, {}}, {{1}, 2.0, 3.0, {}}, {{2}, 2.0, 4.0, {}}}));                            // tied siblings
  CHECK_THROWS(ChronologicalTree::from_records(R{{{}, 0.0, 5.0, {}}, {{}, 0.0, 4.0, {}}}));         // duplicate
  CHECK_NOTHROW(three_individuals());
}

TEST_CASE("is_ancestor") {
  const auto t = two_individuals();
  const TreePoint a{{}, 2.0}, y{{1}, 2.5};
  CHECK(is_ancestor(t, y, y));
  CHECK(is_ancestor(t, a, y));
  CHECK(!is_ancestor(t, TreePoint{{}, 3.0}, y));
  CHECK(is_ancestor(t, TreePoint{{}, 4.0}, TreePoint{{}, 4.5}));
  CHECK(!is_ancestor(t, TreePoint{{}, 4.5}, TreePoint{{}, 4.0}));
  CHECK_THROWS(is_ancestor(t, TreePoint{{1}, 4.0}, y));
}

TEST_CASE("coalescence_point") {
  const auto t = two_individuals();
  CHECK(coalescence_point(t, TreePoint{{}, 4.0}, TreePoint{{}, 1.0}) == TreePoint{{}, 1.0});
  CHECK(coalescence_point(t, TreePoint{{}, 2.5}, TreePoint{{1}, 2.5}) == TreePoint{{}, 2.0});
  const auto s = three_individuals();
  CHECK(coalescence_point(s, TreePoint{{1}, 2.0}, TreePoint{{2}, 3.5}) == TreePoint{{}, 1.0});
  CHECK(coalescence_point(s, TreePoint{{1}, 2.0}, TreePoint{{}, 4.5}) == TreePoint{{}, 1.0});
}

TEST_CASE("linear order on the examples") {
  const auto t = two_individuals();
  const TreePoint top{{}, 5.0}, rho{{}, 0.0};
  for (const TreePoint& x : {TreePoint{{}, 2.5}, TreePoint{{1}, 2.5}, TreePoint{{1}, 3.5}, TreePoint{{}, 1.0}}) {
    CHECK(linear_compare(t, top, x) == std::strong_ordering::less);
    CHECK(linear_compare(t, x, rho) == std::strong_ordering::less);
  }
  CHECK(linear_compare(t, TreePoint{{}, 4.0}, TreePoint{{}, 1.0}) == std::strong_ordering::less);
  CHECK(linear_compare(t, TreePoint{{}, 2.5}, TreePoint{{1}, 2.5}) == std::strong_ordering::less);
  CHECK(linear_compare(t, TreePoint{{1}, 2.5}, TreePoint{{}, 1.5}) == std::strong_ordering::less);
  CHECK(linear_compare(t, TreePoint{{1}, 2.5}, TreePoint{{1}, 2.5}) == std::strong_ordering::equal);
}

TEST_CASE("total_length, truncate, width") {
  CHECK(total_length(ChronologicalTree::single(5.0)) == 5.0);
  CHECK(total_length(two_individuals()) == 6.5);
  CHECK(std::isinf(total_length(ChronologicalTree::single(kInf))));

  CHECK(truncate(two_individuals(), 10.0).records() == two_individuals().records());
  auto t3 = truncate(two_individuals(), 3.0);
  CHECK(t3.size() == 2);
  CHECK(t3.omega({}) == 3.0);
  CHECK(t3.omega({1}) == 3.0);
  auto gone = truncate(ChronologicalTree::from_records({{{}, 0.0, 5.0, {}}, {{1}, 4.0, 6.0, {}}}), 3.0);
  CHECK(gone.size() == 1);
  CHECK(gone.omega({}) == 3.0);
  // Child indices are re-compacted.
  auto compact = truncate(ChronologicalTree::from_records(
                              {{{}, 0.0, 5.0, {}}, {{1}, 4.0, 6.0, {}}, {{2}, 1.0, 2.0, {}}}),
                          3.0);
  CHECK(compact.alpha({1}) == 1.0);

  CHECK(width(two_individuals(), 2.5) == 2);
  CHECK(width(two_individuals(), 6.0) == 0);
  CHECK(width(two_individuals(), 2.0) == 1);
  CHECK(width(two_individuals(), 3.5) == 2);
}

TEST_CASE("width_integral") {
  auto w = width_integral(two_individuals(), 3.0);
  CHECK(w.integral == doctest::Approx(4.0));
  CHECK(w.truncated_length == doctest::Approx(4.0));
  w = width_integral(two_individuals(), 10.0);
  CHECK(w.integral == doctest::Approx(6.5));
  CHECK(w.truncated_length == doctest::Approx(6.5));
  w = width_integral(ChronologicalTree::single(5.0), 1.0);
  CHECK(w.integral == doctest::Approx(1.0));
  CHECK(w.truncated_length == doctest::Approx(1.0));
}

TEST_CASE("graft") {
  const auto host = ChronologicalTree::single(5.0);
  const auto g = graft(host, ChronologicalTree::single(1.0), TreePoint{{}, 2.0}, 1);
  CHECK(g.records() == ChronologicalTree::from_records({{{}, 0.0, 5.0, {}}, {{1}, 2.0, 3.0, {}}}).records());

  const auto h2 = graft(two_individuals(), ChronologicalTree::single(0.5), TreePoint{{}, 4.0}, 1);
  CHECK(h2.alpha({1}) == 4.0);
  CHECK(h2.omega({1}) == 4.5);
  CHECK(h2.alpha({2}) == 2.0);
  CHECK(total_length(h2) == doctest::Approx(6.5 + 0.5));

  CHECK_THROWS(graft(two_individuals(), ChronologicalTree::single(1.0), TreePoint{{}, 2.0}, 1));  // branching
  CHECK_THROWS(graft(two_individuals(), ChronologicalTree::single(1.0), TreePoint{{}, 5.0}, 1));  // leaf
  CHECK_THROWS(graft(two_individuals(), ChronologicalTree::single(1.0), TreePoint{{}, 4.0}, 3));  // index
}

TEST_CASE("classify_point") {
  CHECK(classify_point(ChronologicalTree::single(5.0), TreePoint{{}, 5.0}) == PointKind::Leaf);
  CHECK(classify_point(two_individuals(), TreePoint{{}, 2.0}) == PointKind::Branching);
  CHECK(classify_point(two_individuals(), TreePoint{{}, 1.0}) == PointKind::Simple);
  CHECK(classify_point(two_individuals(), TreePoint{{}, 0.0}) == PointKind::Root);
}

TEST_CASE("generation lengths") {
  const auto z = generation_lengths(three_individuals());
  REQUIRE(z.size() == 2);
  CHECK(z[0] == 5.0);
  CHECK(z[1] == 3.0);
}

TEST_CASE("jsonl round trip") {
  const auto t = ChronologicalTree::from_records({{{}, 0.0, kInf, {}}, {{1}, 0.25, 1.0 / 3.0, {}}});
  std::stringstream ss;
  write_jsonl(ss, t);
  CHECK(ss.str().find("\"inf\"") != std::string::npos);
  CHECK(read_jsonl(ss).records() == t.records());

  std::stringstream bad(R"({"label":[],"alpha":0,"omega":5}
{"label":[1],"alpha":6,"omega":7}
)");
  CHECK_THROWS(read_jsonl(bad));

  std::stringstream forest;
  write_jsonl(forest, two_individuals(), 0);
  write_jsonl(forest, three_individuals(), 1);
  const auto trees = read_jsonl_forest(forest);
  REQUIRE(trees.size() == 2);
  CHECK(trees[1].records() == three_individuals().records());
}

TEST_CASE("random trees: order and coalescence properties") {
  const auto spec = exponential_spec(1.2, 1.0);
  RngStream rng(7, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto t = sample_tree(spec, 1.0, 5.0, rng);
    for (int k = 0; k < 1000; ++k) {
      const auto x = fixture::random_point(t, rng), y = fixture::random_point(t, rng),
                 z = fixture::random_point(t, rng);
      const auto xy = linear_compare(t, x, y), yx = linear_compare(t, y, x);
      CHECK(xy == (0 <=> (yx <=> 0)));
      if (xy == std::strong_ordering::equal) CHECK(x == y);
      const auto yz = linear_compare(t, y, z);
      if (xy != std::strong_ordering::greater && yz != std::strong_ordering::greater)
        CHECK(linear_compare(t, x, z) != std::strong_ordering::greater);

      const auto c = coalescence_point(t, x, y);
      CHECK(c.level <= std::min(x.level, y.level));
      CHECK(is_ancestor(t, c, x));
      CHECK(is_ancestor(t, c, y));

      // For x <= y <= z, the outer coalescence level is the smaller inner one.
      std::array<TreePoint, 3> p{x, y, z};
      std::sort(p.begin(), p.end(), [&](const auto& a, const auto& b) { return linear_compare(t, a, b) < 0; });
      CHECK(coalescence_point(t, p[0], p[2]).level ==
            std::min(coalescence_point(t, p[0], p[1]).level, coalescence_point(t, p[1], p[2]).level));
    }
  }
}

TEST_CASE("random trees: truncation and width integral") {
  const auto spec = exponential_spec(1.2, 1.0);
  RngStream rng(8, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto t = sample_tree(spec, 1.0, 5.0, rng);
    const double tau = 5.0 * rng.uniform(), tau2 = tau + 2.0 * rng.uniform();
    CHECK(truncate(truncate(t, tau2), tau).records() == truncate(t, tau).records());
    const auto w = width_integral(t, tau);
    CHECK(w.integral == doctest::Approx(w.truncated_length).epsilon(1e-9));
  }
}

}
