#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>

#include "mtg/grid.hpp"
#include "mtg/rng.hpp"

using namespace mtg;

namespace {

MultitimeGrid square_grid(int t_nodes, int x_nodes) {
  return MultitimeGrid({Axis{0.0, 1.0, t_nodes}}, {Axis{0.0, 1.0, x_nodes}});
}

}  // namespace

TEST_CASE("axis coordinates hit both ends") {
  Axis ax{0.0, 1.0, 11};
  CHECK(ax.step() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(ax.coord(0) == 0.0);
  CHECK(std::abs(ax.coord(10) - 1.0) <= 1e-12);

  Axis one{0.5, 0.5, 1};
  CHECK(one.step() == 0.0);
  CHECK(one.coord(0) == 0.5);
}

TEST_CASE("grid counts and index round trips") {
  MultitimeGrid g({Axis{0.0, 1.0, 3}, Axis{0.0, 2.0, 2}},
                  {Axis{-1.0, 1.0, 5}});
  CHECK(g.m() == 2);
  CHECK(g.n() == 1);
  CHECK(g.time_count() == 6);
  CHECK(g.state_count() == 5);
  CHECK(g.node_count() == 30);

  for (std::size_t f = 0; f < g.time_count(); ++f)
    CHECK(g.time_flat(g.time_unflat(f)) == f);
  for (std::size_t f = 0; f < g.state_count(); ++f)
    CHECK(g.state_flat(g.state_unflat(f)) == f);

  // axis 0 is most significant
  CHECK(g.time_flat({0, 0}) == 0);
  CHECK(g.time_flat({0, 1}) == 1);
  CHECK(g.time_flat({1, 0}) == 2);
  CHECK(g.terminal_index() == MultiIndex{2, 1});
  CHECK(g.is_terminal({2, 1}));
  CHECK_FALSE(g.is_terminal({2, 0}));

  CHECK_THROWS_AS(g.time_flat({3, 0}), GridError);
  CHECK_THROWS_AS(g.state_flat({-1}), GridError);
  CHECK_THROWS_AS(MultitimeGrid({Axis{0.0, 1.0, 1}}, {}), GridError);
  CHECK_THROWS_AS(MultitimeGrid({Axis{1.0, 0.0, 3}}, {}), GridError);
}

TEST_CASE("antidiagonal levels order and coverage") {
  MultitimeGrid g1({Axis{0.0, 1.0, 3}}, {Axis{0.0, 1.0, 2}});
  auto lv1 = antidiagonal_levels(g1);
  REQUIRE(lv1.size() == 3);
  CHECK(lv1[0] == std::vector<MultiIndex>{{2}});
  CHECK(lv1[1] == std::vector<MultiIndex>{{1}});
  CHECK(lv1[2] == std::vector<MultiIndex>{{0}});

  MultitimeGrid g2({Axis{0.0, 1.0, 2}, Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 2}});
  auto lv2 = antidiagonal_levels(g2);
  REQUIRE(lv2.size() == 3);
  CHECK(lv2[0] == std::vector<MultiIndex>{{1, 1}});
  CHECK(lv2[1] == std::vector<MultiIndex>{{0, 1}, {1, 0}});
  CHECK(lv2[2] == std::vector<MultiIndex>{{0, 0}});

  MultitimeGrid g3({Axis{0.0, 1.0, 3}, Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 2}});
  auto lv3 = antidiagonal_levels(g3);
  CHECK(lv3.size() == 4);

  // topological order: every +1 neighbor sits in a strictly earlier level
  std::size_t total = 0;
  for (std::size_t L = 0; L < lv3.size(); ++L) {
    total += lv3[L].size();
    for (const MultiIndex& j : lv3[L]) {
      for (int a = 0; a < g3.m(); ++a) {
        if (j[a] + 1 >= g3.time_axis(a).nodes) continue;
        MultiIndex fwd = j;
        ++fwd[a];
        bool earlier = false;
        for (std::size_t E = 0; E < L && !earlier; ++E)
          for (const MultiIndex& q : lv3[E])
            if (q == fwd) {
              earlier = true;
              break;
            }
        CHECK(earlier);
      }
    }
  }
  CHECK(total == g3.time_count());
}

TEST_CASE("central gradient exact on quadratics") {
  MultitimeGrid g({Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 11}});
  ValueField f(g, "test");
  for (std::size_t k = 0; k < g.state_count(); ++k) {
    double x = g.state_axis(0).coord(static_cast<int>(k));
    for (std::size_t t = 0; t < g.time_count(); ++t) f.at(t, k) = x * x;
  }
  auto grad = spatial_gradient(f, 0, {5}, GradScheme::Central);
  CHECK(grad[0] == doctest::Approx(1.0).epsilon(1e-13));

  ValueField c(g, "const");
  for (auto& v : c.data()) v = 3.25;
  CHECK(spatial_gradient(c, 0, {4}, GradScheme::Central)[0] == 0.0);
}

TEST_CASE("central gradient error on sin matches second order") {
  MultitimeGrid g({Axis{0.0, 1.0, 2}}, {Axis{-0.5, 0.5, 101}});
  ValueField f(g, "sin");
  for (std::size_t k = 0; k < g.state_count(); ++k) {
    double x = g.state_axis(0).coord(static_cast<int>(k));
    f.at(0, k) = std::sin(x);
    f.at(1, k) = std::sin(x);
  }
  auto grad = spatial_gradient(f, 0, {50}, GradScheme::Central);
  CHECK(std::abs(grad[0] - 1.0) <= 1e-4);
}

TEST_CASE("gradient boundary behavior and errors") {
  MultitimeGrid g({Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 5}});
  ValueField f(g, "lin");
  for (std::size_t k = 0; k < g.state_count(); ++k) {
    double x = g.state_axis(0).coord(static_cast<int>(k));
    f.at(0, k) = 2.0 * x;
    f.at(1, k) = 2.0 * x;
  }
  CHECK_THROWS_AS(spatial_gradient(f, 0, {0}, GradScheme::Central), GridError);
  CHECK_THROWS_AS(spatial_gradient(f, 0, {4}, GradScheme::Central), GridError);

  // one-sided at boundary regardless of requested sign
  CHECK(spatial_gradient(f, 0, {0}, GradScheme::Upwind, {-1.0})[0] ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(spatial_gradient(f, 0, {4}, GradScheme::Upwind, {+1.0})[0] ==
        doctest::Approx(2.0).epsilon(1e-13));
  CHECK(node_gradient(f, 0, {0})[0] == doctest::Approx(2.0).epsilon(1e-13));

  MultitimeGrid coarse({Axis{0.0, 1.0, 2}}, {Axis{0.0, 0.0, 1}});
  ValueField cf(coarse, "c");
  CHECK_THROWS_AS(spatial_gradient(cf, 0, {0}, GradScheme::Central), GridError);
}

TEST_CASE("gradient is linear in the field") {
  MultitimeGrid g({Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 9}, Axis{0.0, 1.0, 7}});
  ValueField f1(g, "a"), f2(g, "b"), mix(g, "mix");
  Rng rng(77);
  for (std::size_t i = 0; i < f1.data().size(); ++i) {
    f1.data()[i] = rng.uniform(-1.0, 1.0);
    f2.data()[i] = rng.uniform(-1.0, 1.0);
    mix.data()[i] = 2.0 * f1.data()[i] - 0.5 * f2.data()[i];
  }
  auto ga = spatial_gradient(f1, 1, {4, 3}, GradScheme::Central);
  auto gb = spatial_gradient(f2, 1, {4, 3}, GradScheme::Central);
  auto gm = spatial_gradient(mix, 1, {4, 3}, GradScheme::Central);
  for (int i = 0; i < 2; ++i)
    CHECK(std::abs(gm[static_cast<std::size_t>(i)] -
                   (2.0 * ga[static_cast<std::size_t>(i)] -
                    0.5 * gb[static_cast<std::size_t>(i)])) <= 1e-12);
}

TEST_CASE("box integral volume, degenerate edge, linear integrand") {
  MultitimeGrid g({Axis{0.0, 1.0, 11}, Axis{0.0, 1.0, 6}}, {Axis{0.0, 1.0, 2}});
  // one cell: edges 0.1 x 0.2
  double vol = box_integral(g, {0, 0}, {1, 1}, [](const MultiIndex&) { return 1.0; });
  CHECK(vol == doctest::Approx(0.02).epsilon(1e-13));

  double degen = box_integral(g, {0, 2}, {5, 2}, [](const MultiIndex&) { return 1.0; });
  CHECK(degen == 0.0);

  double lin = box_integral(g, {0, 0}, {10, 5}, [&](const MultiIndex& j) {
    return g.time_axis(0).coord(j[0]) + g.time_axis(1).coord(j[1]);
  });
  CHECK(std::abs(lin - 1.0) <= 1e-12);

  CHECK_THROWS_AS(box_integral(g, {0, 0}, {11, 5}, [](const MultiIndex&) { return 1.0; }),
                  GridError);
  CHECK_THROWS_AS(box_integral(g, {3, 0}, {2, 5}, [](const MultiIndex&) { return 1.0; }),
                  GridError);
}

TEST_CASE("box integral is additive under a node-aligned split") {
  MultitimeGrid g({Axis{0.0, 1.0, 9}, Axis{0.0, 1.0, 5}}, {Axis{0.0, 1.0, 2}});
  Rng rng(5150);
  std::vector<double> vals(g.time_count());
  for (auto& v : vals) v = rng.uniform(-2.0, 2.0);
  auto at = [&](const MultiIndex& j) { return vals[g.time_flat(j)]; };

  double whole = box_integral(g, {0, 0}, {8, 4}, at);
  double left = box_integral(g, {0, 0}, {5, 4}, at);
  double right = box_integral(g, {5, 0}, {8, 4}, at);
  CHECK(std::abs(whole - (left + right)) <= 1e-12);
}

TEST_CASE("state interpolation: nodes exact, cells linear, queries clamp") {
  MultitimeGrid g = square_grid(2, 5);
  ValueField f(g, "v");
  for (std::size_t k = 0; k < g.state_count(); ++k)
    f.at(0, k) = static_cast<double>(k * k);

  std::uint64_t clamps = 0;
  for (int k = 0; k < 5; ++k) {
    double x = g.state_axis(0).coord(k);
    CHECK(interpolate_state(f, 0, {x}, &clamps) == static_cast<double>(k * k));
  }
  CHECK(clamps == 0);

  CHECK(interpolate_state(f, 0, {0.125}, &clamps) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(clamps == 0);

  CHECK(interpolate_state(f, 0, {1.5}, &clamps) == 16.0);
  CHECK(clamps == 1);
  CHECK(interpolate_state(f, 0, {-0.25}, &clamps) == 0.0);
  CHECK(clamps == 2);
}

TEST_CASE("multilinear interpolation in two state dimensions") {
  MultitimeGrid g({Axis{0.0, 1.0, 2}}, {Axis{0.0, 1.0, 3}, Axis{0.0, 1.0, 3}});
  ValueField f(g, "plane");
  for (int k1 = 0; k1 < 3; ++k1)
    for (int k2 = 0; k2 < 3; ++k2) {
      double x1 = g.state_axis(0).coord(k1), x2 = g.state_axis(1).coord(k2);
      f.at(0, g.state_flat({k1, k2})) = 3.0 * x1 - 2.0 * x2 + 0.25;
    }
  // multilinear reproduces affine functions everywhere in the box
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    double x1 = rng.uniform(0.0, 1.0), x2 = rng.uniform(0.0, 1.0);
    double got = interpolate_state(f, 0, {x1, x2}, nullptr);
    CHECK(std::abs(got - (3.0 * x1 - 2.0 * x2 + 0.25)) <= 1e-12);
  }
}

TEST_CASE("divergence residual: zero field and linear-in-time field") {
  MultitimeGrid g({Axis{0.0, 1.0, 6}, Axis{0.0, 1.0, 6}}, {Axis{-1.0, 1.0, 5}});
  GeneratingField zero(g, "zero");

  std::vector<TrajectorySample> path;
  for (int k = 0; k < 6; ++k)
    path.push_back({{k, k}, {0.5}, {{0.0}, {0.0}}});

  auto rz = divergence_residual(zero, {0, 0}, {5, 5}, path);
  CHECK(rz.residual == 0.0);

  GeneratingField lin(g, "lin");
  for (std::size_t tf = 0; tf < g.time_count(); ++tf) {
    MultiIndex j = g.time_unflat(tf);
    for (std::size_t k = 0; k < g.state_count(); ++k) {
      lin.at(0, tf, k) = g.time_axis(0).coord(j[0]);
      lin.at(1, tf, k) = g.time_axis(1).coord(j[1]);
    }
  }
  auto rl = divergence_residual(lin, {0, 0}, {5, 5}, path);
  CHECK(rl.residual <= 1e-12);
  CHECK(std::abs(rl.signed_value) <= 1e-12);
}

TEST_CASE("divergence residual rejects bad trajectories") {
  MultitimeGrid g({Axis{0.0, 1.0, 3}}, {Axis{-1.0, 1.0, 5}});
  GeneratingField f(g, "f");
  std::vector<TrajectorySample> leaves = {
      {{0}, {0.0}, {{0.0}}}, {{1}, {2.0}, {{0.0}}}, {{2}, {0.0}, {{0.0}}}};
  CHECK_THROWS_AS(divergence_residual(f, {0}, {2}, leaves), GridError);

  std::vector<TrajectorySample> short_path = {{{0}, {0.0}, {{0.0}}}};
  CHECK_THROWS_AS(divergence_residual(f, {0}, {2}, short_path), GridError);
}

TEST_CASE("refinement helpers") {
  MultitimeGrid g({Axis{0.0, 1.0, 5}}, {Axis{-1.0, 1.0, 3}});
  MultitimeGrid h = g.with_steps_halved();
  CHECK(h.time_axis(0).nodes == 9);
  CHECK(h.state_axis(0).nodes == 5);
  CHECK(h.time_axis(0).step() == doctest::Approx(g.time_axis(0).step() / 2).epsilon(1e-15));
  CHECK(h.time_axis(0).hi == 1.0);

  MultitimeGrid d = g.with_nodes_doubled();
  CHECK(d.time_axis(0).nodes == 10);
  CHECK(d.state_axis(0).nodes == 6);
}

TEST_CASE("fields report finiteness") {
  MultitimeGrid g = square_grid(2, 3);
  ValueField f(g, "v");
  CHECK(f.all_finite());
  f.at(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(f.all_finite());

  GeneratingField gf(g, "g");
  CHECK(gf.all_finite());
  gf.at(0, 0, 0) = std::numeric_limits<double>::infinity();
  CHECK_FALSE(gf.all_finite());
}
