#include "doctest.h"

#include "support/oracles.hpp"

#include "parksim/errors.hpp"
#include "parksim/strategies.hpp"

#include <cmath>
#include <map>

using namespace parksim;

TEST_CASE("strategy names") {
  for (auto const kind : kAllStrategies) {
    CHECK(parse_strategy(to_string(kind)) == kind);
  }
  CHECK(parse_strategy("Cord-Oracle") == StrategyKind::CordOracle);
  CHECK_THROWS_AS(parse_strategy("greedy"), ConfigError);
}

TEST_CASE("unc-agn greedy targets") {
  RngStream rng(5);
  SUBCASE("two participants share the nearest spot") {
    std::vector<ParticipantView> const ps{{{0, 0}, {}}, {{0, 2}, {}}};
    std::vector<FreeCell> const free{{{0, 1}, 1}, {{4, 4}, 1}};
    auto const t = unc_agn_targets(ps, free, rng);
    CHECK(t[0] == CellCoord{0, 1});
    CHECK(t[1] == CellCoord{0, 1});
  }
  SUBCASE("single pairing") {
    std::vector<ParticipantView> const ps{{{2, 2}, {}}};
    std::vector<FreeCell> const free{{{3, 3}, 2}};
    CHECK(unc_agn_targets(ps, free, rng)[0] == CellCoord{3, 3});
  }
  SUBCASE("no spots") {
    std::vector<ParticipantView> const ps{{{2, 2}, {}}};
    CHECK_FALSE(unc_agn_targets(ps, {}, rng)[0].has_value());
  }
  SUBCASE("equidistant spots split evenly") {
    std::vector<ParticipantView> const ps{{{2, 2}, {}}};
    std::vector<FreeCell> const free{{{2, 0}, 1}, {{2, 4}, 1}};
    int left = 0;
    int const trials = 100000;
    for (int k = 0; k < trials; ++k) {
      left += unc_agn_targets(ps, free, rng)[0] == CellCoord{2, 0};
    }
    CHECK(std::abs(left / double(trials) - 0.5) <= 0.02);
  }
  SUBCASE("an equally near incumbent is kept") {
    std::vector<ParticipantView> const ps{{{2, 2}, CellCoord{2, 4}}};
    std::vector<FreeCell> const free{{{2, 0}, 1}, {{2, 4}, 1}};
    for (int k = 0; k < 100; ++k) {
      CHECK(unc_agn_targets(ps, free, rng)[0] == CellCoord{2, 4});
    }
  }
}

TEST_CASE("cord-agn travel matrix") {
  std::vector<ParticipantView> const ps{{{0, 0}, {}}, {{2, 2}, {}}};
  std::vector<CellCoord> const units{{0, 1}, {2, 2}};
  auto const m = cord_agn_matrix(ps, units);
  CHECK(m(0, 0) == 1.0);
  CHECK(m(0, 1) == 4.0);
  CHECK(m(1, 1) == 0.0);
  CHECK(cord_agn_matrix({}, units).rows() == 0);

  std::vector<FreeCell> const free{{{0, 0}, 3}, {{1, 1}, 1}};
  CHECK(expand_spot_units(free, 10).size() == 4);
  CHECK(expand_spot_units(free, 2) == std::vector<CellCoord>{{0, 0}, {0, 0}, {1, 1}});
}

TEST_CASE("move budget and reachable sets") {
  CHECK(t_budget(7, 1) == 1);
  CHECK(t_budget(3, 1) == 1);
  CHECK(t_budget(2, 1) == 0);
  CHECK(t_budget(9, 2) == 2);
  CHECK_THROWS_AS(t_budget(1, 1), ContractViolation);

  CHECK(reachable_set({4, 4}, 0).size() == 1);
  CHECK(reachable_set({4, 4}, 1).size() == 5);
  CHECK(reachable_set({4, 4}, 2).size() == 13);
  for (int t = 0; t < 6; ++t) {
    CHECK(reachable_set({0, 0}, t).size() == static_cast<std::size_t>(2 * t * t + 2 * t + 1));
  }
  CHECK(reachable_set({0, 0}, 1, 5).size() == 3);
}

TEST_CASE("capture probability by enumeration") {
  // Singleton ball at distance 2 from the spot misses the ring of radius 1.
  CHECK(capture_probability({2, 0}, {0, 0}, 1, 2) == 0.0);
  CHECK(capture_probability_with_budget({1, 1}, {0, 0}, 1, 1) == doctest::Approx(2.0 / 5.0));
  // Three away with budget 1: the nearest reachable cell is still two from the spot.
  CHECK(capture_probability_with_budget({3, 0}, {0, 0}, 1, 1) == doctest::Approx(oracle::enumerate_capture({3, 0}, {0, 0}, 1, 1)));
  CHECK(oracle::enumerate_capture({3, 0}, {0, 0}, 1, 1) == 0.0);
  CHECK_THROWS_AS(capture_probability({1, 0}, {0, 0}, 1, 5), ContractViolation);

  RngStream rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    int const radius = rng.uniform_int(1, 2);
    CellCoord const s{rng.uniform_int(-4, 4), rng.uniform_int(-4, 4)};
    CellCoord c;
    do {
      c = {rng.uniform_int(-6, 6), rng.uniform_int(-6, 6)};
    } while (manhattan(c, s) <= radius);
    int const tau = rng.uniform_int(radius + 1, radius + 5);
    int const tc = t_budget(tau, radius);
    CHECK(capture_probability(c, s, radius, tau) == doctest::Approx(oracle::enumerate_capture(c, s, radius, tc)));
  }
}

TEST_CASE("oracle cost") {
  OracleContext ctx;
  ctx.radius = 1;
  SUBCASE("participant strictly closest") {
    ctx.competitors = {{0, 6}};
    CHECK(oracle_cost({0, 4}, {0, 0}, ctx) == 4.0);
  }
  SUBCASE("blocked by a competitor inside the radius") {
    ctx.competitors = {{0, 1}};
    CHECK(oracle_cost({0, 4}, {0, 0}, ctx) == kInfeasible);
  }
  SUBCASE("closer competitor outside the radius") {
    ctx.competitors = {{0, 3}};
    double const p = oracle::enumerate_capture({0, 3}, {0, 0}, 1, t_budget(5, 1));
    CHECK(oracle_cost({0, 5}, {0, 0}, ctx) == doctest::Approx(5.0 + 5.0 * p));
  }
  SUBCASE("table agrees with the direct cost") {
    RngStream rng(21);
    for (int trial = 0; trial < 200; ++trial) {
      ctx.radius = rng.uniform_int(1, 2);
      ctx.competitors.clear();
      int const k = rng.uniform_int(0, 4);
      for (int c = 0; c < k; ++c) {
        ctx.competitors.push_back({rng.uniform_int(0, 7), rng.uniform_int(0, 7)});
      }
      std::vector<CellCoord> const spots{{rng.uniform_int(0, 7), rng.uniform_int(0, 7)}, {3, 3}};
      OracleCostTable const table(ctx, spots);
      CellCoord const d{rng.uniform_int(0, 7), rng.uniform_int(0, 7)};
      for (std::size_t s = 0; s < spots.size(); ++s) {
        double const want = oracle_cost(d, spots[s], ctx);
        double const got = table.cost(d, s);
        if (want == kInfeasible) {
          CHECK(got == kInfeasible);
        } else {
          CHECK(got == doctest::Approx(want));
        }
      }
    }
  }
}

TEST_CASE("approx cost") {
  CHECK(approx_cost(6, 0.5) == 12.0);
  CHECK(approx_cost(6, 1.0) == 6.0);
  CHECK(approx_cost(0, 0.3) == 0.0);
  CHECK_THROWS_AS(approx_cost(3, 0.0), ContractViolation);
  CHECK_THROWS_AS(approx_cost(3, 1.5), ContractViolation);
}

TEST_CASE("dispatch") {
  RngStream rng(31);
  SUBCASE("one spot goes to the closer of two participants") {
    std::vector<ParticipantView> const ps{{{0, 0}, {}}, {{0, 5}, {}}};
    std::vector<FreeCell> const free{{{0, 1}, 1}};
    DispatchInput in;
    in.participants = ps;
    in.free = free;
    auto const t = dispatch(StrategyKind::CordAgn, in, rng);
    CHECK(t[0] == CellCoord{0, 1});
    CHECK_FALSE(t[1].has_value());
  }
  SUBCASE("tied participants win the single spot about equally") {
    std::vector<ParticipantView> const ps{{{0, 0}, {}}, {{0, 2}, {}}};
    std::vector<FreeCell> const free{{{0, 1}, 1}};
    DispatchInput in;
    in.participants = ps;
    in.free = free;
    int first = 0;
    int const trials = 20000;
    for (int k = 0; k < trials; ++k) {
      auto const t = dispatch(StrategyKind::CordAgn, in, rng);
      CHECK(t[0].has_value() != t[1].has_value());
      first += t[0].has_value();
    }
    CHECK(std::abs(first / double(trials) - 0.5) <= 0.02);
  }
  SUBCASE("oracle with every spot blocked assigns nobody") {
    std::vector<ParticipantView> const ps{{{0, 5}, {}}, {{5, 5}, {}}};
    std::vector<FreeCell> const free{{{0, 0}, 2}, {{5, 0}, 1}};
    OracleContext ctx;
    ctx.competitors = {{0, 1}, {5, 1}};
    DispatchInput in;
    in.participants = ps;
    in.free = free;
    in.oracle = &ctx;
    auto const t = dispatch(StrategyKind::CordOracle, in, rng);
    CHECK_FALSE(t[0].has_value());
    CHECK_FALSE(t[1].has_value());
  }
  SUBCASE("uniform predictions reproduce cord-agn") {
    RngStream gen(41);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ParticipantView> ps;
      std::vector<FreeCell> free;
      for (int k = 0; k < 4; ++k) {
        ps.push_back({{gen.uniform_int(0, 5), gen.uniform_int(0, 5)}, {}});
      }
      for (int k = 0; k < 3; ++k) {
        free.push_back({{k * 2, gen.uniform_int(0, 5)}, gen.uniform_int(1, 2)});
      }
      std::vector<double> const p(36, 0.37);
      ApproxContext ctx{p, 6};
      DispatchInput in;
      in.participants = ps;
      in.free = free;
      in.approx = &ctx;
      RngStream a(trial);
      RngStream b(trial);
      auto const agn = dispatch(StrategyKind::CordAgn, in, a);
      auto const apx = dispatch(StrategyKind::CordApprox, in, b);
      // Equal-cost optima may differ in who gets which spot; total travel must not.
      auto travel = [&](auto const& t) {
        int sum = 0;
        int count = 0;
        for (std::size_t k = 0; k < ps.size(); ++k) {
          if (t[k]) {
            sum += manhattan(ps[k].pos, *t[k]);
            ++count;
          }
        }
        return std::pair{count, sum};
      };
      CHECK(travel(agn) == travel(apx));
    }
  }
  SUBCASE("units are never over-assigned") {
    RngStream gen(43);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<ParticipantView> ps;
      for (int k = 0; k < 6; ++k) {
        ps.push_back({{gen.uniform_int(0, 5), gen.uniform_int(0, 5)}, {}});
      }
      std::vector<FreeCell> const free{{{1, 1}, 2}, {{4, 4}, 1}};
      DispatchInput in;
      in.participants = ps;
      in.free = free;
      auto const t = dispatch(StrategyKind::CordAgn, in, gen);
      std::map<CellCoord, int> load;
      for (auto const& x : t) {
        if (x) {
          ++load[*x];
        }
      }
      CHECK(load[{1, 1}] <= 2);
      CHECK(load[{4, 4}] <= 1);
      CHECK(load[{1, 1}] + load[{4, 4}] == 3);
    }
  }
  SUBCASE("missing context") {
    std::vector<ParticipantView> const ps{{{0, 0}, {}}};
    std::vector<FreeCell> const free{{{0, 1}, 1}};
    DispatchInput in;
    in.participants = ps;
    in.free = free;
    CHECK_THROWS_AS(dispatch(StrategyKind::CordOracle, in, rng), ConfigError);
    CHECK_THROWS_AS(dispatch(StrategyKind::CordApprox, in, rng), ConfigError);
  }
}
