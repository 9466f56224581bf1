#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "evnet/errors.hpp"
#include "evnet/station_chain.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace evnet;

namespace {

ClassPars make(double lambda, double mu, int S, int R, double nu) {
  ClassPars p;
  p.arrival_rate = lambda;
  p.service_rate = mu;
  p.grid_slots = S;
  p.storage.capacity = R;
  p.storage.recharge_rate = nu;
  return p;
}

}  // namespace

TEST_CASE("state space enumeration") {
  SUBCASE("S=1 R=1 hand enumeration") {
    const auto sp = build_state_space(1, 1);
    const std::vector<ChainState> expected{{0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 0}};
    CHECK(sp.states() == expected);
  }
  SUBCASE("S=5 R=5 has 51 states") { CHECK(build_state_space(5, 5).size() == 51); }
  SUBCASE("R=0 is the plain loss system") {
    const auto sp = build_state_space(3, 0);
    REQUIRE(sp.size() == 4);
    for (int n = 0; n < 4; ++n) CHECK(sp[static_cast<std::size_t>(n)] == ChainState{n, 0});
  }
  SUBCASE("closed form and bijective index over the whole range") {
    for (int S = 1; S <= 15; ++S)
      for (int R = 0; R <= 15; ++R) {
        const auto sp = build_state_space(S, R);
        REQUIRE(sp.size() == static_cast<std::size_t>((S + 1) * (R + 1) + R * (R + 1) / 2));
        for (std::size_t i = 0; i < sp.size(); ++i) REQUIRE(sp.index_of(sp[i]) == i);
        REQUIRE(std::is_sorted(sp.states().begin(), sp.states().end()));
      }
  }
  SUBCASE("invalid sizes") {
    CHECK_THROWS_AS(build_state_space(0, 3), domain_error);
    CHECK_THROWS_AS(build_state_space(2, -1), domain_error);
    CHECK_THROWS_AS(build_state_space(2, 2).index_of({5, 0}), domain_error);
    CHECK_THROWS_AS(build_state_space(2, 2).index_of({3, 2}), domain_error);
  }
}

TEST_CASE("generator structure") {
  SUBCASE("two-state birth-death") {
    const auto p = make(2, 2, 1, 0, 1);
    const auto g = build_generator(p, build_state_space(1, 0));
    Eigen::Matrix2d expected;
    expected << -2, 2, 2, -2;
    CHECK(g.q.isApprox(expected));
  }
  SUBCASE("row of (1,1) with S=R=1 and unit rates") {
    const auto sp = build_state_space(1, 1);
    const auto g = build_generator(make(1, 1, 1, 1, 1), sp);
    const auto r = static_cast<Eigen::Index>(sp.index_of({1, 1}));
    CHECK(g.q(r, static_cast<Eigen::Index>(sp.index_of({2, 0}))) == 1.0);
    CHECK(g.q(r, static_cast<Eigen::Index>(sp.index_of({0, 1}))) == 1.0);
    CHECK(g.q(r, r) == -2.0);
    CHECK(g.q.row(r).cwiseAbs().sum() == 4.0);
  }
  SUBCASE("last state leaves at (S+R) mu") {
    const int S = 4, R = 3;
    const double mu = 1.7;
    const auto sp = build_state_space(S, R);
    const auto g = build_generator(make(3, mu, S, R, 2), sp);
    const auto last = static_cast<Eigen::Index>(sp.size() - 1);
    CHECK(sp[sp.size() - 1] == ChainState{S + R, 0});
    CHECK(g.q(last, last) == doctest::Approx(-(S + R) * mu));
  }
  SUBCASE("conservative with nonnegative off-diagonals") {
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<int> si(1, 8), ri(0, 8);
    std::uniform_real_distribution<double> rate(0.1, 20.0);
    for (int t = 0; t < 50; ++t) {
      const auto p = make(rate(rng), rate(rng), si(rng), ri(rng), rate(rng));
      const auto g = build_generator(p, build_state_space(p.grid_slots, p.storage.capacity));
      for (Eigen::Index i = 0; i < g.q.rows(); ++i) {
        CHECK(std::abs(g.q.row(i).sum()) <= 1e-12);
        for (Eigen::Index j = 0; j < g.q.cols(); ++j)
          if (i != j) CHECK(g.q(i, j) >= 0.0);
      }
    }
  }
  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(build_generator(make(1, 1, 2, 1, 1), build_state_space(3, 1)), domain_error);
  }
  SUBCASE("recharge policy hook") {
    const auto sp = build_state_space(2, 2);
    RechargePolicy idle_scaled = [](const ChainState& s, const ClassPars& p) {
      return p.storage.recharge_rate * (p.grid_slots - s.in_service);
    };
    const auto g = build_generator(make(1, 1, 2, 2, 3), sp, idle_scaled);
    CHECK(g.q(static_cast<Eigen::Index>(sp.index_of({0, 0})), static_cast<Eigen::Index>(sp.index_of({0, 1}))) == 6.0);
    CHECK(g.q(static_cast<Eigen::Index>(sp.index_of({1, 1})), static_cast<Eigen::Index>(sp.index_of({1, 2}))) == 3.0);
  }
}

TEST_CASE("steady state") {
  SUBCASE("symmetric two-state chain") {
    const auto ss = steady_state(build_generator(make(1, 1, 1, 0, 1), build_state_space(1, 0)));
    CHECK(ss.pi[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(ss.pi[1] == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("birth-death balance") {
    const auto ss = steady_state(build_generator(make(1, 2, 1, 0, 1), build_state_space(1, 0)));
    CHECK(ss.pi[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(ss.pi[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  }
  SUBCASE("agrees with a dense LU solve") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> si(1, 6), ri(0, 6);
    std::uniform_real_distribution<double> rate(0.25, 15.0);
    for (int t = 0; t < 40; ++t) {
      const auto p = make(rate(rng), rate(rng), si(rng), ri(rng), rate(rng));
      const auto g = build_generator(p, build_state_space(p.grid_slots, p.storage.capacity));
      const auto ss = steady_state(g);
      const auto ref = oracle::stationary_lu(g.q);
      for (std::size_t i = 0; i < ss.pi.size(); ++i) CHECK(ss.pi[i] == doctest::Approx(ref[i]).epsilon(1e-9));
      CHECK(std::accumulate(ss.pi.begin(), ss.pi.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      CHECK(balance_residual(g, ss.pi) <= 1e-10);
      for (double v : ss.pi) CHECK(v >= 0.0);
    }
  }
  SUBCASE("blocking states are (n,0) with n >= S") {
    const auto sp = build_state_space(2, 2);
    const auto ss = steady_state(build_generator(make(1, 1, 2, 2, 1), sp));
    std::set<ChainState> got;
    for (auto i : ss.blocking_states) got.insert(sp[i]);
    CHECK(got == std::set<ChainState>{{2, 0}, {3, 0}, {4, 0}});
  }
  SUBCASE("lambda = 0 is degenerate") {
    const auto g = build_generator(make(0, 1, 2, 2, 1), build_state_space(2, 2));
    CHECK_THROWS_AS(steady_state(g), degenerate_chain_error);
  }
}

TEST_CASE("erlang_b") {
  CHECK(erlang_b(1, 1.0) == doctest::Approx(0.5));
  CHECK(erlang_b(7, 0.0) == 0.0);
  CHECK(erlang_b(5, 9.25) == doctest::Approx(0.5353).epsilon(1e-4));
  for (int c = 1; c <= 30; ++c)
    for (double a : {0.1, 1.0, 9.25, 25.0}) CHECK(erlang_b(c, a) == doctest::Approx(oracle::erlang_b_closed_form(c, a)).epsilon(1e-12));
  CHECK_THROWS_AS(erlang_b(0, 1.0), domain_error);
  CHECK_THROWS_AS(erlang_b(1, -1.0), domain_error);
}

TEST_CASE("blocking probability") {
  SUBCASE("lambda = 0 returns exactly zero") {
    CHECK(blocking_probability(make(0, 2, 3, 4, 1)) == 0.0);
    CHECK(blocking_probability(make(0, 1, 1, 0, 1)) == 0.0);
  }
  SUBCASE("no storage reduces to Erlang-B") {
    CHECK(blocking_probability(make(18.495, 2, 5, 0, 1)) ==
          doctest::Approx(oracle::erlang_b_closed_form(5, 18.495 / 2)).epsilon(1e-9));
    for (int S = 1; S <= 10; ++S)
      for (double a : {0.5, 1.0, 2.0, 5.0, 10.0, 20.0})
        CHECK(std::abs(blocking_probability(make(2 * a, 2, S, 0, 1)) - oracle::erlang_b_closed_form(S, a)) <= 1e-9);
  }
  SUBCASE("storage-backed station lies between the two loss systems") {
    const double b = blocking_probability(make(18.495, 2, 5, 5, 4));
    CHECK(b >= erlang_b(10, 18.495 / 2));
    CHECK(b <= erlang_b(5, 18.495 / 2));
  }
  SUBCASE("matches the LU oracle") {
    for (double lambda : {0.5, 3.0, 11.0})
      for (int R : {1, 3, 6}) {
        CHECK(blocking_probability(make(lambda, 2, 4, R, 4)) ==
              doctest::Approx(oracle::blocking_lu(lambda, 2, 4, R, 4)).epsilon(1e-9));
      }
  }
  SUBCASE("bracketing and monotonicity on a lattice") {
    const int Ss[] = {1, 3, 6, 10};
    const int Rs[] = {0, 2, 5, 9};
    const double nus[] = {1.0, 2.5, 5.0, 10.0};
    const double lams[] = {0.5, 3.0, 9.0, 25.0};
    const double mu = 2.0;
    auto B = [&](int s, int r, int n, int l) { return blocking_probability(make(lams[l], mu, Ss[s], Rs[r], nus[n])); };
    for (int s = 0; s < 4; ++s)
      for (int r = 0; r < 4; ++r)
        for (int n = 0; n < 4; ++n)
          for (int l = 0; l < 4; ++l) {
            const double b = B(s, r, n, l);
            const double a = lams[l] / mu;
            CHECK(b >= erlang_b(Ss[s] + Rs[r], a) - 1e-12);
            CHECK(b <= erlang_b(Ss[s], a) + 1e-12);
            if (s < 3) CHECK(B(s + 1, r, n, l) <= b + 1e-14);
            if (r < 3) CHECK(B(s, r + 1, n, l) <= b + 1e-14);
            if (n < 3) CHECK(B(s, r, n + 1, l) <= b + 1e-14);
            if (l < 3) CHECK(B(s, r, n, l + 1) >= b - 1e-14);
          }
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(blocking_probability(make(-1, 1, 1, 0, 1)), domain_error);
    CHECK_THROWS_AS(blocking_probability(make(1, 0, 1, 0, 1)), domain_error);
    CHECK_THROWS_AS(blocking_probability(make(1, 1, 1, 2, 0)), domain_error);
    ClassPars p = make(1, 1, 1, 1, 1);
    p.storage.efficiency = 1.5;
    CHECK_THROWS_AS(blocking_probability(p), domain_error);
  }
}

TEST_CASE("storage recharge rate") {
  CHECK(storage_recharge_rate(2.0, 2.0, 0.9) == doctest::Approx(4.0));
  CHECK(storage_recharge_rate(2.0, 2.0, 0.95) > storage_recharge_rate(2.0, 1.0, 0.85));
  CHECK_THROWS_AS(storage_recharge_rate(0.0, 1.0, 0.9), domain_error);
}
