#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <tuple>

#include "buzzload/errors.hpp"
#include "buzzload/experiments.hpp"
#include "buzzload/simulator.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace buzzload;

namespace {

ModelParams preset(const std::string& name) {
  return load_params(std::string(BUZZLOAD_PRESET_DIR) + "/" + name + ".json");
}

ModelParams tiny() {
  ModelParams p;
  p.beta1 = 0.3;
  p.beta2 = 0.9;
  p.gamma = 1.0;
  p.mu = 0.6;
  p.l = 0.5;
  p.a1 = 0.2;
  p.a2 = 0.5;
  p.i_max = 2;
  p.r_max = 2;
  return p;
}

// One-sample KS distance of x against Exp(1).
double ks_exp1(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = 1.0 - std::exp(-x[k]);
    d = std::max({d, std::fabs(f - static_cast<double>(k) / n), std::fabs(static_cast<double>(k + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("same seed gives the same trace, another seed does not") {
    const ModelParams p = preset("demo_buzz");
    const auto a = simulate(p, {}, Horizon::event_count(5000), 11);
    const auto b = simulate(p, {}, Horizon::event_count(5000), 11);
    const auto c = simulate(p, {}, Horizon::event_count(5000), 12);
    REQUIRE(a.events.size() == 5000);
    bool same = a.t_end == b.t_end;
    for (std::size_t k = 0; k < a.events.size() && same; ++k) {
      same = a.events[k].t == b.events[k].t && a.events[k].kind == b.events[k].kind &&
             a.events[k].state_after == b.events[k].state_after;
    }
    CHECK(same);
    CHECK(a.t_end != c.t_end);
  }

  TEST_CASE("replay, time order and confinement") {
    ModelParams p = preset("demo_buzz");
    p.i_max = 6;
    p.r_max = 5;
    const auto tr = simulate(p, {}, Horizon::event_count(100000), 3);
    CHECK(replay_consistent(tr));
    double prev = tr.t_start;
    bool ordered = true, bounded = true;
    for (const auto& e : tr.events) {
      ordered = ordered && e.t > prev;
      prev = e.t;
      bounded = bounded && in_bounds(e.state_after, p);
    }
    CHECK(ordered);
    CHECK(bounded);
  }

  TEST_CASE("time horizon stops at t_end") {
    const auto tr = simulate(preset("demo_buzz"), {}, Horizon::until(500.0), 5);
    CHECK(tr.t_end == 500.0);
    CHECK(tr.events.back().t <= 500.0);
  }

  TEST_CASE("a1 = 0 from BuzzFree never switches") {
    ModelParams p = preset("demo_buzz");
    p.a1 = 0.0;
    const auto tr = simulate(p, {}, Horizon::event_count(50000), 2);
    const bool any = std::any_of(tr.events.begin(), tr.events.end(),
                                 [](const Event& e) { return e.kind == EventKind::RegimeSwitch; });
    CHECK_FALSE(any);
  }

  TEST_CASE("holding times are exponential with the total rate, exits proportional to rates") {
    const ModelParams p = tiny();
    const auto tr = simulate(p, {}, Horizon::event_count(400000), 8);
    std::map<std::size_t, std::vector<double>> hold;
    std::map<std::size_t, std::size_t> arrivals;
    SystemState s = tr.initial;
    double t = tr.t_start;
    for (const auto& e : tr.events) {
      const std::size_t k = state_index(s, p);
      hold[k].push_back((e.t - t) * transition_rates(s, p).total());
      if (e.kind == EventKind::Arrival) ++arrivals[k];
      t = e.t;
      s = e.state_after;
    }
    int tested = 0;
    for (const auto& [k, v] : hold) {
      if (v.size() < 2000) continue;
      ++tested;
      CHECK(ks_exp1(v) < 1.63 / std::sqrt(static_cast<double>(v.size())));
      const TransitionRates r = transition_rates(state_at(k, p), p);
      const double share = static_cast<double>(arrivals[k]) / static_cast<double>(v.size());
      const double expect = r.arrival / r.total();
      CHECK(std::fabs(share - expect) < 4.0 * std::sqrt(expect * (1 - expect) / static_cast<double>(v.size())) + 1e-9);
    }
    CHECK(tested >= 10);
  }

  TEST_CASE("tiny chain occupancy matches the dense stationary solve") {
    const ModelParams p = tiny();
    const auto tr = simulate(p, {}, Horizon::event_count(1000000), 21);
    const auto occ = state_occupancy(tr);
    const Eigen::VectorXd pi = oracle::stationary(oracle::dense_generator(p));
    double tv = 0.0;
    for (std::size_t k = 0; k < occ.size(); ++k) tv += 0.5 * std::fabs(occ[k] - pi(static_cast<Eigen::Index>(k)));
    CHECK(tv <= 0.02);
  }

  TEST_CASE("sample_series step function") {
    EventTrace tr;
    tr.params = tiny();
    tr.initial = {1, 0, Regime::BuzzFree};
    tr.t_start = 0.0;
    tr.t_end = 4.0;
    tr.events.push_back({1.5, EventKind::Arrival, {2, 0, Regime::BuzzFree}});
    const auto s = sample_series(tr, 1.0);
    REQUIRE(s.size() == 5);
    CHECK(s.i == std::vector<int>{1, 1, 2, 2, 2});
    CHECK(time_average_i(tr) == doctest::Approx((1.5 * 1 + 2.5 * 2) / 4.0));

    const auto coarse = sample_series(tr, 100.0);
    CHECK(coarse.size() >= 1);
    CHECK(coarse.i.front() == 1);
  }

  TEST_CASE("sampled time average approaches the exact integral") {
    const auto tr = simulate(preset("demo_buzz"), {}, Horizon::until(20000.0), 4);
    const double exact = time_average_i(tr);
    const auto s = sample_series(tr, 0.05);
    CHECK(mean_i(s) == doctest::Approx(exact).epsilon(0.01));
  }

  TEST_CASE("case (b) sample mean is in the right range") {
    const ModelParams p = preset("table1b");
    const auto tr = simulate(p, mean_state(p), Horizon::event_count(1 << 21), 1);
    const double m = time_average_i(tr);
    MESSAGE("case (b) time-averaged I over 2^21 events: " << m);
    CHECK(m > 0.5 * 15.68);
    CHECK(m < 2.0 * 15.68);
  }

  TEST_CASE("warm-up truncation keeps the tail and its starting state") {
    const auto tr = simulate(preset("demo_buzz"), {}, Horizon::event_count(1000), 9);
    const auto cut = discard_warmup(tr, 0.25);
    CHECK(cut.events.size() == 750);
    CHECK(cut.initial == tr.events[249].state_after);
    CHECK(replay_consistent(cut));
  }

  TEST_CASE("CSV and binary round trips") {
    const auto tr = simulate(preset("demo_buzz"), {}, Horizon::event_count(2000), 17);
    std::stringstream ss;
    write_trace_csv(tr, ss);
    CHECK(ss.str().rfind("t,kind,i,r,regime\n", 0) == 0);
    const auto back = read_trace_csv(ss);
    REQUIRE(back.events.size() == tr.events.size());
    CHECK(back.initial == tr.initial);
    for (std::size_t k = 0; k < tr.events.size(); ++k) {
      CHECK(back.events[k].state_after == tr.events[k].state_after);
      CHECK(back.events[k].kind == tr.events[k].kind);
      CHECK(back.events[k].t == tr.events[k].t);
    }
    const auto path = std::filesystem::temp_directory_path() / "buzzload_trace_test.bin";
    write_trace_binary(tr, path.string());
    const auto bin = read_trace_binary(path.string());
    std::filesystem::remove(path);
    CHECK(bin.params == tr.params);
    CHECK(bin.seed == tr.seed);
    CHECK(bin.events.size() == tr.events.size());
    CHECK(bin.events.back().t == tr.events.back().t);
    CHECK(bin.t_end == tr.t_end);
  }

  TEST_CASE("malformed trace CSV reports the line") {
    std::stringstream ss("t,kind,i,r,regime\n0.5,A,1,0,1\n0.7,Q,1,0,1\n");
    try {
      read_trace_csv(ss);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
}
