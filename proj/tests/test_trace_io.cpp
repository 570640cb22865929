#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>
#include <string>

#include "buzzload/errors.hpp"
#include "buzzload/experiments.hpp"
#include "buzzload/simulator.hpp"
#include "buzzload/trace_io.hpp"
#include "doctest.h"

using namespace buzzload;

namespace {

ModelParams preset(const std::string& name) {
  return load_params(std::string(BUZZLOAD_PRESET_DIR) + "/" + name + ".json");
}

WorkloadSeries series_of(std::vector<int> v, double t0 = 0.0, double dt = 1.0) {
  WorkloadSeries s;
  s.t0 = t0;
  s.dt = dt;
  s.i = std::move(v);
  return s;
}

}  // namespace

TEST_SUITE("trace_io") {
  TEST_CASE("one session") {
    const auto tr = ingest_sessions({{10.0, 5.0}}, 1.0);
    REQUIRE(tr.events.size() == 2);
    CHECK(tr.events[0].t == 10.0);
    CHECK(tr.events[0].state_after.i == 1);
    CHECK(tr.events[1].t == 15.0);
    CHECK(tr.events[1].state_after.i == 0);
    const auto s = sample_series(tr, 1.0);
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double t = s.time_at(k);
      CHECK(s.i[k] == ((t >= 10.0 && t < 15.0) ? 1 : 0));
    }
  }

  TEST_CASE("overlapping sessions peak at two") {
    const auto tr = ingest_sessions({{0.0, 10.0}, {5.0, 10.0}}, 1.0);
    int peak = 0;
    for (const auto& e : tr.events) peak = std::max(peak, e.state_after.i);
    CHECK(peak == 2);
    CHECK(time_average_i(tr) == doctest::Approx(20.0 / 15.0));
  }

  TEST_CASE("scaling divides starts and keeps durations") {
    const auto tr = ingest_sessions({{100.0, 3.0}, {200.0, 4.0}}, 10.0);
    REQUIRE(tr.events.size() == 4);
    CHECK(tr.events[0].t == doctest::Approx(10.0));
    CHECK(tr.events[1].t == doctest::Approx(13.0));
    CHECK(tr.events[2].t == doctest::Approx(20.0));
    CHECK(tr.events[3].t == doctest::Approx(24.0));
  }

  TEST_CASE("conservation and scaling keep the total viewing time") {
    std::mt19937_64 gen(5);
    std::exponential_distribution<double> ex(0.2), dur(0.05);
    std::vector<SessionRecord> recs;
    double t = 0.0;
    double total = 0.0;
    for (int k = 0; k < 2000; ++k) {
      t += ex(gen);
      recs.push_back({t, dur(gen) + 1e-6});
      total += recs.back().duration;
    }
    for (double scale : {1.0, 10.0}) {
      const auto tr = ingest_sessions(recs, scale);
      std::size_t a = 0, w = 0;
      for (const auto& e : tr.events) (e.kind == EventKind::Arrival ? a : w)++;
      CHECK(a == recs.size());
      CHECK(w == recs.size());
      CHECK(time_average_i(tr) * tr.span() == doctest::Approx(total).epsilon(1e-9));
    }
  }

  TEST_CASE("session log from a simulated trace reproduces I(t)") {
    const ModelParams p = preset("demo_buzz");
    const auto tr = simulate(p, mean_state(p), Horizon::event_count(20000), 4);
    const auto sessions = sessions_from_trace(tr, 4);
    auto stretched = sessions;
    for (auto& r : stretched) r.start *= 10.0;
    const auto back = ingest_sessions(stretched, 10.0);
    CHECK(time_average_i(back) * back.span() == doctest::Approx(time_average_i(tr) * tr.span()).epsilon(1e-9));
    const auto a = sample_series(tr, 0.5), b = sample_series(back, 0.5);
    std::size_t same = 0, n = std::min(a.size(), b.size());
    for (std::size_t k = 0; k < n; ++k) same += a.i[k] == b.i[k];
    CHECK(static_cast<double>(same) / static_cast<double>(n) > 0.999);
  }

  TEST_CASE("malformed session record reports its line") {
    std::stringstream ss("start,duration\n1,2\n3,abc\n");
    try {
      read_sessions_csv(ss);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    std::stringstream neg("start,duration\n1,-2\n");
    CHECK_THROWS_AS(read_sessions_csv(neg), ParseError);
  }

  TEST_CASE("session CSV round trip") {
    const std::vector<SessionRecord> recs{{0.0, 1.5}, {2.25, 0.125}};
    std::stringstream ss;
    write_sessions_csv(recs, ss);
    const auto back = read_sessions_csv(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].start == 2.25);
    CHECK(back[1].duration == 0.125);
  }

  TEST_CASE("split and join") {
    const auto s = series_of({1, 2, 3, 4, 5, 6}, 10.0, 2.0);
    const auto [a, b] = split(s, 14.0);
    CHECK(a.size() == 2);
    CHECK(b.size() == 4);
    CHECK(b.t0 == 14.0);
    const auto j = join(a, b);
    CHECK(j.i == s.i);
    CHECK(j.t0 == s.t0);
    CHECK_THROWS_AS(split(s, 10.0), RangeError);
    CHECK_THROWS_AS(split(s, 30.0), RangeError);
  }

  TEST_CASE("series CSV round trip with optional channels") {
    auto s = series_of({0, 3, 2}, 5.0, 0.5);
    s.r = std::vector<double>{1.0, 2.5, 0.0};
    s.regime = std::vector<Regime>{Regime::BuzzFree, Regime::Buzz, Regime::BuzzFree};
    std::stringstream ss;
    write_series_csv(s, ss);
    const auto back = read_series_csv(ss);
    CHECK(back.i == s.i);
    CHECK(back.t0 == doctest::Approx(5.0));
    CHECK(back.dt == doctest::Approx(0.5));
    REQUIRE(back.r.has_value());
    CHECK((*back.r)[1] == doctest::Approx(2.5));
    REQUIRE(back.regime.has_value());
    CHECK((*back.regime)[1] == Regime::Buzz);
  }

  TEST_CASE("autocorrelation") {
    std::mt19937_64 gen(9);
    std::poisson_distribution<int> pois(5.0);
    std::vector<int> v(20000);
    for (int& x : v) x = pois(gen);
    const auto rho = autocorrelation(series_of(v), 20);
    CHECK(rho[0] == doctest::Approx(1.0));
    for (std::size_t k = 1; k < rho.size(); ++k) CHECK(std::fabs(rho[k]) < 3.0 / std::sqrt(20000.0));

    std::vector<int> periodic(4000);
    for (std::size_t k = 0; k < periodic.size(); ++k) periodic[k] = (k / 5) % 2 == 0 ? 0 : 4;
    CHECK(autocorrelation(series_of(periodic), 10)[10] > 0.99);

    CHECK_THROWS(autocorrelation(series_of(std::vector<int>(50, 3)), 5));
  }

  TEST_CASE("histograms and total variation") {
    const auto h = histogram(series_of({3, 3, 3, 3}));
    REQUIRE(h.size() == 4);
    CHECK(h[3] == doctest::Approx(1.0));
    const auto h2 = histogram(series_of({1, 2, 1, 2}));
    CHECK(h2[1] == doctest::Approx(0.5));
    CHECK(h2[2] == doctest::Approx(0.5));
    CHECK(total_variation({1.0}, {0.0, 1.0}) == doctest::Approx(1.0));
    CHECK(total_variation({0.5, 0.5}, {0.5, 0.5}) == doctest::Approx(0.0));

    const auto tr = ingest_sessions({{0.0, 2.0}, {1.0, 2.0}}, 1.0);
    const auto ht = histogram(tr);
    CHECK(ht[1] == doctest::Approx(2.0 / 3.0));
    CHECK(ht[2] == doctest::Approx(1.0 / 3.0));
  }

  TEST_CASE("trace file autodetection") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto sess = dir / "buzzload_sessions_test.csv";
    write_sessions_csv({{100.0, 3.0}}, sess.string());
    CHECK(read_trace_any(sess.string(), 10.0).events.front().t == doctest::Approx(10.0));
    const auto ev = dir / "buzzload_events_test.csv";
    write_trace_csv(ingest_sessions({{4.0, 1.0}}, 1.0), ev.string());
    CHECK(read_trace_any(ev.string(), 1.0).events.size() == 2);
    std::filesystem::remove(sess);
    std::filesystem::remove(ev);
  }
}
