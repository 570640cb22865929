#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "buzzload/errors.hpp"
#include "buzzload/estimation.hpp"
#include "buzzload/experiments.hpp"
#include "buzzload/model.hpp"
#include "buzzload/provisioning.hpp"
#include "buzzload/series.hpp"
#include "buzzload/simulator.hpp"
#include "buzzload/spectrum.hpp"
#include "buzzload/trace_io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace buzzload;
using nlohmann::json;

namespace {

// Raised for malformed flag values that CLI11 cannot check itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

ModelParams resolve_params(const std::string& name) {
  if (fs::exists(name)) return load_params(name);
#ifdef BUZZLOAD_PRESET_DIR
  for (const std::string& candidate : {name, name + ".json"}) {
    const fs::path p = fs::path(BUZZLOAD_PRESET_DIR) / candidate;
    if (fs::exists(p)) return load_params(p.string());
  }
#endif
  throw Error("no parameter file or preset named '" + name + "'");
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double to_double(const std::string& s, const std::string& flag) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw UsageError(flag + ": '" + s + "' is not a number");
}

struct Range {
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
};

Range parse_range(const std::string& s, const std::string& flag) {
  const auto parts = split_on(s, ':');
  if (parts.size() != 3) throw UsageError(flag + " expects lo:hi:n");
  Range r{to_double(parts[0], flag), to_double(parts[1], flag), 0};
  const double n = to_double(parts[2], flag);
  if (!(n >= 1.0) || n != std::floor(n)) throw UsageError(flag + ": n must be a positive integer");
  r.n = static_cast<std::size_t>(n);
  if (!(r.lo <= r.hi)) throw UsageError(flag + ": lo must not exceed hi");
  return r;
}

std::vector<double> parse_list(const std::string& s, const std::string& flag) {
  std::vector<double> out;
  for (const auto& p : split_on(s, ',')) out.push_back(to_double(p, flag));
  if (out.empty()) throw UsageError(flag + " expects a comma-separated list");
  return out;
}

std::vector<double> log_grid(const Range& r) {
  if (!(r.lo > 0.0)) throw UsageError("--mu-grid: lo must be > 0");
  std::vector<double> out;
  if (r.n == 1) return {r.lo};
  for (std::size_t k = 0; k < r.n; ++k) {
    const double u = static_cast<double>(k) / static_cast<double>(r.n - 1);
    out.push_back(std::exp(std::log(r.lo) + u * (std::log(r.hi) - std::log(r.lo))));
  }
  return out;
}

void emit_json(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error("cannot write " + out);
  f << j.dump(2) << "\n";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write " + p.string());
  f.precision(10);
  return f;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path probe = fs::path(dir) / ".buzzload_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw Error("output directory " + dir + " is not writable");
  }
  fs::remove(probe, ec);
  return fs::path(dir);
}

Horizon make_horizon(std::uint64_t events, double until) {
  if (until > 0.0) return Horizon::until(until);
  if (events == 0) throw UsageError("give --events N or --until T");
  return Horizon::event_count(events);
}

EstimationOptions estimation_options(const std::string& mu_grid, double buzz_quantile,
                                     double switch_penalty) {
  EstimationOptions opt;
  if (!mu_grid.empty()) opt.mu_grid = log_grid(parse_range(mu_grid, "--mu-grid"));
  opt.buzz.quantile = buzz_quantile;
  opt.switch_penalty = switch_penalty;
  return opt;
}

std::vector<double> q_grid_or_default(const std::string& q, double scale) {
  if (q.empty()) return default_q_grid(scale);
  const Range r = parse_range(q, "--q");
  return linear_grid(r.lo, r.hi, r.n);
}

// Almost-sure level of a theoretical curve: the point with the largest f.
double apex_alpha(const SpectrumCurve& c) {
  const auto pts = c.finite_points();
  if (pts.empty()) throw InsufficientDataError("spectrum has no finite point");
  const SpectrumPoint* best = &pts.front();
  for (const auto& p : pts) {
    if (p.f > best->f) best = &p;
  }
  return best->alpha;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"buzzload: epidemic workload model toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate the workload chain");
  std::string sim_params, sim_out, sim_init = "zero", sim_format = "csv", sim_series_out;
  std::uint64_t sim_events = 0, sim_seed = 1, sim_burn = 0;
  double sim_until = 0.0, sim_warmup = 0.0, sim_dt = 1.0;
  sim->add_option("--params", sim_params, "Parameter JSON file or preset name")->required();
  sim->add_option("--events", sim_events, "Number of recorded events");
  sim->add_option("--until", sim_until, "Simulate up to this time instead");
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--init", sim_init, "Initial state: zero or mean")->check(CLI::IsMember({"zero", "mean"}));
  sim->add_option("--burn-in", sim_burn, "Events discarded before recording");
  sim->add_option("--warmup", sim_warmup, "Fraction of recorded events dropped afterwards")
      ->check(CLI::Range(0.0, 1.0));
  sim->add_option("--out", sim_out, "Trace output file")->required();
  sim->add_option("--format", sim_format, "csv or bin")->check(CLI::IsMember({"csv", "bin"}));
  sim->add_option("--series-out", sim_series_out, "Also write the sampled series here");
  sim->add_option("--dt", sim_dt, "Sampling step for --series-out")->check(CLI::PositiveNumber);
  std::string sim_sessions_out;
  double sim_stretch = 1.0;
  sim->add_option("--sessions-out", sim_sessions_out, "Also write a session log consistent with the trace");
  sim->add_option("--stretch", sim_stretch, "Multiply session start times by this factor")
      ->check(CLI::PositiveNumber);

  // ingest
  auto* ing = app.add_subcommand("ingest", "Turn a session log or event trace into a series");
  std::string ing_in, ing_out, ing_trace_out, ing_second;
  double ing_scale = 1.0, ing_dt = 1.0, ing_cut = std::numeric_limits<double>::quiet_NaN();
  ing->add_option("--sessions", ing_in, "Session CSV (start,duration) or event CSV")->required();
  ing->add_option("--scale", ing_scale, "Divide start times by this factor")->check(CLI::PositiveNumber);
  ing->add_option("--dt", ing_dt, "Sampling step")->check(CLI::PositiveNumber);
  ing->add_option("--out", ing_out, "Series CSV output")->required();
  ing->add_option("--trace-out", ing_trace_out, "Also write the event trace");
  ing->add_option("--split-at", ing_cut, "Cut the series at this time");
  ing->add_option("--out-second", ing_second, "Second part when --split-at is given");

  // estimate
  auto* est = app.add_subcommand("estimate", "Fit the seven model rates to a trace");
  std::string est_series, est_trace, est_out, est_mu_grid, est_annotated, est_params_out;
  double est_scale = 1.0, est_quantile = 0.95, est_penalty = 8.0, est_dt = 1.0;
  auto* est_series_opt = est->add_option("--series", est_series, "Series CSV");
  auto* est_trace_opt = est->add_option("--trace", est_trace, "Event trace or session CSV (exact events)");
  est_series_opt->excludes(est_trace_opt);
  est->add_option("--scale", est_scale, "Start-time divisor for session logs")->check(CLI::PositiveNumber);
  est->add_option("--out", est_out, "Result JSON (default: stdout)");
  est->add_option("--mu-grid", est_mu_grid, "lo:hi:n, log-spaced");
  est->add_option("--buzz-quantile", est_quantile, "Threshold quantile of I")->check(CLI::Range(0.0, 1.0));
  est->add_option("--switch-penalty", est_penalty, "Log penalty per regime switch")->check(CLI::NonNegativeNumber);
  est->add_option("--annotated", est_annotated, "Series CSV with r_hat and regime_hat");
  est->add_option("--dt", est_dt, "Sampling step for --annotated with --trace")->check(CLI::PositiveNumber);
  est->add_option("--params-out", est_params_out, "Write the estimate as a parameter file");

  // spectrum
  auto* spe = app.add_subcommand("spectrum", "Large-deviation spectra");
  std::string spe_params, spe_series, spe_q, spe_tau, spe_out;
  bool spe_theoretical = false;
  spe->add_option("--params", spe_params, "Parameter JSON file or preset name");
  spe->add_flag("--theoretical", spe_theoretical, "Spectrum of the model (needs --params)");
  spe->add_option("--series", spe_series, "Series CSV for empirical spectra");
  spe->add_option("--tau", spe_tau, "Comma-separated time scales");
  spe->add_option("--q", spe_q, "lo:hi:n tilt grid (default [-3,3]/scale, 201 points)");
  spe->add_option("--out", spe_out, "Spectrum CSV")->required();

  // provision
  auto* pro = app.add_subcommand("provision", "Reconfiguration scale and safety margin");
  std::string pro_spec, pro_out;
  double pro_alpha = std::numeric_limits<double>::quiet_NaN(), pro_sigma = std::numeric_limits<double>::quiet_NaN();
  double pro_loss = std::numeric_limits<double>::quiet_NaN(), pro_buffer = 0.0;
  double pro_capacity = std::numeric_limits<double>::quiet_NaN();
  pro->add_option("--spectrum", pro_spec, "Spectrum CSV")->required();
  auto* alpha_opt = pro->add_option("--alpha-star", pro_alpha, "Overflow level");
  auto* sigma_opt = pro->add_option("--sigma-star", pro_sigma, "Overflow probability target");
  pro->add_option("--p-loss", pro_loss, "Loss probability target");
  pro->add_option("--buffer", pro_buffer, "Buffer size Q")->check(CLI::NonNegativeNumber);
  pro->add_option("--capacity", pro_capacity, "Total capacity C, to size the server count");
  pro->add_option("--out", pro_out, "Result JSON (default: stdout)");
  alpha_opt->needs(sigma_opt);
  sigma_opt->needs(alpha_opt);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Desk-scale experiments on simulated traces");
  exp->require_subcommand(1);
  std::string x_params, x_dir = "results", x_mu_grid, x_lengths = "32768,131072,524288,2097152";
  std::string x_taus = "100,200,400", x_q, x_sessions;
  std::uint64_t x_seed = 1, x_events = 0;
  std::size_t x_reps = 10, x_max_lag = 200;
  double x_until = 0.0, x_dt = 1.0, x_scale = 1.0, x_quantile = 0.95, x_penalty = 8.0;
  bool x_theoretical = false;

  auto common = [&](CLI::App* c) {
    c->add_option("--out-dir", x_dir, "Output directory");
    c->add_option("--seed", x_seed, "Base seed; replication k uses seed + k");
  };
  auto estimation_flags = [&](CLI::App* c) {
    c->add_option("--mu-grid", x_mu_grid, "lo:hi:n, log-spaced");
    c->add_option("--buzz-quantile", x_quantile)->check(CLI::Range(0.0, 1.0));
    c->add_option("--switch-penalty", x_penalty)->check(CLI::NonNegativeNumber);
  };
  auto* box = exp->add_subcommand("boxplot", "Relative estimation errors over replications");
  box->add_option("--params", x_params)->required();
  box->add_option("--replications", x_reps)->check(CLI::PositiveNumber);
  box->add_option("--events", x_events, "Events per replication");
  box->add_option("--until", x_until, "Time span per replication instead");
  common(box);
  estimation_flags(box);

  auto* mse = exp->add_subcommand("mse", "Mean squared error against trace length");
  mse->add_option("--params", x_params)->required();
  mse->add_option("--replications", x_reps)->check(CLI::PositiveNumber);
  mse->add_option("--lengths", x_lengths, "Comma-separated event counts");
  common(mse);
  estimation_flags(mse);

  auto* spx = exp->add_subcommand("spectra", "Theoretical and empirical spectra of a simulated trace");
  spx->add_option("--params", x_params)->required();
  spx->add_option("--events", x_events, "Events to simulate")->required();
  spx->add_option("--dt", x_dt)->check(CLI::PositiveNumber);
  spx->add_option("--tau", x_taus);
  spx->add_option("--q", x_q);
  spx->add_flag("--theoretical", x_theoretical, "Include the model spectrum");
  common(spx);

  auto* clo = exp->add_subcommand("closure", "Estimate, re-simulate, compare");
  clo->add_option("--sessions", x_sessions, "Session CSV or event CSV")->required();
  clo->add_option("--scale", x_scale)->check(CLI::PositiveNumber);
  clo->add_option("--dt", x_dt, "Autocorrelation step")->check(CLI::PositiveNumber);
  clo->add_option("--max-lag", x_max_lag)->check(CLI::PositiveNumber);
  common(clo);
  estimation_flags(clo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*sim) {
      const ModelParams p = resolve_params(sim_params);
      SimulationOptions so;
      so.burn_in_events = sim_burn;
      const SystemState init = sim_init == "mean" ? mean_state(p) : SystemState{};
      EventTrace tr = simulate(p, init, make_horizon(sim_events, sim_until), sim_seed, so);
      if (sim_warmup > 0.0) tr = discard_warmup(tr, sim_warmup);
      if (sim_format == "bin") {
        write_trace_binary(tr, sim_out);
      } else {
        write_trace_csv(tr, sim_out);
      }
      if (!sim_series_out.empty()) write_series_csv(sample_series(tr, sim_dt), sim_series_out);
      if (!sim_sessions_out.empty()) {
        // Start times are stretched, durations kept: `ingest --scale` undoes this exactly.
        auto sessions = sessions_from_trace(tr, sim_seed);
        for (auto& r : sessions) r.start *= sim_stretch;
        write_sessions_csv(sessions, sim_sessions_out);
      }
      json j{{"events", tr.events.size()}, {"t_end", tr.t_end}, {"mean_i", time_average_i(tr)}};
      try {
        j["mean_i_formula"] = mean_workload(p);
      } catch (const InstabilityError&) {
        j["mean_i_formula"] = nullptr;
      }
      std::cout << j.dump() << "\n";
      return 0;
    }

    if (*ing) {
      const EventTrace tr = read_trace_any(ing_in, ing_scale);
      const WorkloadSeries s = sample_series(tr, ing_dt);
      if (!ing_trace_out.empty()) write_trace_csv(tr, ing_trace_out);
      if (std::isnan(ing_cut)) {
        write_series_csv(s, ing_out);
      } else {
        if (ing_second.empty()) throw UsageError("--split-at needs --out-second");
        const auto [a, b] = split(s, ing_cut);
        write_series_csv(a, ing_out);
        write_series_csv(b, ing_second);
      }
      std::cout << json{{"events", tr.events.size()}, {"samples", s.size()}, {"mean_i", time_average_i(tr)}}.dump()
                << "\n";
      return 0;
    }

    if (*est) {
      if (est_series.empty() && est_trace.empty()) throw UsageError("give --series or --trace");
      Observation obs;
      WorkloadSeries series;
      if (!est_trace.empty()) {
        const EventTrace tr = read_trace_any(est_trace, est_scale);
        obs = Observation::from_trace(tr);
        if (!est_annotated.empty()) series = sample_series(tr, est_dt);
      } else {
        series = read_series_csv(est_series);
        obs = Observation::from_series(series);
      }
      const EstimationResult res =
          estimate_all(obs, estimation_options(est_mu_grid, est_quantile, est_penalty));
      emit_json(to_json(res), est_out);
      if (!est_annotated.empty()) write_series_csv(annotate(series, obs, res), est_annotated);
      if (!est_params_out.empty()) save_params(res.params_hat, est_params_out);
      return 0;
    }

    if (*spe) {
      std::vector<SpectrumCurve> curves;
      if (spe_theoretical) {
        if (spe_params.empty()) throw UsageError("--theoretical needs --params");
        const ModelParams p = resolve_params(spe_params);
        curves.push_back(theoretical_spectrum(p, q_grid_or_default(spe_q, p.i_max)));
      }
      if (!spe_series.empty()) {
        if (spe_tau.empty()) throw UsageError("--series needs --tau");
        const WorkloadSeries s = read_series_csv(spe_series);
        int peak = 1;
        for (int v : s.i) peak = std::max(peak, v);
        const auto q = q_grid_or_default(spe_q, peak);
        for (double tau : parse_list(spe_tau, "--tau")) curves.push_back(empirical_spectrum(s, tau, q));
      }
      if (curves.empty()) throw UsageError("nothing to compute: give --theoretical or --series");
      write_spectrum_csv(curves, spe_out);
      return 0;
    }

    if (*pro) {
      const auto curves = read_spectrum_csv(pro_spec);
      json j{{"spectrum", pro_spec}};
      bool did = false;
      if (!std::isnan(pro_alpha)) {
        std::vector<SpectrumCurve> family;
        for (const auto& c : curves) {
          if (!c.theoretical()) family.push_back(c);
        }
        const ScaleChoice sc = reconfiguration_scale(family, pro_alpha, pro_sigma);
        json probs = json::array();
        for (const auto& [tau, prob] : sc.probabilities) probs.push_back({{"tau", tau}, {"probability", prob}});
        j["alpha_star"] = pro_alpha;
        j["sigma_star"] = pro_sigma;
        j["tau_star"] = sc.tau_star;
        j["found"] = sc.found;
        j["monotone"] = sc.monotone;
        j["probabilities"] = probs;
        did = true;
      }
      if (!std::isnan(pro_loss)) {
        const SpectrumCurve* th = nullptr;
        for (const auto& c : curves) {
          if (c.theoretical()) th = &c;
        }
        if (!th) throw InsufficientDataError("--p-loss needs a theoretical curve (tau = inf) in the spectrum file");
        const double alpha_as = apex_alpha(*th);
        const Margin m = safety_margin(*th, alpha_as, pro_buffer, pro_loss);
        j["p_loss"] = pro_loss;
        j["buffer"] = pro_buffer;
        j["alpha_as"] = alpha_as;
        j["c0"] = m.c0;
        j["capacity_threshold"] = m.capacity;
        j["residual_loss"] = m.residual;
        j["iterations"] = m.iterations;
        j["unreachable"] = m.unreachable;
        if (!std::isnan(pro_capacity)) {
          const ServerCount k = max_servers(pro_capacity, alpha_as, m.c0);
          j["capacity"] = pro_capacity;
          j["servers"] = k.k;
          j["capacity_short"] = k.capacity_short;
        }
        did = true;
      } else if (!std::isnan(pro_capacity)) {
        throw UsageError("--capacity needs --p-loss");
      }
      if (!did) throw UsageError("give --alpha-star/--sigma-star or --p-loss");
      emit_json(j, pro_out);
      return 0;
    }

    if (*box) {
      const ModelParams p = resolve_params(x_params);
      const fs::path dir = prepare_dir(x_dir);
      const auto outcomes = run_replications(p, make_horizon(x_events, x_until), x_seed, x_reps,
                                             estimation_options(x_mu_grid, x_quantile, x_penalty));
      auto f = open_out(dir / "boxplot.csv");
      f << "replication,seed,ok";
      for (const char* n : kParamNames) f << "," << n;
      f << ",error\n";
      for (std::size_t k = 0; k < outcomes.size(); ++k) {
        const auto& o = outcomes[k];
        f << k << "," << o.seed << "," << (o.ok ? 1 : 0);
        for (std::size_t j = 0; j < kParamNames.size(); ++j) {
          f << ",";
          if (o.ok) f << param_value(o.estimate, j) / param_value(p, j) - 1.0;
        }
        f << "," << o.error << "\n";
      }
      auto g = open_out(dir / "boxplot_summary.csv");
      g << "parameter,count,min,q1,median,q3,max,median_abs\n";
      for (const auto& s : summarize_relative_errors(p, outcomes)) {
        g << s.name << "," << s.count << "," << s.min << "," << s.q1 << "," << s.median << "," << s.q3 << ","
          << s.max << "," << s.median_abs << "\n";
      }
      std::cout << "wrote " << (dir / "boxplot.csv").string() << " and " << (dir / "boxplot_summary.csv").string()
                << "\n";
      return 0;
    }

    if (*mse) {
      const ModelParams p = resolve_params(x_params);
      const fs::path dir = prepare_dir(x_dir);
      std::vector<std::uint64_t> lengths;
      for (double v : parse_list(x_lengths, "--lengths")) {
        if (!(v >= 1.0)) throw UsageError("--lengths must be positive");
        lengths.push_back(static_cast<std::uint64_t>(v));
      }
      const auto pts = mse_sweep(p, lengths, x_seed, x_reps, estimation_options(x_mu_grid, x_quantile, x_penalty));
      auto f = open_out(dir / "mse.csv");
      f << "events,ok";
      for (const char* n : kParamNames) f << "," << n;
      f << "\n";
      for (const auto& pt : pts) {
        f << pt.events << "," << pt.ok;
        for (double m : pt.mse) f << "," << m;
        f << "\n";
      }
      auto g = open_out(dir / "mse_decay.csv");
      g << "parameter,decay\n";
      for (std::size_t j = 0; j < kParamNames.size(); ++j) {
        std::vector<double> x, y;
        for (const auto& pt : pts) {
          if (pt.ok && pt.mse[j] > 0.0) {
            x.push_back(static_cast<double>(pt.events));
            y.push_back(pt.mse[j]);
          }
        }
        g << kParamNames[j] << ",";
        if (x.size() >= 2) g << loglog_decay(x, y);
        g << "\n";
      }
      std::cout << "wrote " << (dir / "mse.csv").string() << " and " << (dir / "mse_decay.csv").string() << "\n";
      return 0;
    }

    if (*spx) {
      const ModelParams p = resolve_params(x_params);
      const fs::path dir = prepare_dir(x_dir);
      const auto q = q_grid_or_default(x_q, p.i_max);
      const EventTrace tr = simulate(p, mean_state(p), Horizon::event_count(x_events), x_seed);
      const WorkloadSeries s = sample_series(tr, x_dt);
      std::vector<SpectrumCurve> curves;
      if (x_theoretical) curves.push_back(theoretical_spectrum(p, q));
      for (double tau : parse_list(x_taus, "--tau")) curves.push_back(empirical_spectrum(s, tau, q));
      write_spectrum_csv(curves, (dir / "spectra.csv").string());
      std::cout << "wrote " << (dir / "spectra.csv").string() << "\n";
      return 0;
    }

    if (*clo) {
      const fs::path dir = prepare_dir(x_dir);
      const EventTrace tr = read_trace_any(x_sessions, x_scale);
      const ClosureReport r =
          closure(tr, x_dt, x_max_lag, x_seed, estimation_options(x_mu_grid, x_quantile, x_penalty));
      json j{{"input", x_sessions},
             {"scale", x_scale},
             {"params_hat", to_json(r.estimate)},
             {"warnings", r.warnings},
             {"mean_formula", std::isnan(r.mean_formula) ? json(nullptr) : json(r.mean_formula)},
             {"sample_mean", r.sample_mean},
             {"refit_mean", r.refit_mean},
             {"histogram_tv", r.tv},
             {"decorrelation_lag", r.decorrelation_lag},
             {"decorrelated", r.decorrelated},
             {"acf_max_diff", r.acf_max_diff}};
      emit_json(j, (dir / "closure.json").string());
      auto h = open_out(dir / "closure_hist.csv");
      h << "i,source,refit\n";
      const std::size_t nh = std::max(r.hist_source.size(), r.hist_refit.size());
      for (std::size_t k = 0; k < nh; ++k) {
        h << k << "," << (k < r.hist_source.size() ? r.hist_source[k] : 0.0) << ","
          << (k < r.hist_refit.size() ? r.hist_refit[k] : 0.0) << "\n";
      }
      auto a = open_out(dir / "closure_acf.csv");
      a << "lag,time,source,refit\n";
      for (std::size_t k = 0; k < r.acf_source.size(); ++k) {
        a << k << "," << static_cast<double>(k) * x_dt << "," << r.acf_source[k] << "," << r.acf_refit[k] << "\n";
      }
      std::cout << j.dump() << "\n";
      return 0;
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const EstimationError& e) {
    std::cerr << "error: estimation failed at stage '" << e.stage() << "': " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
