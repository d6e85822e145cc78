// abslab command line: simulate, batch, autotune, equilibria, linearize, friction, weights.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <abslab/abslab.hpp>

namespace fs = std::filesystem;
using namespace abslab;

namespace {

constexpr int kOk = 0, kUsage = 1, kFault = 2;

struct Globals {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

fs::path prepare_out(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
  return dir;
}

Scenario apply_overrides(Scenario sc, const Globals& g) {
  if (g.seed) sc.noise.seed = *g.seed;
  if (g.dt) sc.dt = *g.dt;
  sc.validate();
  return sc;
}

// Relative references inside a batch file resolve against the batch file's directory first.
std::string locate(const std::string& ref, const fs::path& base_dir) {
  const fs::path p = ref;
  if (p.is_relative() && !base_dir.empty() && fs::exists(base_dir / p)) return (base_dir / p).string();
  return ref;
}

json resolve_document(const json& entry, const fs::path& base_dir) {
  if (entry.is_string()) return load_config(locate(entry.get<std::string>(), base_dir)).document;
  if (entry.is_object() && entry.contains("extends")) {
    json base = load_config(locate(entry.at("extends").get<std::string>(), base_dir)).document;
    json patch = entry;
    patch.erase("extends");
    base.merge_patch(patch);
    return base;
  }
  return entry;
}

// Scenario from --config, or the built-in defaults when none is given and that is allowed.
Scenario load_scenario(const Globals& g, bool required) {
  if (g.config.empty()) {
    if (required) throw UsageError("--config is required");
    return apply_overrides(scenario_from_json(json::object()), g);
  }
  const LoadedConfig lc = load_config(g.config);
  return apply_overrides(scenario_from_json(lc.document, lc.base_dir), g);
}

void write_manifest(const fs::path& dir, const json& canonical, std::uint64_t seed, const std::string& command,
                    const json& options = json::object()) {
  json m = make_manifest(canonical, seed, command);
  if (!options.empty()) m["options"] = options;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string to_csv(const Trace& t) {
  std::ostringstream os;
  t.write_csv(os);
  return os.str();
}

std::string to_csv(const Metrics& m) {
  std::ostringstream os;
  m.write_csv(os);
  return os.str();
}

std::string summary(const Scenario& sc, const RunOutput& r) {
  std::ostringstream os;
  const Metrics& m = r.metrics;
  os << "scenario      " << sc.name << "\n"
     << "controller    " << sc.controller.type << (sc.controller.blend ? " (blended)" : "") << "\n"
     << "rows          " << r.trace.size() << "\n"
     << "iae           " << format_double(m.iae) << "\n"
     << "iae_opt       " << format_double(m.iae_opt) << "\n"
     << "settle_time   " << format_double(m.settle_time) << " s\n"
     << "overshoot     " << format_double(m.overshoot) << "\n"
     << "stop_distance " << format_double(m.stop_distance) << " m\n"
     << "stop_time     " << format_double(m.stop_time) << " s\n"
     << "cmd_variance  " << format_double(m.cmd_variance) << " N^2 m^2\n"
     << "stopped       " << (m.stopped ? "yes" : "no") << "\n";
  return os.str();
}

PlotDocument slip_plot(const Scenario& sc, const Trace& tr) {
  PlotDocument doc{sc.name + ": slip", "t [s]", "slip", {}};
  doc.series.push_back({"slip", tr.t, tr.lambda});
  doc.series.push_back({"reference", tr.t, tr.lambda_ref});
  double top = 0.0;
  for (double l : tr.lambda) top = std::max(top, l);
  for (const auto& e : sc.events)
    if (e.kind == Event::Kind::TorqueDisturbance)
      doc.series.push_back({"disturbance " + format_double(e.time) + " s", {e.time, e.time}, {0.0, top}});
  return doc;
}

void write_run(const fs::path& dir, const Scenario& sc, const RunOutput& r, const std::string& command) {
  write_text(dir / "trace.csv", to_csv(r.trace));
  write_text(dir / "metrics.csv", to_csv(r.metrics));
  write_text(dir / "summary.txt", summary(sc, r));
  emit_plot(slip_plot(sc, r.trace), (dir / "slip.svg").string());
  if (!r.trace.weight_labels.empty()) {
    PlotDocument w{sc.name + ": road weights", "t [s]", "weight", {}};
    for (std::size_t k = 0; k < r.trace.weight_labels.size(); ++k) {
      std::vector<double> y;
      for (const auto& row : r.trace.weights) y.push_back(row[k]);
      w.series.push_back({r.trace.weight_labels[k], r.trace.t, y});
    }
    emit_plot(w, (dir / "weights.svg").string());
  }
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, command);
}

// ---------------------------------------------------------------- subcommands

int cmd_simulate(const Globals& g) {
  const Scenario sc = load_scenario(g, true);
  try {
    const RunOutput r = run(sc);
    const fs::path dir = prepare_out(g.out);
    write_run(dir, sc, r, "simulate");
    std::cout << summary(sc, r);
    return kOk;
  } catch (const ScenarioFault& f) {
    const fs::path dir = prepare_out(g.out);
    write_text(dir / "trace_partial.csv", to_csv(f.partial()));
    write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "simulate");
    throw;
  }
}

int cmd_batch(const Globals& g, unsigned threads) {
  if (g.config.empty()) throw UsageError("--config is required");
  const LoadedConfig lc = load_config(g.config);
  if (!lc.document.contains("scenarios") || !lc.document.at("scenarios").is_array())
    throw ConfigError("batch config needs a \"scenarios\" array");
  std::vector<Scenario> scs;
  json canon = json::array();
  for (const auto& entry : lc.document.at("scenarios")) {
    const json doc = resolve_document(entry, lc.base_dir);
    scs.push_back(apply_overrides(scenario_from_json(doc, lc.base_dir), g));
    canon.push_back(scenario_to_json(scs.back()));
  }
  if (threads == 0 && lc.document.contains("threads")) threads = lc.document.at("threads").get<unsigned>();
  const auto results = batch(scs, threads);

  const fs::path dir = prepare_out(g.out);
  std::ostringstream table;
  table << "index,name,status";
  for (const auto& c : Metrics::columns()) table << ',' << c;
  table << '\n';
  bool fault = false;
  for (std::size_t i = 0; i < scs.size(); ++i) {
    std::ostringstream sub;
    sub << std::setw(3) << std::setfill('0') << i << '_' << scs[i].name;
    const fs::path sd = prepare_out((dir / sub.str()).string());
    table << i << ',' << scs[i].name << ',';
    if (results[i].output) {
      write_run(sd, scs[i], *results[i].output, "batch");
      table << "ok";
      for (double v : results[i].output->metrics.values()) table << ',' << format_double(v);
    } else {
      fault = true;
      table << (results[i].numerical_fault ? "numerical_fault" : "error");
      for (std::size_t k = 0; k < Metrics::columns().size(); ++k) table << ",nan";
      write_text(sd / "error.txt", results[i].error + "\n");
      std::cerr << "scenario " << i << " (" << scs[i].name << "): " << results[i].error << "\n";
    }
    table << '\n';
  }
  write_text(dir / "batch_metrics.csv", table.str());
  json doc{{"scenarios", canon}};
  write_manifest(dir, doc, g.seed.value_or(0), "batch");
  std::cout << table.str();
  return fault ? kFault : kOk;
}

std::vector<RoadSurface> select_surfaces(const Scenario& sc, const std::string& spec) {
  if (spec.empty() || spec == "all") return sc.surfaces;
  std::vector<RoadSurface> out;
  std::stringstream ss(spec);
  for (std::string name; std::getline(ss, name, ',');) out.push_back(find_surface(sc.surfaces, name));
  return out;
}

int cmd_autotune(const Globals& g, const std::string& surfaces) {
  const Scenario sc = load_scenario(g, false);
  std::ostringstream os;
  os << "surface,lambda_opt,k_u,p_u,amplitude,converged,kp,ki,kd\n";
  bool all_converged = true;
  for (const auto& s : select_surfaces(sc, surfaces)) {
    const double lb = lambda_opt(s), T0 = psi(lb, sc.vehicle, s);
    FrozenSlipLoop loop(sc.vehicle, sc.actuator, s, sc.controller.autotune_speed, lb, T0, sc.dt);
    RelayOptions ro;
    ro.amplitude = sc.controller.relay_fraction * sc.actuator.Tb_max;
    ro.bias = T0;
    ro.setpoint = lb;
    ro.max_time = sc.controller.autotune_max_time;
    const auto r = relay_autotune(loop, ro);
    os << s.name << ',' << format_double(lb) << ',' << format_double(r.k_u) << ',' << format_double(r.p_u) << ','
       << format_double(r.amplitude) << ',' << (r.converged ? 1 : 0);
    if (r.converged) {
      const auto gains = zn_pid_from_relay(r, parse_zn_rule(sc.controller.zn_rule));
      os << ',' << format_double(gains.kp) << ',' << format_double(gains.ki) << ',' << format_double(gains.kd);
    } else {
      all_converged = false;
      os << ",nan,nan,nan";
    }
    os << '\n';
  }
  const fs::path dir = prepare_out(g.out);
  write_text(dir / "autotune.csv", os.str());
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "autotune", {{"surfaces", surfaces}});
  std::cout << os.str();
  if (!all_converged) std::cerr << "warning: relay experiment did not converge on every surface\n";
  return kOk;
}

int cmd_equilibria(const Globals& g, const std::string& surfaces, std::optional<double> torque, double fraction) {
  const Scenario sc = load_scenario(g, false);
  std::ostringstream os;
  os << "surface,torque,psi_max,psi_at_full_slip,lambda_eq,stability\n";
  PlotDocument doc{"wheel torque balance", "slip", "torque [N m]", {}};
  std::vector<double> grid;
  for (int i = 0; i <= 500; ++i) grid.push_back(i / 500.0);
  double tmax = 0.0;
  for (const auto& s : select_surfaces(sc, surfaces)) {
    const PsiPeak pk = psi_peak(sc.vehicle, s);
    const double T = torque ? *torque : fraction * pk.value;
    tmax = std::max(tmax, T);
    const auto eq = find_equilibria(T, sc.vehicle, s);
    const std::string head = s.name + ',' + format_double(T) + ',' + format_double(pk.value) + ',' +
                             format_double(psi(1.0, sc.vehicle, s)) + ',';
    if (eq.points.empty()) os << head << "nan,lock\n";
    for (const auto& e : eq.points) os << head << format_double(e.lambda_eq) << ',' << to_string(e.stability) << '\n';
    std::vector<double> y;
    for (double l : grid) y.push_back(psi(l, sc.vehicle, s));
    doc.series.push_back({"Psi " + s.name, grid, y});
    if (!torque) doc.series.push_back({"Tb " + s.name, {0.0, 1.0}, {T, T}});
  }
  if (torque) doc.series.push_back({"Tb", {0.0, 1.0}, {*torque, *torque}});
  const fs::path dir = prepare_out(g.out);
  write_text(dir / "equilibria.csv", os.str());
  emit_plot(doc, (dir / "equilibria.svg").string());
  json opts{{"surfaces", surfaces}, {"fraction", fraction}};
  if (torque) opts["torque"] = *torque;
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "equilibria", opts);
  std::cout << os.str();
  return kOk;
}

int cmd_linearize(const Globals& g, const std::string& surfaces, std::optional<double> lambda,
                  std::optional<double> speed) {
  const Scenario sc = load_scenario(g, false);
  const double v = speed.value_or(sc.initial_speed);
  std::ostringstream os;
  os << "surface,lambda_bar,v,slip_gain,slip_pole,decel_gain,decel_zero,decel_pole,decel_dc_gain,gain_bound\n";
  for (const auto& s : select_surfaces(sc, surfaces)) {
    const double lb = lambda.value_or(0.5 * lambda_opt(s));
    const auto gs = linearize_slip(lb, v, sc.vehicle, s);
    const auto gd = linearize_decel(lb, v, sc.vehicle, s);
    os << s.name << ',' << format_double(lb) << ',' << format_double(v) << ',' << format_double(gs.gain_num) << ','
       << format_double(gs.pole) << ',' << format_double(gd.gain_num) << ',' << format_double(gd.zero.value_or(NAN))
       << ',' << format_double(gd.pole) << ',' << format_double(gd.dc_gain()) << ','
       << format_double(stability_gain_bound(lb, sc.vehicle, s)) << '\n';
  }
  const fs::path dir = prepare_out(g.out);
  write_text(dir / "linearize.csv", os.str());
  json opts{{"surfaces", surfaces}, {"speed", v}};
  if (lambda) opts["lambda"] = *lambda;
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "linearize", opts);
  std::cout << os.str();
  return kOk;
}

int cmd_friction(const Globals& g, const std::string& surfaces, std::size_t points) {
  const Scenario sc = load_scenario(g, false);
  if (points < 2) throw UsageError("--points must be at least 2");
  const auto sel = select_surfaces(sc, surfaces);
  PlotDocument doc{"friction curves", "slip", "mu", {}};
  std::vector<std::pair<std::string, std::string>> files;
  std::ostringstream peaks;
  peaks << "surface,lambda_opt,mu_max,monotone\n";
  for (const auto& s : sel) {
    std::ostringstream os;
    os << "lambda,mu,mu_prime\n";
    PlotSeries ser{s.name, {}, {}};
    for (const auto& p : friction_curve(s, points)) {
      os << format_double(p.lambda) << ',' << format_double(p.mu) << ',' << format_double(mu_prime(s, p.lambda))
         << '\n';
      ser.x.push_back(p.lambda);
      ser.y.push_back(p.mu);
    }
    doc.series.push_back(ser);
    files.emplace_back("friction_" + s.name + ".csv", os.str());
    const auto opt = optimal_slip(s);
    peaks << s.name << ',' << format_double(opt.lambda) << ',' << format_double(mu(s, opt.lambda)) << ','
          << (opt.monotone ? 1 : 0) << '\n';
  }
  const fs::path dir = prepare_out(g.out);
  for (const auto& [name, text] : files) write_text(dir / name, text);
  write_text(dir / "friction_peaks.csv", peaks.str());
  emit_plot(doc, (dir / "friction.svg").string());
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "friction",
                 {{"surfaces", surfaces}, {"points", points}});
  std::cout << peaks.str();
  return kOk;
}

int cmd_weights(const Globals& g, std::vector<double> estimates, std::size_t points) {
  const Scenario sc = load_scenario(g, false);
  const ControllerSpec& cs = sc.controller;
  MembershipBank bank = cs.memberships;
  if (bank.empty()) {
    std::vector<RoadSurface> members;
    if (cs.bank.empty()) members = sc.surfaces;
    else
      for (const auto& n : cs.bank) members.push_back(find_surface(sc.surfaces, n));
    bank = make_default_bank(members);
  }
  if (estimates.empty()) {
    if (points < 2) throw UsageError("--points must be at least 2");
    for (std::size_t i = 0; i < points; ++i) estimates.push_back(static_cast<double>(i) / (points - 1));
  }
  std::ostringstream os;
  os << "lambda_opt_est";
  for (const auto& f : bank) os << ",weight_" << f.label;
  os << ",lambda_ref,coverage_warning\n";
  std::vector<double> lopt;
  for (const auto& f : bank) lopt.push_back(lambda_opt(find_surface(sc.surfaces, f.label)));
  PlotDocument doc{"road weights", "estimated optimal slip", "weight", {}};
  for (const auto& f : bank) doc.series.push_back({f.label, {}, {}});
  for (double x : estimates) {
    const auto m = memberships(x, bank);
    const auto w = weights(m, bank);
    os << format_double(x);
    for (std::size_t k = 0; k < w.weights.size(); ++k) {
      os << ',' << format_double(w.weights[k]);
      doc.series[k].x.push_back(x);
      doc.series[k].y.push_back(w.weights[k]);
    }
    os << ',' << format_double(weighted_reference(w, lopt)) << ',' << (m.coverage_warning ? 1 : 0) << '\n';
  }
  const fs::path dir = prepare_out(g.out);
  write_text(dir / "weights.csv", os.str());
  emit_plot(doc, (dir / "weights.svg").string());
  write_manifest(dir, scenario_to_json(sc), sc.noise.seed, "weights", {{"estimates", estimates}});
  std::cout << os.str();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"abslab: single-corner ABS braking simulator"};
  app.set_version_flag("--version", std::string(ABSLAB_VERSION));
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  double dt = 0.0;
  app.add_option("--config", g.config, "scenario config (path, bundled name, or manifest)");
  app.add_option("--out", g.out, "output directory")->capture_default_str();
  auto* seed_opt = app.add_option("--seed", seed, "noise seed override");
  auto* dt_opt = app.add_option("--dt", dt, "integration step override [s]")->check(CLI::PositiveNumber);

  auto* sim = app.add_subcommand("simulate", "run one scenario");
  auto* bat = app.add_subcommand("batch", "run a list of scenarios concurrently");
  unsigned threads = 0;
  bat->add_option("--threads", threads, "worker threads (0: automatic)");

  std::string surfaces = "all";
  const auto add_surfaces = [&](CLI::App* c) {
    c->add_option("--surfaces,--surface", surfaces, "surface names, comma separated, or 'all'")
        ->capture_default_str();
  };
  auto* tune = app.add_subcommand("autotune", "relay experiment and Ziegler-Nichols gains per surface");
  add_surfaces(tune);
  auto* eqc = app.add_subcommand("equilibria", "slip equilibria for a constant brake torque");
  add_surfaces(eqc);
  double torque = 0.0, fraction = 0.5;
  auto* torque_opt = eqc->add_option("--torque", torque, "brake torque [N m]");
  eqc->add_option("--fraction", fraction, "torque as a fraction of the peak wheel torque")->capture_default_str();
  auto* lin = app.add_subcommand("linearize", "first-order models about an operating slip");
  add_surfaces(lin);
  double lam = 0.0, speed = 0.0;
  auto* lam_opt = lin->add_option("--lambda", lam, "operating slip (default: half the optimal slip)");
  auto* speed_opt = lin->add_option("--speed", speed, "vehicle speed [m/s] (default: initial speed)");
  auto* fr = app.add_subcommand("friction", "friction curves");
  add_surfaces(fr);
  std::size_t points = 200;
  fr->add_option("--points", points, "samples per curve")->capture_default_str();
  auto* wt = app.add_subcommand("weights", "fuzzy road weights over optimal-slip estimates");
  std::vector<double> estimates;
  std::size_t wpoints = 101;
  wt->add_option("--estimate", estimates, "estimated optimal slip (repeatable)");
  wt->add_option("--points", wpoints, "grid size over [0, 1] when no estimate is given")->capture_default_str();

  for (auto* c : {sim, bat, tune, eqc, lin, fr, wt}) c->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (*seed_opt) g.seed = seed;
  if (*dt_opt) g.dt = dt;

  try {
    if (*sim) return cmd_simulate(g);
    if (*bat) return cmd_batch(g, threads);
    if (*tune) return cmd_autotune(g, surfaces);
    if (*eqc) return cmd_equilibria(g, surfaces, *torque_opt ? std::optional(torque) : std::nullopt, fraction);
    if (*lin)
      return cmd_linearize(g, surfaces, *lam_opt ? std::optional(lam) : std::nullopt,
                           *speed_opt ? std::optional(speed) : std::nullopt);
    if (*fr) return cmd_friction(g, surfaces, points);
    if (*wt) return cmd_weights(g, estimates, wpoints);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return kFault;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kFault;
  } catch (const DomainError& e) {
    std::cerr << "domain error: " << e.what() << "\n";
    return kUsage;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFault;
  }
  return kUsage;
}
