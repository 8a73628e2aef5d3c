// Command-line front end: sample -> channel -> optimize -> simulate, plus sweep.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "rrot/parallel.hpp"
#include "rrot/protocol.hpp"
#include "rrot/sweep.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rrot;

namespace {

constexpr double kPi = std::numbers::pi;

enum ExitCode { kOk = 0, kInternal = 1, kConfig = 2, kIo = 3, kNumeric = 4 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Angles accept a trailing "pi", e.g. "0.08pi".
double parse_angle(const std::string& text) {
  std::string t = text;
  double scale = 1.0;
  if (t.size() >= 2 && t.substr(t.size() - 2) == "pi") {
    scale = kPi;
    t = t.substr(0, t.size() - 2);
    if (t.empty()) t = "1";
  }
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ConfigError("cannot parse angle '" + text + "'");
  }
  if (used != t.size()) throw ConfigError("cannot parse angle '" + text + "'");
  return v * scale;
}

double angle_value(const json& j) { return j.is_string() ? parse_angle(j.get<std::string>()) : j.get<double>(); }

json defaults() {
  return {{"d", 3},
          {"p", 0.001},
          {"theta", nullptr},
          {"theta_max", 0.16 * kPi},
          {"theta_grid", "actions"},
          {"n_samples", 5000},
          {"n_trials", 10000},
          {"bootstrap", 1000},
          {"gamma", 0.99},
          {"delta_tol", 0.01},
          {"n_phi", 201},
          {"n_q", 21},
          {"n_theta", 201},
          {"eps_ratio", 0.01},
          {"q_floor", 1e-6},
          {"q_acc", nullptr},
          {"q_acc_ratio", 0.01},
          {"max_iterations", 100000},
          {"targets", {0.05, 0.1, 0.2, 0.4}},
          {"mode", "kernel"},
          {"round_cap", 10000},
          {"trial_logs", false},
          {"kernel_file", nullptr},
          {"seed", 1},
          {"workers", 1},
          {"out", "out"},
          {"sweep",
           {{"ds", {3, 5}},
            {"ps", {0.0, 0.001, 0.01}},
            {"thetas", {0.01 * kPi, 0.03 * kPi, 0.05 * kPi, 0.07 * kPi, 0.09 * kPi, 0.11 * kPi, 0.13 * kPi}},
            {"half_success", true},
            {"half_p", 0.001},
            {"half_tol", 0.02}}}};
}

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<int> d;
  std::optional<double> p;
  std::optional<std::string> theta;
  std::optional<std::string> target_phi;
};

// Defaults, then the config file, then flags.
json resolve(const Flags& f) {
  json cfg = defaults();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw IoError("cannot open config file " + f.config);
    json file;
    try {
      file = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw ConfigError("config file " + f.config + " is not valid JSON: " + e.what());
    }
    if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
    for (const auto& [k, v] : file.items()) {
      if (!cfg.contains(k)) throw ConfigError("unknown config key '" + k + "'");
      if (k == "sweep") {
        for (const auto& [sk, sv] : v.items()) {
          if (!cfg["sweep"].contains(sk)) throw ConfigError("unknown sweep key '" + sk + "'");
          cfg["sweep"][sk] = sv;
        }
      } else {
        cfg[k] = v;
      }
    }
  }
  if (f.seed) cfg["seed"] = *f.seed;
  if (f.out) cfg["out"] = *f.out;
  if (f.workers) cfg["workers"] = *f.workers;
  if (f.d) cfg["d"] = *f.d;
  if (f.p) cfg["p"] = *f.p;
  if (f.theta) cfg["theta"] = parse_angle(*f.theta);
  if (f.target_phi) {
    json list = json::array();
    std::stringstream ss(*f.target_phi);
    std::string item;
    while (std::getline(ss, item, ',')) list.push_back(parse_angle(item));
    cfg["targets"] = list;
  }
  // Normalize angle fields to radians.
  try {
    if (!cfg["theta"].is_null()) cfg["theta"] = angle_value(cfg["theta"]);
    cfg["theta_max"] = angle_value(cfg["theta_max"]);
    for (auto& t : cfg["targets"]) t = angle_value(t);
    for (auto& t : cfg["sweep"]["thetas"]) t = angle_value(t);
    if (cfg["theta_grid"].is_array())
      for (auto& t : cfg["theta_grid"]) t = angle_value(t);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad angle value: ") + e.what());
  }
  return cfg;
}

template <class T>
T get(const json& cfg, const char* key) {
  try {
    return cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void validate(const json& cfg) {
  const int d = get<int>(cfg, "d");
  if (d < 3 || d % 2 == 0) throw ConfigError("d must be odd and at least 3");
  const double p = get<double>(cfg, "p");
  if (!(p >= 0.0 && p <= 0.5)) throw ConfigError("p must lie in [0, 1/2]");
  if (get<int>(cfg, "n_samples") <= 0) throw ConfigError("n_samples must be positive");
  if (get<int>(cfg, "n_trials") <= 0) throw ConfigError("n_trials must be positive");
  if (get<int>(cfg, "workers") <= 0) throw ConfigError("workers must be positive");
  if (!(get<double>(cfg, "theta_max") > 0.0)) throw ConfigError("theta_max must be positive");
  const auto mode = get<std::string>(cfg, "mode");
  if (mode != "kernel" && mode != "end_to_end" && mode != "both")
    throw ConfigError("mode must be kernel, end_to_end or both");
  if (!cfg["theta_grid"].is_array() && cfg["theta_grid"] != "actions")
    throw ConfigError("theta_grid must be \"actions\" or a list of angles");
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex(name_hash(ss.str()));
}

// Run context: resolved config, output directory, provenance and a JSONL log.
struct Run {
  std::string command;
  json cfg;
  fs::path out;
  std::string config_hash;
  json inputs = json::object();
  std::ofstream log;

  Run(std::string cmd, json c) : command(std::move(cmd)), cfg(std::move(c)) {
    out = get<std::string>(cfg, "out");
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory " + out.string() + ": " + ec.message());
    // Worker count and output path do not change results, so they stay out of the hash.
    json hashed = cfg;
    hashed.erase("workers");
    hashed.erase("out");
    config_hash = hex(name_hash(hashed.dump()));
    log.open(out / (command + ".log.jsonl"));
    if (!log) throw IoError("cannot write to " + out.string());
    write_json(command + ".config.json", {{"command", command}, {"config", cfg}, {"config_hash", config_hash}});
    event("start", {});
  }

  void event(const std::string& what, json data) {
    data["event"] = what;
    data["command"] = command;
    data["time"] = std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
    log << data.dump() << '\n';
    log.flush();
  }

  fs::path input(const std::string& name, const std::string& producer) {
    const fs::path path = out / name;
    if (!fs::exists(path))
      throw IoError("missing " + path.string() + "; run `rrot " + producer + "` with the same --out first");
    inputs[name] = file_hash(path);
    return path;
  }

  std::string header() const {
    return "# rrot " + command + " config_hash=" + config_hash + " inputs=" + inputs.dump() + "\n";
  }

  std::ofstream open(const std::string& name) {
    std::ofstream f(out / name);
    if (!f) throw IoError("cannot write " + (out / name).string());
    f.precision(17);
    return f;
  }

  void write_json(const std::string& name, json body) {
    auto f = open(name);
    f << body.dump(1) << '\n';
  }

  json provenance() const { return {{"command", command}, {"config_hash", config_hash}, {"inputs", inputs}}; }
};

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + " is not valid JSON: " + e.what());
  }
}

GridOptions grid_options(const json& cfg) {
  GridOptions o;
  o.n_phi = get<int>(cfg, "n_phi");
  o.n_q = get<int>(cfg, "n_q");
  o.n_theta = get<int>(cfg, "n_theta");
  o.gamma = get<double>(cfg, "gamma");
  o.delta_tol = get<double>(cfg, "delta_tol");
  o.eps_ratio = get<double>(cfg, "eps_ratio");
  o.q_floor = get<double>(cfg, "q_floor");
  o.max_iterations = get<int>(cfg, "max_iterations");
  return o;
}

double q_acc_for(const json& cfg, double target) {
  if (!cfg["q_acc"].is_null()) return get<double>(cfg, "q_acc");
  return get<double>(cfg, "q_acc_ratio") * std::abs(target);
}

// Positive rotation angles of the action grid, or the explicit list.
std::vector<double> theta_grid(const json& cfg) {
  if (!cfg["theta"].is_null()) return {get<double>(cfg, "theta")};
  if (cfg["theta_grid"].is_array()) return cfg["theta_grid"].get<std::vector<double>>();
  GridOptions o = grid_options(cfg);
  const int count = o.n_theta - 1;
  const double tmax = get<double>(cfg, "theta_max");
  std::vector<double> out;
  for (int a = count / 2; a < count; ++a) out.push_back(tmax * (2.0 * a - (count - 1)) / (count - 1));
  if (count % 2 == 1) out.front() = 0.0;
  return out;
}

struct CodeBundle {
  SurfaceCode code;
  MatchingGraph graph;
  ChannelCache cache;
  explicit CodeBundle(int d) : code(build_code(d)), graph(build_graph(code)), cache(code, graph) {}
};

void load_cache(Run& run, ChannelCache& cache) {
  const fs::path path = run.out / "channel_cache.json";
  if (fs::exists(path)) {
    cache.load(path.string());
    run.event("cache_loaded", {{"entries", cache.size()}});
  }
}

int cmd_sample(Run& run) {
  const json& cfg = run.cfg;
  const auto code = build_code(get<int>(cfg, "d"));
  const double p = get<double>(cfg, "p");
  const int n = get<int>(cfg, "n_samples");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const int workers = get<int>(cfg, "workers");
  const auto thetas = theta_grid(cfg);
  auto f = run.open("samples.csv");
  auto h = run.open("histogram.csv");
  f << run.header() << "theta,index,s,s0,e_weight\n";
  h << run.header() << "theta,s,count,frequency\n";
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    const auto samples = sample_batch(code, {thetas[k], p}, n, derive_seed(seed, "theta", k), workers);
    std::map<std::uint64_t, int> counts;
    for (int i = 0; i < n; ++i) {
      const auto& s = samples[i];
      f << thetas[k] << ',' << i << ',' << pack(s.s) << ',' << pack(s.s0) << ',' << weight(s.e) << '\n';
      ++counts[pack(s.s)];
    }
    for (const auto& [key, c] : counts) h << thetas[k] << ',' << key << ',' << c << ',' << double(c) / n << '\n';
    run.event("theta_done", {{"theta", thetas[k]}, {"distinct", counts.size()}});
  }
  return kOk;
}

int cmd_channel(Run& run) {
  const json& cfg = run.cfg;
  const fs::path samples = run.input("samples.csv", "sample");
  CodeBundle cb(get<int>(cfg, "d"));
  load_cache(run, cb.cache);
  const double p = get<double>(cfg, "p");
  const int workers = get<int>(cfg, "workers");

  // Rebuild per-theta tables from the sample file, in file order.
  std::ifstream in(samples);
  std::string line;
  std::vector<double> thetas;
  std::vector<std::map<std::uint64_t, int>> counts;
  std::vector<int> totals;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("theta,", 0) == 0) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    double theta = 0.0;
    std::uint64_t key = 0;
    try {
      theta = std::stod(a);
      key = std::stoull(c);
    } catch (const std::exception&) {
      throw IoError("malformed line in samples.csv: " + line);
    }
    if (thetas.empty() || thetas.back() != theta) {
      thetas.push_back(theta);
      counts.emplace_back();
      totals.push_back(0);
    }
    ++counts.back()[key];
    ++totals.back();
  }
  if (thetas.empty()) throw IoError("samples.csv holds no samples");

  ChannelGrid grid{cb.code.d, p, {}};
  const int m = cb.code.num_checks();
  for (std::size_t k = 0; k < thetas.size(); ++k) {
    SyndromeTable t{cb.code.d, {thetas[k], p}, totals[k], {}};
    for (const auto& [key, c] : counts[k]) t.entries.push_back({key, c, double(c) / totals[k], {}});
    parallel_for(static_cast<long>(t.entries.size()), workers,
                 [&](long i) { t.entries[i].channel = cb.cache.get(t.params, unpack(t.entries[i].key, m)); });
    grid.tables.push_back(std::move(t));
  }
  auto f = run.open("channel.csv");
  f << run.header() << "d,p,theta,s,count,weight,phi_s,q_s,p_s,degenerate\n";
  for (const auto& t : grid.tables)
    for (const auto& e : t.entries)
      f << grid.d << ',' << p << ',' << t.params.theta << ',' << e.key << ',' << e.count << ',' << e.weight << ','
        << e.channel.phi_s << ',' << e.channel.q_s << ',' << e.channel.p_s << ',' << e.channel.degenerate << '\n';
  json body = to_json(grid);
  body["provenance"] = run.provenance();
  run.write_json("channel_grid.json", body);
  cb.cache.save((run.out / "channel_cache.json").string());
  run.event("channel_done", {{"thetas", thetas.size()}, {"cache_entries", cb.cache.size()}, {"cache_hits", cb.cache.hits()}});
  return kOk;
}

int cmd_optimize(Run& run) {
  const json& cfg = run.cfg;
  const GridOptions opt = grid_options(cfg);
  const int workers = get<int>(cfg, "workers");
  std::optional<ChannelGrid> cgrid;
  std::optional<EmpiricalKernel> fixed;
  if (!cfg["kernel_file"].is_null()) {
    const fs::path path = get<std::string>(cfg, "kernel_file");
    if (!fs::exists(path)) throw IoError("kernel_file " + path.string() + " not found");
    run.inputs[path.filename().string()] = file_hash(path);
    fixed = kernel_from_json(read_json(path));
  } else {
    cgrid = channel_grid_from_json(read_json(run.input("channel_grid.json", "channel")));
    if (cgrid->d != get<int>(cfg, "d") || cgrid->p != get<double>(cfg, "p"))
      throw ConfigError("channel_grid.json was built for another (d, p)");
  }
  auto f = run.open("optimize.csv");
  f << run.header() << "index,target,q_acc,iterations,final_residual,v_start,start_action,kernel_hash,policy_file\n";
  const auto targets = get<std::vector<double>>(cfg, "targets");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const double target = targets[k];
    const double q_acc = q_acc_for(cfg, target);
    PolicyBundle b;
    if (fixed) {
      b.grid = make_grid(target, fixed->actions, q_acc, opt);
      b.kernel = *fixed;
    } else {
      b.grid = make_grid(target, get<double>(cfg, "theta_max"), q_acc, opt);
      try {
        b.kernel = build_kernel(*cgrid, b.grid.actions);
      } catch (const std::out_of_range& e) {
        throw ConfigError(std::string("channel grid does not cover the action range: ") + e.what());
      }
    }
    b.hash = kernel_hash(b.kernel);
    b.solution = value_iterate(b.grid, b.kernel, workers);
    const std::string name = "policy_" + std::to_string(k) + ".json";
    json body = to_json(b);
    body["provenance"] = run.provenance();
    run.write_json(name, body);
    const int start = b.grid.cell(b.grid.start_bin(), 0);
    f << k << ',' << target << ',' << q_acc << ',' << b.solution.iterations << ',' << b.solution.residuals.back()
      << ',' << b.solution.v[start] << ',' << b.solution.policy[start] << ',' << hex(b.hash) << ',' << name << '\n';
    if (b.solution.clamped > 0) run.event("warning", {{"message", "Q updates clamped"}, {"count", b.solution.clamped}});
    run.event("policy_done", {{"target", target}, {"iterations", b.solution.iterations}});
  }
  return kOk;
}

int cmd_simulate(Run& run) {
  const json& cfg = run.cfg;
  const int workers = get<int>(cfg, "workers");
  const int n_trials = get<int>(cfg, "n_trials");
  const int resamples = get<int>(cfg, "bootstrap");
  const int cap = get<int>(cfg, "round_cap");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  const bool logs = get<bool>(cfg, "trial_logs");
  const auto mode = get<std::string>(cfg, "mode");
  const auto targets = get<std::vector<double>>(cfg, "targets");

  std::vector<PolicyBundle> policies;
  for (std::size_t k = 0; k < targets.size(); ++k) {
    policies.push_back(bundle_from_json(read_json(run.input("policy_" + std::to_string(k) + ".json", "optimize"))));
    if (policies.back().grid.target != targets[k])
      throw ConfigError("policy_" + std::to_string(k) + ".json targets another angle; rerun optimize");
  }
  std::optional<CodeBundle> cb;
  if (mode != "kernel") {
    cb.emplace(get<int>(cfg, "d"));
    load_cache(run, cb->cache);
  }
  auto f = run.open("campaign.csv");
  f << run.header()
    << "d,p,target,mode,n_trials,mean_T,T_lo,T_hi,mean_Q,Q_lo,Q_hi,mean_rel_Q,rel_Q_lo,rel_Q_hi,divergent_fraction\n";
  std::ofstream trials;
  if (logs) trials = run.open("trials.jsonl");
  for (std::size_t k = 0; k < targets.size(); ++k) {
    const auto& b = policies[k];
    std::vector<std::pair<std::string, std::unique_ptr<OutcomeSource>>> sources;
    if (mode != "end_to_end") sources.emplace_back("kernel", std::make_unique<KernelSource>(b.kernel));
    if (mode != "kernel")
      sources.emplace_back("end_to_end", std::make_unique<EndToEndSource>(cb->cache, get<double>(cfg, "p"), b.grid.actions));
    for (const auto& [name, src] : sources) {
      const auto c = run_campaign(b, *src, targets[k], n_trials, derive_seed(seed, "campaign", k), workers, resamples,
                                  cap, logs);
      const auto& s = c.stats;
      f << get<int>(cfg, "d") << ',' << get<double>(cfg, "p") << ',' << targets[k] << ',' << name << ',' << n_trials
        << ',' << s.t.mean << ',' << s.t.lo << ',' << s.t.hi << ',' << s.q.mean << ',' << s.q.lo << ',' << s.q.hi << ','
        << s.relative_q.mean << ',' << s.relative_q.lo << ',' << s.relative_q.hi << ',' << s.divergent_fraction << '\n';
      if (logs)
        for (std::size_t i = 0; i < c.trials.size(); ++i) {
          json row = to_json(c.trials[i]);
          row["target"] = targets[k];
          row["mode"] = name;
          row["trial"] = i;
          trials << row.dump() << '\n';
        }
      run.event("campaign_done", {{"target", targets[k]}, {"mode", name}, {"stats", to_json(s)}});
    }
  }
  if (cb) cb->cache.save((run.out / "channel_cache.json").string());
  return kOk;
}

int cmd_sweep(Run& run) {
  const json& cfg = run.cfg;
  const json& sw = cfg.at("sweep");
  const auto ds = get<std::vector<int>>(sw, "ds");
  const auto ps = get<std::vector<double>>(sw, "ps");
  const auto thetas = get<std::vector<double>>(sw, "thetas");
  const int n = get<int>(cfg, "n_samples");
  const int resamples = get<int>(cfg, "bootstrap");
  const int workers = get<int>(cfg, "workers");
  const auto seed = get<std::uint64_t>(cfg, "seed");
  if (ds.empty()) throw ConfigError("sweep.ds is empty");
  std::vector<std::unique_ptr<CodeBundle>> codes;
  for (int d : ds) {
    if (d < 3 || d % 2 == 0) throw ConfigError("sweep distances must be odd and at least 3");
    codes.push_back(std::make_unique<CodeBundle>(d));
  }

  auto f = run.open("sweep.csv");
  f << run.header() << "d,p,theta,mean_relative_dephasing,stderr,ci_lo,ci_hi,n_samples,trivial_syndrome_prob,excluded_weight\n";
  std::uint64_t k = 0;
  for (auto& cb : codes)
    for (double p : ps)
      for (double theta : thetas) {
        const auto pt = sweep_point(cb->cache, p, theta, n, derive_seed(seed, "sweep", k++), workers, resamples);
        f << pt.d << ',' << pt.p << ',' << pt.theta << ',' << pt.mean_relative_dephasing << ',' << pt.std_error << ','
          << pt.lo << ',' << pt.hi << ',' << pt.n_samples << ',' << pt.trivial_syndrome_prob << ','
          << pt.excluded_weight << '\n';
        run.event("point_done", {{"d", pt.d}, {"p", p}, {"theta", theta}});
      }

  if (get<bool>(sw, "half_success")) {
    const double hp = get<double>(sw, "half_p");
    auto g = run.open("suppression.csv");
    g << run.header() << "d,p,theta_half,trivial_syndrome_prob,iterations,mean_relative_dephasing,stderr,ci_lo,ci_hi,q0_over_phi0\n";
    std::vector<double> dvals, means;
    std::vector<std::vector<double>> reps;
    for (std::size_t i = 0; i < codes.size(); ++i) {
      auto& cb = *codes[i];
      const auto h = find_half_success_angle(cb.code, hp, n, derive_seed(seed, "half", i), workers, 0.0,
                                             get<double>(cfg, "theta_max"), get<double>(sw, "half_tol"));
      const auto pt = sweep_point(cb.cache, hp, h.theta, n, derive_seed(seed, "half_point", i), workers, resamples);
      const auto c0 = cb.cache.get({h.theta, hp}, Syndrome(cb.code.num_checks(), 0));
      g << cb.code.d << ',' << hp << ',' << h.theta << ',' << h.trivial_syndrome_prob << ',' << h.iterations << ','
        << pt.mean_relative_dephasing << ',' << pt.std_error << ',' << pt.lo << ',' << pt.hi << ','
        << (c0.degenerate ? NAN : c0.q_s / std::abs(c0.phi_s)) << '\n';
      dvals.push_back(cb.code.d);
      means.push_back(pt.mean_relative_dephasing);
      reps.push_back(pt.replicates);
    }
    if (codes.size() >= 2) {
      const auto fit = fit_suppression(dvals, means, &reps);
      json body = {{"kappa", fit.kappa},       {"kappa_lo", fit.kappa_lo}, {"kappa_hi", fit.kappa_hi},
                   {"intercept", fit.intercept}, {"residuals", fit.residuals}, {"ds", dvals},
                   {"means", means},           {"provenance", run.provenance()}};
      run.write_json("suppression_fit.json", body);
    }
  }
  for (auto& cb : codes) {
    // One cache file per distance keeps the sweep independent of the pipeline cache.
    cb->cache.save((run.out / ("sweep_cache_d" + std::to_string(cb->code.d) + ".json")).string());
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive transversal-rotation laboratory for rotated surface codes"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  std::uint64_t seed = 0;
  std::string out, theta, target;
  int workers = 0, d = 0;
  double p = 0.0;
  app.add_option("--config", flags.config, "JSON config file; flags override it");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_out = app.add_option("--out", out, "output directory");
  auto* o_workers = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  auto* o_d = app.add_option("--d", d, "code distance");
  auto* o_p = app.add_option("--p", p, "physical dephasing rate");
  auto* o_theta = app.add_option("--theta", theta, "single physical angle (radians, or e.g. 0.08pi)");
  auto* o_target = app.add_option("--target-phi", target, "target logical angles, comma separated");
  const std::map<std::string, int (*)(Run&)> commands{{"sample", cmd_sample},
                                                      {"channel", cmd_channel},
                                                      {"optimize", cmd_optimize},
                                                      {"simulate", cmd_simulate},
                                                      {"sweep", cmd_sweep}};
  const std::map<std::string, std::string> help{
      {"sample", "sample syndromes on the theta grid"},
      {"channel", "evaluate the logical channel of every sampled syndrome"},
      {"optimize", "value iteration for each target angle"},
      {"simulate", "Monte Carlo campaigns with the optimized policies"},
      {"sweep", "relative dephasing over (d, p, theta) and half-success suppression"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfig;
  }
  if (*o_seed) flags.seed = seed;
  if (*o_out) flags.out = out;
  if (*o_workers) flags.workers = workers;
  if (*o_d) flags.d = d;
  if (*o_p) flags.p = p;
  if (*o_theta) flags.theta = theta;
  if (*o_target) flags.target_phi = target;
  const std::string name = app.get_subcommands().front()->get_name();
  try {
    json cfg = resolve(flags);
    validate(cfg);
    Run run(name, cfg);
    const int rc = commands.at(name)(run);
    run.event("done", {{"exit_code", rc}});
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const std::length_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::runtime_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
