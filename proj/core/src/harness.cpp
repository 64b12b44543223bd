#include "ermu/harness.hpp"

#include "ermu/config.hpp"
#include "ermu/csv.hpp"
#include "ermu/free_energy.hpp"
#include "ermu/report.hpp"
#include "ermu/rng.hpp"

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <numbers>
#include <ostream>
#include <sstream>

namespace ermu {

namespace fs = std::filesystem;

int resolve_threads(std::optional<int> flag, int config_value) {
  if (flag) {
    if (*flag < 1) throw InvalidArgument("--threads must be >= 1");
    return *flag;
  }
  if (const char* env = std::getenv("ERMU_THREADS"); env && *env) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (*end != '\0' || v < 1) throw InvalidArgument(fmt::format("ERMU_THREADS='{}' is not a positive integer", env));
    return static_cast<int>(v);
  }
  return std::max(1, config_value);
}

namespace {

std::string fmt_bool(bool b) { return b ? "1" : "0"; }

int family_base(const FamilySpec& f, const std::vector<int>& ladder, int override_base) {
  if (override_base > 0) return override_base;
  return family_ladder(f, ladder).front();
}

FeatureSource g_source(const FamilyInstance& inst) {
  return [&inst](Index m, std::uint64_t s) { return inst.sample_g(m, s); };
}

std::string run_sweeps(const ExperimentConfig& cfg) {
  const CampaignConfig& c = cfg.campaign;
  std::string o = "family,arm,instance,n,p,s,risk_star,D,solver_gap,quarantined,risk_star_0,test_at_theta0\r\n";
  for (const FamilySpec& f : c.families) {
    const FamilyInstance inst =
        make_family_instance(f, c.problem, family_base(f, c.ladder, cfg.sweep.base_size), c.master_seed);
    for (int i = 0; i < cfg.sweep.instances; ++i) {
      const TrialSeeds seeds = trial_seeds(c.master_seed, f.id + "/sweep", inst.size.n, i);
      const TrialData data = sample_trial_data(inst, seeds);
      const FrozenTestSet test =
          make_frozen_test_set(inst.problem, g_source(inst), cfg.sweep.n_test, seeds.test_g);
      const FrozenTestRisk test_term(inst.problem, test);
      SolverConfig solver = c.solver;
      solver.seed = derive_seed(seeds.trial, {hash_tag("solver")});
      for (const char arm : {'x', 'g'}) {
        const Matrix& X = arm == 'x' ? data.X : data.G;
        const Vector& y = arm == 'x' ? data.y_x : data.y_g;
        const PerturbedRiskSweep sw = perturbed_sweep(inst.problem, X, y, test_term, cfg.sweep.s_grid, solver);
        for (std::size_t j = 0; j < sw.s_grid.size(); ++j)
          o += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(f.id), arm, i, inst.size.n,
                           inst.size.p, format_double(sw.s_grid[j]), format_double(sw.risk_star[j]),
                           format_double(sw.D[j]), format_double(sw.solver_gap[j]),
                           fmt_bool(sw.quarantined[j]), format_double(sw.risk_star_0),
                           format_double(sw.test_at_theta0));
      }
    }
  }
  return o;
}

struct FreeEnergyOutputs {
  std::string path;
  std::string sandwich;
  std::string near;
};

FreeEnergyOutputs run_free_energy(const ExperimentConfig& cfg) {
  const CampaignConfig& c = cfg.campaign;
  const FreeEnergySettings& fe = cfg.free_energy;
  FreeEnergyOutputs out;
  out.path = "family,n,p,beta,seed,t,f,segment_slope,slope_bound\r\n";
  out.sandwich = "family,arm,n,p,beta,f,lower,upper,entropy,dfdbeta,bounds_ok\r\n";
  out.near = "family,n,p,t_offset,t,test_risk,train_risk,residual,infeasible,risk_star,test_at_theta_hat\r\n";
  for (const FamilySpec& f : c.families) {
    const FamilyInstance inst =
        make_family_instance(f, c.problem, family_base(f, c.ladder, fe.base_size), c.master_seed);
    const Index n = inst.size.n, p = inst.size.p;
    const TrialSeeds seeds = trial_seeds(c.master_seed, f.id + "/free-energy", n, 0);
    const TrialData data = sample_trial_data(inst, seeds);
    SolverConfig solver = c.solver;
    solver.seed = derive_seed(seeds.trial, {hash_tag("solver")});

    const ErmSolution sol = solve_erm(inst.problem, data.X, data.y_x, solver);
    const CandidateSet cands = CandidateSet::solution_cloud(
        sol.theta_hat, inst.problem.constraint, fe.candidates, fe.alpha,
        derive_seed(seeds.trial, {hash_tag("candidates")}));

    InterpolationPath path{data.X, data.G, {}};
    for (int i = 0; i < fe.path_points; ++i)
      path.grid.push_back(i == fe.path_points - 1 ? std::numbers::pi / 2
                                                  : std::numbers::pi / 2 * i / (fe.path_points - 1));
    const auto pts = free_energy_path(path, cands, inst.problem, data.eps, fe.path_beta);
    const double bound = path_slope_bound(path, cands, inst.problem, data.eps);
    for (const PathPoint& pt : pts)
      out.path += fmt::format("{},{},{},{},{},{},{},{},{}\r\n", csv_field(f.id), n, p,
                              format_double(fe.path_beta), seeds.trial, format_double(pt.t),
                              format_double(pt.f), format_double(pt.segment_slope), format_double(bound));

    for (const char arm : {'x', 'g'}) {
      const SandwichReport rep = entropy_sandwich_check(
          cands, inst.problem, arm == 'x' ? data.X : data.G, arm == 'x' ? data.y_x : data.y_g, fe.beta_grid);
      for (const SandwichEntry& e : rep.entries)
        out.sandwich += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(f.id), arm, n, p,
                                    format_double(e.beta), format_double(e.f), format_double(e.lower),
                                    format_double(e.upper), format_double(e.entropy),
                                    format_double(e.dfdbeta), fmt_bool(e.bounds_ok));
    }

    const FrozenTestSet test = make_frozen_test_set(inst.problem, g_source(inst), fe.n_test, seeds.test_g);
    const FrozenTestRisk test_term(inst.problem, test);
    std::vector<double> levels;
    for (double off : fe.t_offsets) levels.push_back(sol.objective + off);
    const NearMinimizerProfile prof =
        min_test_over_near_minimizers(inst.problem, data.X, data.y_x, test_term, levels, solver);
    for (std::size_t i = 0; i < prof.levels.size(); ++i) {
      const NearMinimizerLevel& l = prof.levels[i];
      out.near += fmt::format("{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(f.id), n, p,
                              format_double(fe.t_offsets[i]), format_double(l.t),
                              format_double(l.test_risk), format_double(l.train_risk),
                              format_double(l.residual), fmt_bool(l.infeasible),
                              format_double(prof.risk_star), format_double(prof.test_at_theta_hat));
    }
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int cli_run(const RunOptions& options, std::ostream& out, std::ostream& err) {
  ExperimentConfig cfg;
  try {
    cfg = load_config(options.config_path);
    if (options.seed_override) cfg.campaign.master_seed = *options.seed_override;
    cfg.campaign.threads = resolve_threads(options.threads, cfg.campaign.threads);
    if (options.out_dir) cfg.output_dir = options.out_dir->string();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_timestamp();
  const fs::path dir = cfg.output_dir;
  std::vector<std::string> written;
  auto emit = [&](const char* name, const std::string& body) {
    write_file_atomic(dir / name, body);
    written.emplace_back(name);
  };

  std::vector<TrialResult> trials;
  try {
    fs::create_directories(dir);
    emit("config.yaml", serialize_config(cfg));
    trials = run_trials(cfg.campaign);
    emit("trials.csv", trials_to_csv(trials));
    if (cfg.sweep.enabled) emit("sweep.csv", run_sweeps(cfg));
    if (cfg.free_energy.enabled) {
      const FreeEnergyOutputs fe = run_free_energy(cfg);
      emit("free_energy_path.csv", fe.path);
      emit("entropy_sandwich.csv", fe.sandwich);
      emit("near_minimizers.csv", fe.near);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  nlohmann::json quarantined = nlohmann::json::array();
  for (const TrialResult& t : trials)
    for (const auto& [arm, a] : {std::pair{"x", &t.x_arm}, std::pair{"g", &t.g_arm}})
      if (a->quarantined())
        quarantined.push_back({{"family", t.family}, {"n", t.n}, {"trial", t.trial}, {"arm", arm},
                               {"iteration", a->iterations}});

  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const nlohmann::json manifest = {
      {"code_version", ERMU_VERSION},
      {"config_hash", config_hash(cfg)},
      {"master_seed", cfg.campaign.master_seed},
      {"threads", cfg.campaign.threads},
      {"started_at", started},
      {"wall_seconds", wall},
      {"trial_units", trials.size()},
      {"quarantined", quarantined},
      {"files", written},
  };
  try {
    write_file_atomic(dir / "MANIFEST.json", manifest.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }

  out << fmt::format("wrote {} trial results to {} in {:.1f} s\n", trials.size(), dir.string(), wall);
  if (!quarantined.empty()) {
    out << fmt::format("{} arm(s) quarantined after solver divergence:\n", quarantined.size());
    for (const auto& q : quarantined)
      out << fmt::format("  {} n={} trial={} arm={}\n", q["family"].get<std::string>(), q["n"].get<Index>(),
                         q["trial"].get<int>(), q["arm"].get<std::string>());
    return 3;
  }
  return 0;
}

namespace {

std::string gap_vs_n_csv(const UniversalityReport& rep) {
  std::string o =
      "family,n,p,trials,quarantined,mean_gap,gap_lo,gap_hi,gap_se,test_gap,test_gap_lo,test_gap_hi,"
      "test_gap_se,ks,ks_null_q99,bl_max\r\n";
  for (const FamilyReport& f : rep.families)
    for (const SizeReport& s : f.sizes)
      o += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\r\n", csv_field(f.id), s.n, s.p,
                       s.trials, s.quarantined, format_double(s.train_gap.estimate),
                       format_double(s.train_gap.ci.lo), format_double(s.train_gap.ci.hi),
                       format_double(s.train_gap.se), format_double(s.test_gap.estimate),
                       format_double(s.test_gap.ci.lo), format_double(s.test_gap.ci.hi),
                       format_double(s.test_gap_se), format_double(s.ks), format_double(s.ks_null_q99),
                       format_double(s.bl.max_gap));
  return o;
}

// Rows keyed by the header's column names; reports malformed lines.
std::vector<std::map<std::string, std::string>> read_table(const fs::path& path,
                                                           std::vector<std::string>& diag) {
  std::vector<std::map<std::string, std::string>> rows;
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<std::string> header;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (header.empty()) {
      header = std::move(fields);
      continue;
    }
    if (fields.size() != header.size()) {
      diag.push_back(fmt::format("{}:{}: expected {} fields, found {}", path.filename().string(), lineno,
                                 header.size(), fields.size()));
      continue;
    }
    std::map<std::string, std::string> row;
    for (std::size_t i = 0; i < header.size(); ++i) row[header[i]] = fields[i];
    rows.push_back(std::move(row));
  }
  if (header.empty()) diag.push_back(path.filename().string() + ": empty file");
  return rows;
}

std::string d_curves_csv(const std::vector<std::map<std::string, std::string>>& rows,
                         std::vector<std::string>& diag) {
  struct Acc {
    std::vector<double> d, test;
  };
  std::map<std::tuple<std::string, std::string, double>, Acc> acc;
  for (const auto& r : rows) {
    try {
      if (r.at("quarantined") == "1") continue;
      Acc& a = acc[{r.at("family"), r.at("arm"), std::stod(r.at("s"))}];
      a.d.push_back(std::stod(r.at("D")));
      a.test.push_back(std::stod(r.at("test_at_theta0")));
    } catch (const std::exception&) {
      diag.push_back("sweep.csv: missing or malformed column");
      return {};
    }
  }
  std::string o = "family,arm,s,instances,mean_D,sd_D,mean_test_at_theta0\r\n";
  for (const auto& [key, a] : acc)
    o += fmt::format("{},{},{},{},{},{},{}\r\n", csv_field(std::get<0>(key)), std::get<1>(key),
                     format_double(std::get<2>(key)), a.d.size(), format_double(sample_mean(a.d)),
                     format_double(sample_sd(a.d)), format_double(sample_mean(a.test)));
  return o;
}

}  // namespace

int cli_report(const fs::path& results_dir, const std::optional<fs::path>& out_dir, std::ostream& out,
               std::ostream& err) {
  const fs::path dest = out_dir.value_or(results_dir);
  std::vector<std::string> diag;
  const fs::path trials_path = results_dir / "trials.csv";
  if (!fs::exists(trials_path)) {
    err << "error: " << trials_path.string() << ": missing\n";
    return 2;
  }
  CsvDiagnostics cd;
  const std::vector<TrialResult> trials = parse_trials_csv(read_file(trials_path), "trials.csv", cd);
  diag.insert(diag.end(), cd.messages.begin(), cd.messages.end());
  if (trials.empty()) {
    for (const auto& m : diag) err << m << '\n';
    err << "error: no usable trials in " << trials_path.string() << '\n';
    return 2;
  }

  ReportOptions opts;
  const fs::path cfg_path = results_dir / "config.yaml";
  if (fs::exists(cfg_path)) {
    try {
      const ExperimentConfig cfg = load_config(cfg_path);
      for (const FamilySpec& f : cfg.campaign.families) {
        if (f.kind == FamilyKind::GaussianControl) opts.control_families.insert(f.id);
        if (cfg.campaign.problem.loss == LossKind::Squared) opts.non_lipschitz_families.insert(f.id);
      }
    } catch (const std::exception& e) {
      diag.push_back(std::string("config.yaml: ") + e.what());
    }
  } else {
    diag.push_back("config.yaml: missing; control families cannot be identified");
  }

  try {
    fs::create_directories(dest);
    const UniversalityReport rep = build_report(trials, opts);
    write_file_atomic(dest / "report.json", rep.to_json());
    write_file_atomic(dest / "gap_vs_n.csv", gap_vs_n_csv(rep));
    if (const fs::path p = results_dir / "free_energy_path.csv"; fs::exists(p)) {
      std::vector<std::string> d;
      read_table(p, d);
      if (d.empty()) write_file_atomic(dest / "free_energy_trace.csv", read_file(p));
      diag.insert(diag.end(), d.begin(), d.end());
    }
    if (const fs::path p = results_dir / "sweep.csv"; fs::exists(p)) {
      std::vector<std::string> d;
      const auto rows = read_table(p, d);
      const std::string body = d.empty() ? d_curves_csv(rows, d) : std::string();
      if (d.empty()) write_file_atomic(dest / "d_curves.csv", body);
      diag.insert(diag.end(), d.begin(), d.end());
    }
    for (const FamilyReport& f : rep.families) {
      out << fmt::format("{}: universality {}", f.id, f.trend.universality_holds ? "holds" : "not established");
      if (!f.verdict.empty()) out << fmt::format(" (null calibration {})", f.verdict);
      out << '\n';
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  for (const auto& m : diag) err << m << '\n';
  return diag.empty() ? 0 : 1;
}

}  // namespace ermu
