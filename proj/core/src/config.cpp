#include "ermu/config.hpp"

#include <openssl/evp.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ermu {

ConfigError::ConfigError(const std::string& message, std::string field, int line, int column)
    : std::runtime_error(line > 0 ? fmt::format("line {}, column {}: {}", line, column, message)
                                  : message),
      field_(std::move(field)),
      line_(line),
      column_(column) {}

namespace {

using Marks = std::map<std::string, YAML::Mark>;

[[noreturn]] void fail_at(const std::string& msg, const std::string& field, const YAML::Mark& m) {
  const bool known = m.line >= 0;
  throw ConfigError(fmt::format("{}: {}", field, msg), field, known ? m.line + 1 : 0,
                    known ? m.column + 1 : 0);
}

double parse_real(const YAML::Node& n, const std::string& field) {
  const std::string s = n.Scalar();
  if (s == "inf" || s == "+inf" || s == ".inf" || s == "+.inf" || s == "Infinity")
    return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-.inf" || s == "-Infinity") return -std::numeric_limits<double>::infinity();
  try {
    return n.as<double>();
  } catch (const YAML::Exception&) {
    fail_at("expected a number, got '" + s + "'", field, n.Mark());
  }
}

template <class T>
T convert(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) fail_at("expected a scalar", field, n.Mark());
  if constexpr (std::is_same_v<T, double>) {
    return parse_real(n, field);
  } else if constexpr (std::is_same_v<T, bool>) {
    try {
      return n.as<bool>();
    } catch (const YAML::Exception&) {
      fail_at("expected true or false", field, n.Mark());
    }
  } else if constexpr (std::is_same_v<T, std::string>) {
    return n.Scalar();
  } else {
    const std::string s = n.Scalar();
    if constexpr (std::is_unsigned_v<T>) {
      if (!s.empty() && s[0] == '-') fail_at("expected a non-negative integer", field, n.Mark());
    }
    try {
      return n.as<T>();
    } catch (const YAML::Exception&) {
      fail_at("expected an integer, got '" + s + "'", field, n.Mark());
    }
  }
}

template <class T>
std::vector<T> convert_list(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence()) fail_at("expected a list", field, n.Mark());
  std::vector<T> out;
  for (std::size_t i = 0; i < n.size(); ++i)
    out.push_back(convert<T>(n[i], fmt::format("{}[{}]", field, i)));
  return out;
}

// Reads the keys of one mapping and rejects anything it was not asked for.
class MapReader {
 public:
  MapReader(const YAML::Node& node, std::string path, Marks& marks)
      : node_(node), path_(std::move(path)), marks_(marks) {
    if (!node_.IsMap()) fail_at("expected a mapping", path_.empty() ? "<root>" : path_, node_.Mark());
  }

  template <class T>
  void get(const char* key, T& out) {
    if (const YAML::Node n = lookup(key)) out = convert<T>(n, field(key));
  }
  template <class T>
  void get_list(const char* key, std::vector<T>& out) {
    if (const YAML::Node n = lookup(key)) out = convert_list<T>(n, field(key));
  }
  template <class Parse>
  void get_enum(const char* key, Parse parse) {
    if (const YAML::Node n = lookup(key)) {
      const std::string s = convert<std::string>(n, field(key));
      try {
        parse(s);
      } catch (const InvalidArgument& e) {
        fail_at(e.what(), field(key), n.Mark());
      }
    }
  }
  YAML::Node child(const char* key) { return lookup(key); }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& kv : node_) {
      const std::string key = kv.first.Scalar();
      if (!seen_.contains(key)) fail_at("unknown key '" + key + "'", field(key), kv.first.Mark());
    }
  }

 private:
  YAML::Node lookup(const char* key) {
    seen_.insert(key);
    YAML::Node n = node_[key];
    if (n) marks_[field(key)] = n.Mark();
    return n;
  }

  YAML::Node node_;
  std::string path_;
  Marks& marks_;
  std::set<std::string> seen_;
};

void read_problem(const YAML::Node& node, ProblemSpec& p, Marks& marks) {
  MapReader r(node, "problem", marks);
  r.get_enum("loss", [&](const std::string& s) { p.loss = parse_loss_kind(s); });
  r.get("loss_delta", p.loss_delta);
  r.get_enum("label", [&](const std::string& s) { p.label = parse_label_kind(s); });
  r.get("tau", p.tau);
  r.get("label_bound", p.label_bound);
  r.get("label_scale", p.label_scale);
  r.get_enum("noise", [&](const std::string& s) { p.noise = parse_noise_law(s); });
  r.get("lambda", p.lambda);
  long long k = p.k;
  r.get("k", k);
  p.k = k;
  r.get("theta_star_norm", p.theta_star_norm);
  r.finish();
}

void read_solver(const YAML::Node& node, SolverConfig& s, Marks& marks) {
  MapReader r(node, "solver", marks);
  r.get("max_iters", s.max_iters);
  r.get("tol", s.tol);
  r.get("restarts", s.restarts);
  r.get("initial_step", s.initial_step);
  r.get("shrink", s.shrink);
  r.get("armijo", s.armijo);
  r.get("init_scale", s.init_scale);
  r.finish();
}

FamilySpec read_family(const YAML::Node& node, const std::string& path, Marks& marks) {
  FamilySpec f;
  MapReader r(node, path, marks);
  r.get("id", f.id);
  r.get_enum("kind", [&](const std::string& s) { f.kind = parse_family_kind(s); });
  std::vector<double> coeffs;
  r.get_list("hermite_coeffs", coeffs);
  if (const YAML::Node a = r.child("activation")) {
    const std::string name = convert<std::string>(a, r.field("activation"));
    try {
      switch (parse_activation_kind(name)) {
        case ActivationKind::TanhRf: f.activation = Activation::tanh_rf(); break;
        case ActivationKind::ShiftedSineNt: f.activation = Activation::shifted_sine_nt(); break;
        case ActivationKind::CustomHermite: f.activation = Activation::custom_hermite(coeffs); break;
      }
    } catch (const InvalidArgument& e) {
      fail_at(e.what(), r.field("activation"), a.Mark());
    }
  } else if (f.kind == FamilyKind::NeuralTangent) {
    f.activation = Activation::shifted_sine_nt();
  }
  if (!coeffs.empty() && f.activation.kind() != ActivationKind::CustomHermite)
    fail_at("hermite_coeffs given but activation is not custom-hermite", r.field("hermite_coeffs"),
            node["hermite_coeffs"].Mark());
  r.get("gamma_p", f.gamma_p);
  r.get("d_over_p", f.d_over_p);
  r.get("m_over_d", f.m_over_d);
  r.get_list("d_ladder", f.d_ladder);
  r.get("radius", f.radius);
  r.get_enum("constraint", [&](const std::string& s) { f.constraint = parse_constraint_kind(s); });
  r.get("nu", f.nu);
  r.get_enum("entry_law", [&](const std::string& s) { f.entry_law = parse_entry_law(s); });
  r.get("sigma_rho", f.sigma_rho);
  r.get("op_norm_bound", f.op_norm_bound);
  r.get_enum("covariance", [&](const std::string& s) {
    if (s == "default") f.cov_mode.reset();
    else f.cov_mode = parse_covariance_mode(s);
  });
  r.get("n_cov_factor", f.equiv.n_cov_factor);
  r.get("hermite_order", f.equiv.hermite_order);
  r.get("quadrature_order", f.equiv.quadrature_order);
  r.get("jitter_rel", f.equiv.jitter_rel);
  r.finish();
  return f;
}

void read_sweep(const YAML::Node& node, SweepSettings& s, Marks& marks) {
  MapReader r(node, "sweep", marks);
  r.get("enabled", s.enabled);
  r.get_list("s_grid", s.s_grid);
  r.get("instances", s.instances);
  long long n_test = s.n_test;
  r.get("n_test", n_test);
  s.n_test = n_test;
  r.get("base_size", s.base_size);
  r.finish();
}

void read_free_energy(const YAML::Node& node, FreeEnergySettings& s, Marks& marks) {
  MapReader r(node, "free_energy", marks);
  r.get("enabled", s.enabled);
  r.get("candidates", s.candidates);
  r.get("alpha", s.alpha);
  r.get_list("beta_grid", s.beta_grid);
  r.get("path_beta", s.path_beta);
  r.get("path_points", s.path_points);
  r.get_list("t_offsets", s.t_offsets);
  long long n_test = s.n_test;
  r.get("n_test", n_test);
  s.n_test = n_test;
  r.get("base_size", s.base_size);
  r.finish();
}

struct Invalid {
  std::string field;
  std::string message;
};

template <class T>
bool strictly_increasing(const std::vector<T>& v) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) return false;
  return true;
}

std::optional<Invalid> find_invalid(const ExperimentConfig& cfg) {
  const CampaignConfig& c = cfg.campaign;
  if (c.ladder.empty()) return Invalid{"ladder", "size ladder is empty"};
  if (!strictly_increasing(c.ladder)) return Invalid{"ladder", "size ladder must be strictly increasing"};
  if (c.ladder.front() < 2) return Invalid{"ladder", "size ladder entries must be >= 2"};
  if (c.trials < 1) return Invalid{"trials", "trials must be >= 1"};
  if (c.n_test < 1) return Invalid{"n_test", "n_test must be >= 1"};
  if (c.threads < 1) return Invalid{"threads", "threads must be >= 1"};
  if (c.families.empty()) return Invalid{"families", "at least one family is required"};

  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.families.size(); ++i) {
    const FamilySpec& f = c.families[i];
    const std::string pre = fmt::format("families[{}].", i);
    if (f.id.empty()) return Invalid{pre + "id", "family id is required"};
    if (f.id.find_first_of(":,\"\n\r") != std::string::npos)
      return Invalid{pre + "id", "family id may not contain ':', ',', quotes or newlines"};
    if (!ids.insert(f.id).second) return Invalid{pre + "id", "duplicate family id '" + f.id + "'"};
    if (!(f.gamma_p > 0.0)) return Invalid{pre + "gamma_p", "must be positive"};
    if (!(f.d_over_p > 0.0)) return Invalid{pre + "d_over_p", "must be positive"};
    if (!(f.m_over_d > 0.0)) return Invalid{pre + "m_over_d", "must be positive"};
    if (!(f.radius > 0.0)) return Invalid{pre + "radius", "must be positive"};
    if (!(f.nu > 0.0)) return Invalid{pre + "nu", "must be positive"};
    if (!(f.op_norm_bound > 0.0)) return Invalid{pre + "op_norm_bound", "must be positive"};
    if (!(std::abs(f.sigma_rho) < 1.0)) return Invalid{pre + "sigma_rho", "must lie in (-1, 1)"};
    if (!strictly_increasing(f.d_ladder) ||
        std::any_of(f.d_ladder.begin(), f.d_ladder.end(), [](int d) { return d < 1; }))
      return Invalid{pre + "d_ladder", "must be positive and strictly increasing"};
    if (f.activation.kind() == ActivationKind::CustomHermite && f.activation.hermite_coeffs().empty())
      return Invalid{pre + "hermite_coeffs", "custom-hermite needs coefficients"};
    if (f.constraint == ConstraintKind::NtOperatorBall && f.kind != FamilyKind::NeuralTangent)
      return Invalid{pre + "constraint", "nt-operator-ball needs the neural-tangent family"};
    if (f.cov_mode) {
      const CovarianceMode m = *f.cov_mode;
      const bool ok = f.kind == FamilyKind::GaussianControl ||
                      (m == CovarianceMode::HermiteExact && f.kind == FamilyKind::RandomFeatures) ||
                      (m == CovarianceMode::LinearExact && f.kind == FamilyKind::LinearIndependent) ||
                      m == CovarianceMode::MonteCarlo || m == CovarianceMode::Empirical;
      if (!ok) return Invalid{pre + "covariance", "mode not available for this family"};
    }
    if (!(f.equiv.n_cov_factor > 0.0)) return Invalid{pre + "n_cov_factor", "must be positive"};
    if (f.equiv.hermite_order < 1) return Invalid{pre + "hermite_order", "must be >= 1"};
    if (f.equiv.quadrature_order < 2) return Invalid{pre + "quadrature_order", "must be >= 2"};
    if (!(f.equiv.jitter_rel >= 0.0)) return Invalid{pre + "jitter_rel", "must be non-negative"};
  }

  const ProblemSpec& p = c.problem;
  if (!(p.loss_delta > 0.0)) return Invalid{"problem.loss_delta", "must be positive"};
  if (!(p.tau >= 0.0)) return Invalid{"problem.tau", "must be non-negative"};
  if (!(p.label_bound > 0.0)) return Invalid{"problem.label_bound", "must be positive"};
  if (!(p.label_scale > 0.0)) return Invalid{"problem.label_scale", "must be positive"};
  if (!(p.lambda >= 0.0)) return Invalid{"problem.lambda", "must be non-negative"};
  if (p.k < 1) return Invalid{"problem.k", "must be >= 1"};
  if (!(p.theta_star_norm > 0.0)) return Invalid{"problem.theta_star_norm", "must be positive"};

  const SolverConfig& s = c.solver;
  if (s.max_iters < 1) return Invalid{"solver.max_iters", "must be >= 1"};
  if (!(s.tol > 0.0)) return Invalid{"solver.tol", "must be positive"};
  if (s.restarts < 0) return Invalid{"solver.restarts", "must be >= 0"};
  if (!(s.initial_step > 0.0)) return Invalid{"solver.initial_step", "must be positive"};
  if (!(s.shrink > 0.0 && s.shrink < 1.0)) return Invalid{"solver.shrink", "must lie in (0, 1)"};
  if (!(s.armijo > 0.0 && s.armijo < 1.0)) return Invalid{"solver.armijo", "must lie in (0, 1)"};
  if (!(s.init_scale >= 0.0)) return Invalid{"solver.init_scale", "must be non-negative"};

  const SweepSettings& sw = cfg.sweep;
  if (sw.s_grid.empty()) return Invalid{"sweep.s_grid", "is empty"};
  for (double v : sw.s_grid) {
    if (v == 0.0 || !std::isfinite(v)) return Invalid{"sweep.s_grid", "must be finite and exclude 0"};
    if (std::find(sw.s_grid.begin(), sw.s_grid.end(), -v) == sw.s_grid.end())
      return Invalid{"sweep.s_grid", "must be symmetric about 0"};
  }
  if (sw.instances < 1) return Invalid{"sweep.instances", "must be >= 1"};
  if (sw.n_test < 1) return Invalid{"sweep.n_test", "must be >= 1"};
  if (sw.base_size < 0) return Invalid{"sweep.base_size", "must be >= 0"};

  const FreeEnergySettings& fe = cfg.free_energy;
  if (fe.candidates < 1) return Invalid{"free_energy.candidates", "must be >= 1"};
  if (!(fe.alpha > 0.0)) return Invalid{"free_energy.alpha", "must be positive"};
  if (fe.beta_grid.empty() || !strictly_increasing(fe.beta_grid) || !(fe.beta_grid.front() > 0.0))
    return Invalid{"free_energy.beta_grid", "must be positive and strictly increasing"};
  if (!(fe.path_beta > 0.0)) return Invalid{"free_energy.path_beta", "must be positive"};
  if (fe.path_points < 2) return Invalid{"free_energy.path_points", "must be >= 2"};
  for (double t : fe.t_offsets)
    if (!(t >= 0.0)) return Invalid{"free_energy.t_offsets", "offsets must be non-negative"};
  if (fe.n_test < 1) return Invalid{"free_energy.n_test", "must be >= 1"};
  if (fe.base_size < 0) return Invalid{"free_energy.base_size", "must be >= 0"};
  if (cfg.output_dir.empty()) return Invalid{"output_dir", "must not be empty"};
  return std::nullopt;
}

// Nearest recorded position for a field: the field itself, else its closest
// recorded ancestor (e.g. "families[0]").
YAML::Mark mark_for(const Marks& marks, std::string field) {
  while (!field.empty()) {
    if (auto it = marks.find(field); it != marks.end()) return it->second;
    const auto cut = field.find_last_of(".[");
    if (cut == std::string::npos) break;
    field.resize(cut);
  }
  return YAML::Mark::null_mark();
}

}  // namespace

void validate_config(const ExperimentConfig& config) {
  if (auto bad = find_invalid(config)) throw ConfigError(bad->field + ": " + bad->message, bad->field, 0, 0);
}

ExperimentConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(e.msg, "<syntax>", e.mark.line + 1, e.mark.column + 1);
  }
  if (!root || root.IsNull()) throw ConfigError("configuration is empty", "<root>", 0, 0);

  ExperimentConfig cfg;
  Marks marks;
  MapReader r(root, "", marks);
  CampaignConfig& c = cfg.campaign;
  r.get("master_seed", c.master_seed);
  r.get("trials", c.trials);
  r.get_list("ladder", c.ladder);
  long long n_test = c.n_test;
  r.get("n_test", n_test);
  c.n_test = n_test;
  r.get("threads", c.threads);
  r.get("output_dir", cfg.output_dir);
  if (const YAML::Node n = r.child("problem")) read_problem(n, c.problem, marks);
  if (const YAML::Node n = r.child("solver")) read_solver(n, c.solver, marks);
  if (const YAML::Node n = r.child("families")) {
    if (!n.IsSequence()) fail_at("expected a list", "families", n.Mark());
    for (std::size_t i = 0; i < n.size(); ++i) {
      const std::string path = fmt::format("families[{}]", i);
      marks[path] = n[i].Mark();
      c.families.push_back(read_family(n[i], path, marks));
    }
  }
  if (const YAML::Node n = r.child("sweep")) read_sweep(n, cfg.sweep, marks);
  if (const YAML::Node n = r.child("free_energy")) read_free_energy(n, cfg.free_energy, marks);
  r.finish();

  if (auto bad = find_invalid(cfg)) fail_at(bad->message, bad->field, mark_for(marks, bad->field));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string(), "<file>", 0, 0);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what(), e.field(), 0, 0);
  }
}

namespace {

std::string real(double v) {
  if (std::isinf(v)) return v > 0 ? ".inf" : "-.inf";
  if (std::isnan(v)) return ".nan";
  return fmt::format("{:.17g}", v);
}

template <class T>
std::string list(const std::vector<T>& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    if constexpr (std::is_floating_point_v<T>) out += real(v[i]);
    else out += fmt::format("{}", v[i]);
  }
  return out + "]";
}

std::string quoted(const std::string& s) {
  YAML::Emitter e;
  e << YAML::DoubleQuoted << s;
  return e.c_str();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  const CampaignConfig& c = cfg.campaign;
  std::string o;
  auto line = [&o](std::string_view indent, std::string_view key, const std::string& value) {
    o += fmt::format("{}{}: {}\n", indent, key, value);
  };
  line("", "master_seed", fmt::format("{}", c.master_seed));
  line("", "trials", fmt::format("{}", c.trials));
  line("", "ladder", list(c.ladder));
  line("", "n_test", fmt::format("{}", c.n_test));
  line("", "threads", fmt::format("{}", c.threads));
  line("", "output_dir", quoted(cfg.output_dir));

  const ProblemSpec& p = c.problem;
  o += "problem:\n";
  line("  ", "loss", to_string(p.loss));
  line("  ", "loss_delta", real(p.loss_delta));
  line("  ", "label", to_string(p.label));
  line("  ", "tau", real(p.tau));
  line("  ", "label_bound", real(p.label_bound));
  line("  ", "label_scale", real(p.label_scale));
  line("  ", "noise", to_string(p.noise));
  line("  ", "lambda", real(p.lambda));
  line("  ", "k", fmt::format("{}", p.k));
  line("  ", "theta_star_norm", real(p.theta_star_norm));

  const SolverConfig& s = c.solver;
  o += "solver:\n";
  line("  ", "max_iters", fmt::format("{}", s.max_iters));
  line("  ", "tol", real(s.tol));
  line("  ", "restarts", fmt::format("{}", s.restarts));
  line("  ", "initial_step", real(s.initial_step));
  line("  ", "shrink", real(s.shrink));
  line("  ", "armijo", real(s.armijo));
  line("  ", "init_scale", real(s.init_scale));

  o += "families:\n";
  for (const FamilySpec& f : c.families) {
    line("  - ", "id", quoted(f.id));
    const std::string_view in = "    ";
    line(in, "kind", to_string(f.kind));
    line(in, "activation", to_string(f.activation.kind()));
    if (f.activation.kind() == ActivationKind::CustomHermite)
      line(in, "hermite_coeffs", list(f.activation.hermite_coeffs()));
    line(in, "gamma_p", real(f.gamma_p));
    line(in, "d_over_p", real(f.d_over_p));
    line(in, "m_over_d", real(f.m_over_d));
    line(in, "d_ladder", list(f.d_ladder));
    line(in, "radius", real(f.radius));
    if (f.constraint) line(in, "constraint", to_string(*f.constraint));
    line(in, "nu", real(f.nu));
    line(in, "entry_law", to_string(f.entry_law));
    line(in, "sigma_rho", real(f.sigma_rho));
    line(in, "op_norm_bound", real(f.op_norm_bound));
    line(in, "covariance", f.cov_mode ? to_string(*f.cov_mode) : "default");
    line(in, "n_cov_factor", real(f.equiv.n_cov_factor));
    line(in, "hermite_order", fmt::format("{}", f.equiv.hermite_order));
    line(in, "quadrature_order", fmt::format("{}", f.equiv.quadrature_order));
    line(in, "jitter_rel", real(f.equiv.jitter_rel));
  }

  const SweepSettings& sw = cfg.sweep;
  o += "sweep:\n";
  line("  ", "enabled", sw.enabled ? "true" : "false");
  line("  ", "s_grid", list(sw.s_grid));
  line("  ", "instances", fmt::format("{}", sw.instances));
  line("  ", "n_test", fmt::format("{}", sw.n_test));
  line("  ", "base_size", fmt::format("{}", sw.base_size));

  const FreeEnergySettings& fe = cfg.free_energy;
  o += "free_energy:\n";
  line("  ", "enabled", fe.enabled ? "true" : "false");
  line("  ", "candidates", fmt::format("{}", fe.candidates));
  line("  ", "alpha", real(fe.alpha));
  line("  ", "beta_grid", list(fe.beta_grid));
  line("  ", "path_beta", real(fe.path_beta));
  line("  ", "path_points", fmt::format("{}", fe.path_points));
  line("  ", "t_offsets", list(fe.t_offsets));
  line("  ", "n_test", fmt::format("{}", fe.n_test));
  line("  ", "base_size", fmt::format("{}", fe.base_size));
  return o;
}

std::string config_hash(const ExperimentConfig& config) {
  // Output location and thread count do not affect results.
  ExperimentConfig canon = config;
  canon.output_dir = "-";
  canon.campaign.threads = 1;
  const std::string text = serialize_config(canon);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

}  // namespace ermu
