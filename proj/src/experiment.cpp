#include "rhlearn/experiment.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace rhlearn {

namespace {

struct KeyValue {
  std::string value;
  bool used = false;
};

using KeyMap = std::map<std::string, KeyValue>;

KeyMap tokenize(const std::string& text) {
  KeyMap keys;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty key");
    if (keys.count(key)) throw ParseError("duplicate key '" + key + "'");
    keys[key] = {value, false};
  }
  return keys;
}

double parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ParseError("key '" + key + "': '" + value + "' is not a number");
  }
}

Vector parse_vector(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  std::vector<double> entries;
  std::string tok;
  while (in >> tok) entries.push_back(parse_number(key, tok));
  Vector v(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) v(i) = entries[i];
  return v;
}

class ConfigReader {
 public:
  explicit ConfigReader(KeyMap keys) : keys_(std::move(keys)) {}

  bool has(const std::string& key) const { return keys_.count(key) > 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    auto it = keys_.find(key);
    if (it == keys_.end()) return fallback;
    it->second.used = true;
    return it->second.value;
  }

  double get_number(const std::string& key, double fallback) {
    auto it = keys_.find(key);
    if (it == keys_.end()) return fallback;
    it->second.used = true;
    return parse_number(key, it->second.value);
  }

  int get_int(const std::string& key, int fallback) {
    const double v = get_number(key, fallback);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) throw ParseError("key '" + key + "' must be an integer");
    return i;
  }

  Vector get_vector(const std::string& key, const Vector& fallback) {
    auto it = keys_.find(key);
    if (it == keys_.end()) return fallback;
    it->second.used = true;
    return parse_vector(key, it->second.value);
  }

  void reject_unknown() const {
    for (const auto& [key, kv] : keys_) {
      if (!kv.used) throw ParseError("unknown key '" + key + "'");
    }
  }

 private:
  KeyMap keys_;
};

void require_positive(double v, const std::string& key) {
  if (!(v > 0.0)) throw ValidationError("key '" + key + "' must be positive");
}

Matrix parse_matrix(ConfigReader& reader, const std::string& key, int rows, int cols) {
  const Vector flat = reader.get_vector(key, Vector());
  if (flat.size() != rows * cols) {
    throw ValidationError("key '" + key + "' needs " + std::to_string(rows * cols) +
                          " row-major entries");
  }
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = flat(i * cols + j);
  }
  return m;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ConfigReader reader(tokenize(text));
  ExperimentConfig cfg;

  cfg.plant_kind = reader.get_string("plant.kind", cfg.plant_kind);
  if (cfg.plant_kind == kPlantRobotArm) {
    // Benchmark defaults for the nonlinear run.
    cfg.m = 2;
    cfg.window = 10;
    cfg.horizon = 15;
    cfg.q_scale = 10.0;
    cfg.r_scale = 100.0;
    cfg.qn_scale = 10.0;
    cfg.eps_c1 = 10.0;
    cfg.steps = 61;
  } else if (cfg.plant_kind != kPlantLinearBenchmark && cfg.plant_kind != "custom") {
    throw ValidationError("key 'plant.kind': unknown plant '" + cfg.plant_kind + "'");
  }

  if (cfg.plant_kind == "custom") {
    const int n = reader.get_int("plant.state_dim", 0);
    const int q = reader.get_int("plant.input_dim", 0);
    const int p = reader.get_int("plant.output_dim", 0);
    if (n < 1) throw ValidationError("key 'plant.state_dim' must be positive");
    if (q < 1) throw ValidationError("key 'plant.input_dim' must be positive");
    if (p < 1) throw ValidationError("key 'plant.output_dim' must be positive");
    cfg.F = parse_matrix(reader, "plant.F", n, n);
    cfg.G = parse_matrix(reader, "plant.G", n, q);
    cfg.H = parse_matrix(reader, "plant.H", p, n);
    cfg.initial_state = reader.get_vector("plant.initial_state", Vector::Zero(n));
    if (cfg.initial_state.size() != n) {
      throw ValidationError("key 'plant.initial_state' must have plant.state_dim entries");
    }
  } else {
    cfg.initial_state = reader.get_vector("plant.initial_state", Vector());
  }

  cfg.m = reader.get_int("lift.m", cfg.m);
  if (cfg.m < 1) throw ValidationError("key 'lift.m' must be at least 1");

  cfg.window = reader.get_int("est.window", cfg.window);
  if (cfg.window < 1) throw ValidationError("key 'est.window' must be at least 1");
  cfg.lambda_max = reader.get_number("est.lambda_max", cfg.lambda_max);
  if (cfg.lambda_max <= 0.0 || cfg.lambda_max >= 1.0) {
    throw ValidationError("key 'est.lambda_max' must lie in (0, 1)");
  }

  cfg.horizon = reader.get_int("rhc.N", cfg.horizon);
  if (cfg.horizon < 1) throw ValidationError("key 'rhc.N' must be at least 1");
  if (cfg.horizon < cfg.m) throw ValidationError("key 'rhc.N' must be at least lift.m");
  cfg.q_scale = reader.get_number("rhc.q", cfg.q_scale);
  require_positive(cfg.q_scale, "rhc.q");
  cfg.r_scale = reader.get_number("rhc.r", cfg.r_scale);
  require_positive(cfg.r_scale, "rhc.r");
  cfg.qn_scale = reader.get_number("rhc.qn", cfg.qn_scale);
  require_positive(cfg.qn_scale, "rhc.qn");
  cfg.alpha = reader.get_number("rhc.alpha", cfg.alpha);
  require_positive(cfg.alpha, "rhc.alpha");
  cfg.eps_c0 = reader.get_number("rhc.eps_c0", cfg.eps_c0);
  require_positive(cfg.eps_c0, "rhc.eps_c0");
  cfg.eps_c1 = reader.get_number("rhc.eps_c1", cfg.eps_c1);
  if (cfg.eps_c1 < 0.0) throw ValidationError("key 'rhc.eps_c1' must be nonnegative");

  cfg.steps = reader.get_int("run.steps", cfg.steps);
  if (cfg.steps < 1) throw ValidationError("key 'run.steps' must be at least 1");
  cfg.settle_tol = reader.get_number("run.settle_tol", cfg.settle_tol);
  require_positive(cfg.settle_tol, "run.settle_tol");

  cfg.theta0_kind = reader.get_string("init.theta", cfg.theta0_kind);
  if (cfg.theta0_kind != "canonical" && cfg.theta0_kind != "explicit") {
    throw ValidationError("key 'init.theta' must be 'canonical' or 'explicit'");
  }
  cfg.theta0_scale = reader.get_number("init.scale", cfg.theta0_scale);
  require_positive(cfg.theta0_scale, "init.scale");
  cfg.theta0_values = reader.get_vector("init.values", cfg.theta0_values);
  if (cfg.theta0_kind == "explicit" && cfg.theta0_values.size() == 0) {
    throw ValidationError("key 'init.values' is required when init.theta = explicit");
  }

  cfg.output_path = reader.get_string("output.path", cfg.output_path);

  reader.reject_unknown();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string format_vector(const Vector& v) {
  std::string out;
  for (long i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += format_double(v(i));
  }
  return out;
}

std::string format_matrix(const Matrix& m) {
  std::string out;
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) {
      if (i || j) out += ' ';
      out += format_double(m(i, j));
    }
  }
  return out;
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "plant.kind = " << cfg.plant_kind << "\n";
  if (cfg.plant_kind == "custom") {
    out << "plant.state_dim = " << cfg.F.rows() << "\n";
    out << "plant.input_dim = " << cfg.G.cols() << "\n";
    out << "plant.output_dim = " << cfg.H.rows() << "\n";
    out << "plant.F = " << format_matrix(cfg.F) << "\n";
    out << "plant.G = " << format_matrix(cfg.G) << "\n";
    out << "plant.H = " << format_matrix(cfg.H) << "\n";
  }
  if (cfg.initial_state.size() > 0) {
    out << "plant.initial_state = " << format_vector(cfg.initial_state) << "\n";
  }
  out << "lift.m = " << cfg.m << "\n";
  out << "est.window = " << cfg.window << "\n";
  out << "est.lambda_max = " << format_double(cfg.lambda_max) << "\n";
  out << "rhc.N = " << cfg.horizon << "\n";
  out << "rhc.q = " << format_double(cfg.q_scale) << "\n";
  out << "rhc.r = " << format_double(cfg.r_scale) << "\n";
  out << "rhc.qn = " << format_double(cfg.qn_scale) << "\n";
  out << "rhc.alpha = " << format_double(cfg.alpha) << "\n";
  out << "rhc.eps_c0 = " << format_double(cfg.eps_c0) << "\n";
  out << "rhc.eps_c1 = " << format_double(cfg.eps_c1) << "\n";
  out << "run.steps = " << cfg.steps << "\n";
  out << "run.settle_tol = " << format_double(cfg.settle_tol) << "\n";
  out << "init.theta = " << cfg.theta0_kind << "\n";
  out << "init.scale = " << format_double(cfg.theta0_scale) << "\n";
  if (cfg.theta0_values.size() > 0) {
    out << "init.values = " << format_vector(cfg.theta0_values) << "\n";
  }
  if (!cfg.output_path.empty()) {
    out << "output.path = " << cfg.output_path << "\n";
  }
  return out.str();
}

std::string csv_header(int output_dim, int input_dim) {
  std::string h = "k";
  for (int i = 1; i <= output_dim; ++i) h += ",y_" + std::to_string(i);
  for (int i = 1; i <= input_dim; ++i) h += ",v_" + std::to_string(i);
  h += ",eps,gamma_over_eps,v1_value,est_residual,lambda_used,controllable";
  return h;
}

std::string csv_row(const StepRecord& rec) {
  std::string row = std::to_string(rec.k);
  for (long i = 0; i < rec.y.size(); ++i) row += "," + format_double(rec.y(i));
  for (long i = 0; i < rec.v.size(); ++i) row += "," + format_double(rec.v(i));
  row += "," + format_double(rec.eps);
  row += "," + format_double(rec.gamma_over_eps);
  row += "," + format_double(rec.v1_value);
  row += "," + format_double(rec.est_residual);
  row += "," + format_double(rec.lambda_used);
  row += rec.controllable ? ",1" : ",0";
  return row;
}

ClosedLoopSetup build_setup(const ExperimentConfig& cfg) {
  ClosedLoopSetup setup;
  if (cfg.plant_kind == "custom") {
    setup.plant = std::make_unique<LinearPlant>(cfg.F, cfg.G, cfg.H, cfg.initial_state);
  } else {
    setup.plant = make_builtin_plant(cfg.plant_kind, cfg.initial_state);
  }

  setup.lift = LiftingConfig{cfg.m, setup.plant->output_dim(), setup.plant->input_dim()};
  setup.lift.validate();

  setup.estimator.state_dim = setup.lift.lifted_state_dim();
  setup.estimator.input_dim = setup.lift.lifted_input_dim();
  setup.estimator.window = cfg.window;
  setup.estimator.lambda_max = cfg.lambda_max;
  if (cfg.theta0_kind == "explicit") {
    setup.estimator.theta0 = cfg.theta0_values;
  } else {
    setup.estimator.theta0 =
        canonical_theta(setup.estimator.state_dim, setup.estimator.input_dim, cfg.theta0_scale);
  }

  const int aug = setup.lift.augmented_dim();
  setup.rhc.horizon = cfg.horizon;
  setup.rhc.Q = cfg.q_scale * Matrix::Identity(aug, aug);
  setup.rhc.Q_N = cfg.qn_scale * Matrix::Identity(aug, aug);
  setup.rhc.R = cfg.r_scale * Matrix::Identity(setup.lift.input_dim, setup.lift.input_dim);
  setup.rhc.alpha = cfg.alpha;
  setup.rhc.epsilon = {cfg.eps_c0, cfg.eps_c1};
  setup.rhc.validate(aug, setup.lift.input_dim);

  setup.steps = cfg.steps;
  return setup;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const std::string& out_dir,
                                const std::string& stem) {
  ClosedLoopSetup setup = build_setup(cfg);
  Estimator est(setup.estimator);

  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const std::string csv_name = cfg.output_path.empty() ? stem + ".csv" : cfg.output_path;
  const fs::path csv_path = fs::path(out_dir) / csv_name;
  const fs::path summary_path =
      fs::path(out_dir) / (fs::path(csv_name).stem().string() + "_summary.txt");

  ExperimentResult result;
  result.csv_path = csv_path.string();
  result.summary_path = summary_path.string();

  std::ofstream csv(csv_path);
  if (!csv) {
    result.exit_code = 3;
    result.error = "cannot open output file '" + csv_path.string() + "'";
    return result;
  }
  csv << csv_header(setup.plant->output_dim(), setup.plant->input_dim()) << "\n";

  TrajectoryLog log;
  int completed = 0;
  try {
    log = run_closed_loop(*setup.plant, setup.lift, est, setup.rhc, setup.steps,
                          [&](const StepRecord& rec) {
                            csv << csv_row(rec) << "\n";
                            ++completed;
                          });
  } catch (const Error& e) {
    result.exit_code = 3;
    result.error = e.what();
  }
  result.steps_completed = completed;
  csv.close();

  std::ofstream summary(summary_path);
  if (result.exit_code == 0 && !log.records.empty()) {
    const ConvergenceMetrics m = convergence_metrics(log, cfg.settle_tol);
    result.metrics = m;
    summary << "steps = " << result.steps_completed << "\n";
    summary << "peak = " << format_double(m.peak) << "\n";
    summary << "tail_max = " << format_double(m.tail_max) << "\n";
    summary << "settle_tol = " << format_double(cfg.settle_tol) << "\n";
    summary << "first_k_below = " << m.first_k_below << "\n";
  } else {
    summary << "failed = 1\n";
    summary << "error = " << result.error << "\n";
  }
  return result;
}

}  // namespace rhlearn
