#include "etl_cli/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace etl::cli {

namespace {

// Walks one JSON object, checking key names and value types against a path.
class ObjectReader {
 public:
  ObjectReader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  // Rejects keys that were never asked for.
  void finish() const {
    for (const auto& [key, value] : obj_.items())
      if (!seen_.count(key)) throw ConfigError(field(key), "unknown key");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const Json* v = find(key)) out = as_number(*v, field(key));
  }

  void integer(const std::string& key, long& out) {
    if (const Json* v = find(key)) out = as_integer(*v, field(key));
  }

  void integer(const std::string& key, int& out) {
    long tmp = out;
    integer(key, tmp);
    if (tmp < std::numeric_limits<int>::min() || tmp > std::numeric_limits<int>::max())
      throw ConfigError(field(key), "integer out of range");
    out = static_cast<int>(tmp);
  }

  void boolean(const std::string& key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key), "expected true or false");
      out = v->get<bool>();
    }
  }

  std::optional<std::string> string(const std::string& key) {
    const Json* v = find(key);
    if (!v) return std::nullopt;
    if (!v->is_string()) throw ConfigError(field(key), "expected a string");
    return v->get<std::string>();
  }

  void vector(const std::string& key, Vector& out) {
    if (const Json* v = find(key)) out = as_vector(*v, field(key));
  }

  void matrix(const std::string& key, Matrix& out) {
    if (const Json* v = find(key)) out = as_matrix(*v, field(key));
  }

  static double as_number(const Json& v, const std::string& f) {
    if (!v.is_number()) throw ConfigError(f, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError(f, "must be finite");
    return d;
  }

  static long as_integer(const Json& v, const std::string& f) {
    if (v.is_number_integer()) return v.get<long>();
    if (v.is_number_float()) {
      const double d = v.get<double>();
      if (std::isfinite(d) && d == std::floor(d) && std::abs(d) < 9e15) return static_cast<long>(d);
    }
    throw ConfigError(f, "expected an integer");
  }

  static Vector as_vector(const Json& v, const std::string& f) {
    if (!v.is_array()) throw ConfigError(f, "expected an array of numbers");
    Vector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i)
      out(static_cast<Eigen::Index>(i)) = as_number(v[i], f + "[" + std::to_string(i) + "]");
    return out;
  }

  // Row-major nested arrays.
  static Matrix as_matrix(const Json& v, const std::string& f) {
    if (!v.is_array() || v.empty()) throw ConfigError(f, "expected a nonempty array of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    Matrix out(static_cast<Eigen::Index>(v.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::string rf = f + "[" + std::to_string(i) + "]";
      if (!v[i].is_array() || v[i].size() != cols || cols == 0)
        throw ConfigError(rf, "rows must be arrays of equal nonzero length");
      for (std::size_t j = 0; j < cols; ++j)
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            as_number(v[i][j], rf + "[" + std::to_string(j) + "]");
    }
    return out;
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

Json to_json(const Vector& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Json to_json(const Matrix& M) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

void read_servo(const Json& j, ServoParams& p) {
  ObjectReader r(j, "servo");
  r.number("k_theta", p.k_theta);
  r.number("rho", p.rho);
  r.number("J_M", p.J_M);
  r.number("beta_L", p.beta_L);
  r.number("beta_M", p.beta_M);
  r.number("K_T", p.K_T);
  r.number("R_a", p.R_a);
  if (r.find("J_L")) throw ConfigError("servo.J_L", "set the load inertia through nominal_ratio");
  r.finish();
}

void read_noise(const Json& j, Scenario& sc) {
  ObjectReader r(j, "noise");
  r.vector("sigma_w_diag", sc.sigma_w_diag);
  r.number("sigma_w_inflation", sc.sigma_w_inflation);
  if (const Json* z = r.find("sigma_z")) {
    ObjectReader zr(*z, "noise.sigma_z");
    if (auto kind = zr.string("kind")) {
      if (*kind == "sensitivity")
        sc.sigma_z.kind = SigmaZDesign::Kind::Sensitivity;
      else if (*kind == "diagonal")
        sc.sigma_z.kind = SigmaZDesign::Kind::Diagonal;
      else
        throw ConfigError("noise.sigma_z.kind", "expected \"sensitivity\" or \"diagonal\"");
    }
    zr.number("scale", sc.sigma_z.scale);
    zr.number("floor", sc.sigma_z.floor);
    zr.vector("diagonal", sc.sigma_z.diagonal);
    zr.finish();
  }
  r.finish();
}

void read_mpc(const Json& j, MpcConfig& m) {
  ObjectReader r(j, "mpc");
  r.integer("horizon", m.horizon);
  r.matrix("Q", m.Q);
  r.matrix("R", m.R);
  r.matrix("QN", m.QN);
  r.number("nu", m.nu);
  if (auto t = r.string("terminal")) {
    if (*t == "zero")
      m.terminal = TerminalSet::Zero;
    else if (*t == "state_set")
      m.terminal = TerminalSet::StateSet;
    else
      throw ConfigError("mpc.terminal", "expected \"zero\" or \"state_set\"");
  }
  r.boolean("rollout_includes_drift", m.rollout_includes_drift);
  r.integer("max_iterations", m.max_iterations);
  r.number("fd_step", m.fd_step);
  r.finish();
}

void read_experiment(const Json& j, Scenario& sc) {
  ObjectReader r(j, "experiment");
  r.integer("length", sc.experiment_length);
  if (auto s = r.string("stop")) {
    if (*s == "fixed_duration")
      sc.experiment_stop.kind = ExperimentStop::Kind::FixedDuration;
    else if (*s == "trace_threshold")
      sc.experiment_stop.kind = ExperimentStop::Kind::TraceThreshold;
    else
      throw ConfigError("experiment.stop", "expected \"fixed_duration\" or \"trace_threshold\"");
  }
  r.number("trace_threshold", sc.experiment_stop.trace_threshold);
  r.finish();
}

// Line of the key named by the last component of `field`, searched after the
// lines of its parents so nested names such as "mpc.R" resolve correctly.
long locate_field(const std::string& text, const std::string& field) {
  std::size_t pos = 0;
  std::size_t start = 0;
  bool found_any = false;
  while (start <= field.size()) {
    std::size_t dot = field.find('.', start);
    std::string part = field.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    part = part.substr(0, part.find('['));
    if (!part.empty()) {
      const std::size_t hit = text.find("\"" + part + "\"", pos);
      if (hit == std::string::npos) break;
      pos = hit;
      found_any = true;
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (!found_any) return 0;
  return 1 + static_cast<long>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

}  // namespace

Scenario scenario_from_json(const Json& doc) {
  Scenario sc = servo_study_scenario();
  ObjectReader r(doc, "");
  r.integer("total_steps", sc.total_steps);
  r.number("Ts", sc.Ts);
  if (const Json* s = r.find("servo")) read_servo(*s, sc.servo);
  r.number("nominal_ratio", sc.nominal_ratio);
  if (const Json* rr = r.find("ratio_range")) {
    const Vector range = ObjectReader::as_vector(*rr, "ratio_range");
    if (range.size() != 2) throw ConfigError("ratio_range", "expected [low, high]");
    sc.ratio_low = range(0);
    sc.ratio_high = range(1);
  }
  if (const Json* cs = r.find("change_schedule")) {
    if (!cs->is_array()) throw ConfigError("change_schedule", "expected an array");
    sc.change_schedule.clear();
    for (std::size_t i = 0; i < cs->size(); ++i) {
      ObjectReader cr((*cs)[i], "change_schedule[" + std::to_string(i) + "]");
      ChangePoint c;
      if (!cr.find("step") || !cr.find("ratio")) throw ConfigError(cr.field("step"), "entries need step and ratio");
      cr.integer("step", c.step);
      cr.number("ratio", c.ratio);
      cr.finish();
      sc.change_schedule.push_back(c);
    }
  }
  r.vector("x0", sc.x0);
  if (const Json* n = r.find("noise")) read_noise(*n, sc);
  if (const Json* f = r.find("filter")) {
    ObjectReader fr(*f, "filter");
    fr.number("p0_scale", sc.p0_scale);
    fr.finish();
  }
  if (const Json* t = r.find("trigger")) {
    ObjectReader tr(*t, "trigger");
    tr.number("alpha", sc.alpha);
    tr.finish();
  }
  if (const Json* m = r.find("mpc")) read_mpc(*m, sc.mpc);
  if (const Json* c = r.find("constraints")) {
    ObjectReader cr(*c, "constraints");
    cr.number("input_limit", sc.input_limit);
    cr.number("torsion_limit", sc.torsion_limit);
    cr.finish();
  }
  if (const Json* e = r.find("experiment")) read_experiment(*e, sc);
  if (auto p = r.string("policy")) {
    auto policy = parse_policy(*p);
    if (!policy) throw ConfigError("policy", "expected etl, permanent or never");
    sc.policy = *policy;
  }
  if (const Json* s = r.find("seed")) {
    if (!s->is_number_unsigned() && !(s->is_number_integer() && s->get<long>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    sc.seed = s->get<std::uint64_t>();
  }
  r.finish();
  sc.servo.J_L = sc.nominal_ratio * sc.servo.J_M;
  return sc;
}

Json scenario_to_json(const Scenario& sc) {
  Json j;
  j["total_steps"] = sc.total_steps;
  j["Ts"] = sc.Ts;
  j["servo"] = {{"k_theta", sc.servo.k_theta}, {"rho", sc.servo.rho},     {"J_M", sc.servo.J_M},
                {"beta_L", sc.servo.beta_L},   {"beta_M", sc.servo.beta_M}, {"K_T", sc.servo.K_T},
                {"R_a", sc.servo.R_a}};
  j["nominal_ratio"] = sc.nominal_ratio;
  j["ratio_range"] = {sc.ratio_low, sc.ratio_high};
  j["change_schedule"] = Json::array();
  for (const ChangePoint& c : sc.change_schedule) j["change_schedule"].push_back({{"step", c.step}, {"ratio", c.ratio}});
  j["x0"] = to_json(sc.x0.size() ? sc.x0 : Vector(Vector::Zero(4)));

  Json sz;
  sz["kind"] = sc.sigma_z.kind == SigmaZDesign::Kind::Sensitivity ? "sensitivity" : "diagonal";
  sz["scale"] = sc.sigma_z.scale;
  sz["floor"] = sc.sigma_z.floor;
  if (sc.sigma_z.diagonal.size()) sz["diagonal"] = to_json(sc.sigma_z.diagonal);
  j["noise"] = {{"sigma_w_diag", to_json(sc.sigma_w_diag)},
                {"sigma_w_inflation", sc.sigma_w_inflation},
                {"sigma_z", sz}};
  j["filter"] = {{"p0_scale", sc.p0_scale}};
  j["trigger"] = {{"alpha", sc.alpha}};
  j["mpc"] = {{"horizon", sc.mpc.horizon},
              {"Q", to_json(sc.mpc.Q)},
              {"R", to_json(sc.mpc.R)},
              {"QN", to_json(sc.mpc.QN)},
              {"nu", sc.mpc.nu},
              {"terminal", sc.mpc.terminal == TerminalSet::Zero ? "zero" : "state_set"},
              {"rollout_includes_drift", sc.mpc.rollout_includes_drift},
              {"max_iterations", sc.mpc.max_iterations},
              {"fd_step", sc.mpc.fd_step}};
  j["constraints"] = {{"input_limit", sc.input_limit}, {"torsion_limit", sc.torsion_limit}};
  j["experiment"] = {
      {"length", sc.experiment_length},
      {"stop", sc.experiment_stop.kind == ExperimentStop::Kind::FixedDuration ? "fixed_duration" : "trace_threshold"},
      {"trace_threshold", sc.experiment_stop.trace_threshold}};
  j["policy"] = to_string(sc.policy);
  j["seed"] = sc.seed;
  return j;
}

Scenario parse_scenario_text(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    const auto upto = std::min<std::size_t>(e.byte, text.size());
    const long line = 1 + static_cast<long>(std::count(text.begin(), text.begin() + static_cast<long>(upto), '\n'));
    throw ScenarioFileError("<syntax>", e.what(), line);
  }
  try {
    Scenario sc = scenario_from_json(doc);
    sc.validate();
    return sc;
  } catch (const ScenarioFileError&) {
    throw;
  } catch (const ConfigError& e) {
    const std::string& f = e.field();
    const std::string msg = std::string(e.what()).substr(f.size() + 2);
    throw ScenarioFileError(f, msg, locate_field(text, f));
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioFileError("<file>", "cannot open " + path.string(), 0);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str());
}

}  // namespace etl::cli
