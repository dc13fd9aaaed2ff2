#include "vlx/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "vlx/errors.hpp"

namespace vlx {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& message) { throw InvalidArgument("config: " + message); }

std::string quoted(const std::string& key) { return "\"" + key + "\""; }

// ---------------------------------------------------------------------------
// Typed, path-labeled accessors over a parsed JSON object.  Every failure
// names the offending key so the error message identifies the precondition.
// ---------------------------------------------------------------------------

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) known = known || item.key() == key;
    if (!known) fail("unknown key " + quoted(item.key()) + " in " + path);
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double get_double(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number()) fail(path + "." + key + " must be a number");
  return v->get<double>();
}

int get_int(const json& obj, const std::string& path, const char* key, int fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_number_integer()) fail(path + "." + key + " must be an integer");
  return v->get<int>();
}

bool get_bool(const json& obj, const std::string& path, const char* key, bool fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_boolean()) fail(path + "." + key + " must be true or false");
  return v->get<bool>();
}

std::vector<double> number_array(const json& v, const std::string& where) {
  if (!v.is_array()) fail(where + " must be an array of numbers");
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& entry : v) {
    if (!entry.is_number()) fail(where + " must be an array of numbers");
    out.push_back(entry.get<double>());
  }
  return out;
}

std::vector<double> get_number_array(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) return {};
  return number_array(*v, path + "." + key);
}

// A finite cosine/sine table f(s) = sum_k c[k] cos(2 pi k s) + s[k] sin(2 pi k s).
struct TrigTable {
  std::vector<double> cos_coef, sin_coef;
  double operator()(double s) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < cos_coef.size(); ++k)
      acc += cos_coef[k] * std::cos(2.0 * std::numbers::pi * static_cast<double>(k) * s);
    for (std::size_t k = 0; k < sin_coef.size(); ++k)
      acc += sin_coef[k] * std::sin(2.0 * std::numbers::pi * static_cast<double>(k) * s);
    return acc;
  }
};

TrigTable parse_trig(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path + " must be an object with \"cos\"/\"sin\" arrays");
  reject_unknown_keys(obj, path, {"cos", "sin"});
  TrigTable table{get_number_array(obj, path, "cos"), get_number_array(obj, path, "sin")};
  if (!table.sin_coef.empty() && table.sin_coef[0] != 0.0)
    fail(path + ".sin entry 0 multiplies sin(0) = 0; set it to 0");
  return table;
}

// ---------------------------------------------------------------------------
// Curve descriptions
// ---------------------------------------------------------------------------

CurveInput parse_curve(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail(path + " must be an object");
  CurveInput input;
  input.n_modes = get_int(obj, path, "n_modes", 64);
  input.rho0 = get_double(obj, path, "rho0", 0.0);

  if (const json* shape = find(obj, "shape")) {
    if (!shape->is_string()) fail(path + ".shape must be a string");
    const std::string name = shape->get<std::string>();
    if (name == "circle") {
      reject_unknown_keys(obj, path, {"shape", "n_modes", "rho0"});
      input.coefficients = circle_coefficients();
    } else if (name == "ellipse") {
      reject_unknown_keys(obj, path, {"shape", "semi_axis_x", "semi_axis_y", "n_modes", "rho0"});
      const json* a = find(obj, "semi_axis_x");
      const json* b = find(obj, "semi_axis_y");
      if (!a || !b || !a->is_number() || !b->is_number())
        fail(path + ": shape \"ellipse\" needs numbers semi_axis_x and semi_axis_y");
      input.coefficients = ellipse_coefficients(a->get<double>(), b->get<double>());
    } else if (name == "perturbed_circle") {
      reject_unknown_keys(obj, path, {"shape", "amplitude", "wavenumber", "n_modes", "rho0"});
      const json* amp = find(obj, "amplitude");
      const json* wav = find(obj, "wavenumber");
      if (!amp || !amp->is_number() || !wav || !wav->is_number_integer())
        fail(path +
             ": shape \"perturbed_circle\" needs a number amplitude and an integer wavenumber");
      input.coefficients =
          perturbed_circle_coefficients(amp->get<double>(), wav->get<int>());
    } else {
      fail(path + ".shape must be \"circle\", \"ellipse\", or \"perturbed_circle\"");
    }
    return input;
  }

  reject_unknown_keys(obj, path, {"x_cos", "x_sin", "y_cos", "y_sin", "n_modes", "rho0"});
  input.coefficients.x_cos = get_number_array(obj, path, "x_cos");
  input.coefficients.x_sin = get_number_array(obj, path, "x_sin");
  input.coefficients.y_cos = get_number_array(obj, path, "y_cos");
  input.coefficients.y_sin = get_number_array(obj, path, "y_sin");
  const auto& c = input.coefficients;
  if (c.x_cos.empty() && c.x_sin.empty() && c.y_cos.empty() && c.y_sin.empty())
    fail(path + " needs either \"shape\" or coefficient tables");
  if (!c.x_sin.empty() && c.x_sin[0] != 0.0) fail(path + ".x_sin entry 0 must be 0");
  if (!c.y_sin.empty() && c.y_sin[0] != 0.0) fail(path + ".y_sin entry 0 must be 0");
  return input;
}

json parse_document(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    fail(std::string("not valid JSON (") + e.what() + ")");
  }
}

std::string escape_json(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (unsigned char ch : s) {
    switch (ch) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      case '\b': out += "\\b"; break;
      case '\f': out += "\\f"; break;
      default:
        if (ch < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", ch);
          out += buf;
        } else {
          out += static_cast<char>(ch);
        }
    }
  }
  return out;
}

std::string render_number(double value) {
  if (!std::isfinite(value)) return "null";  // JSON has no infinities
  return format_float(value);
}

}  // namespace

// ---------------------------------------------------------------------------
// Formatting and hashing
// ---------------------------------------------------------------------------

std::string format_float(double x) {
  char buf[32];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char ch : bytes) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string config_hash(const std::string& config_text) {
  const std::string canonical = parse_document(config_text).dump();
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(canonical)));
  return std::string(buf, 16);
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

std::string to_csv(const CsvTable& table, const std::string& hash) {
  if (table.columns.empty()) throw InvalidArgument("csv table needs at least one column");
  std::string out = "# config_hash=" + hash + "\n";
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    if (i > 0) out += ',';
    out += table.columns[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size())
      throw InvalidArgument("csv row has " + std::to_string(row.size()) + " cells, header names " +
                            std::to_string(table.columns.size()) + " columns");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) out += ',';
      out += format_float(row[i]);
    }
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON documents
// ---------------------------------------------------------------------------

void JsonDoc::put(const std::string& key, double value) {
  members_.emplace_back(key, render_number(value));
}
void JsonDoc::put(const std::string& key, int value) {
  members_.emplace_back(key, std::to_string(value));
}
void JsonDoc::put(const std::string& key, std::size_t value) {
  members_.emplace_back(key, std::to_string(value));
}
void JsonDoc::put(const std::string& key, bool value) {
  members_.emplace_back(key, value ? "true" : "false");
}
void JsonDoc::put(const std::string& key, const std::string& value) {
  members_.emplace_back(key, "\"" + escape_json(value) + "\"");
}
void JsonDoc::put(const std::string& key, const char* value) { put(key, std::string(value)); }
void JsonDoc::put(const std::string& key, const std::vector<double>& values) {
  std::vector<std::string> items;
  items.reserve(values.size());
  for (double v : values) items.push_back(render_number(v));
  members_.emplace_back(key, array(items));
}
void JsonDoc::put(const std::string& key, const std::vector<std::string>& values) {
  std::vector<std::string> items;
  items.reserve(values.size());
  for (const auto& v : values) items.push_back("\"" + escape_json(v) + "\"");
  members_.emplace_back(key, array(items));
}
void JsonDoc::put_raw(const std::string& key, std::string rendered_json) {
  members_.emplace_back(key, std::move(rendered_json));
}

std::string JsonDoc::array(const std::vector<std::string>& rendered_items) {
  std::string out = "[";
  for (std::size_t i = 0; i < rendered_items.size(); ++i) {
    if (i > 0) out += ", ";
    out += rendered_items[i];
  }
  out += ']';
  return out;
}

std::string JsonDoc::compact() const {
  std::string out = "{";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    if (i > 0) out += ", ";
    out += "\"" + escape_json(members_[i].first) + "\": " + members_[i].second;
  }
  out += '}';
  return out;
}

std::string JsonDoc::str() const {
  std::string out = "{\n";
  for (std::size_t i = 0; i < members_.size(); ++i) {
    out += "  \"" + escape_json(members_[i].first) + "\": " + members_[i].second;
    out += i + 1 < members_.size() ? ",\n" : "\n";
  }
  out += "}\n";
  return out;
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path.string() + " for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (!in.good() && !in.eof())
    throw InvalidArgument("failed while reading " + path.string());
  return std::move(buffer).str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot open " + path.string() + " for writing");
  out << content;
  out.flush();
  if (!out.good()) throw InvalidArgument("failed while writing " + path.string());
}

// ---------------------------------------------------------------------------
// Configuration documents
// ---------------------------------------------------------------------------

CurveInput curve_from_json(const std::string& json_text) {
  return parse_curve(parse_document(json_text), "curve");
}

namespace {

EvolutionConfig parse_evolution(const json& root) {
  EvolutionConfig cfg;
  if (const json* obj = find(root, "evolution")) {
    const std::string path = "evolution";
    if (!obj->is_object()) fail(path + " must be an object");
    reject_unknown_keys(*obj, path,
                        {"t_end", "dt", "cfl_safety", "filter_threshold", "resolution_constant",
                         "max_velocity_cap", "residual_cap", "checkpoint_stride",
                         "project_admissibility"});
    cfg.t_end = get_double(*obj, path, "t_end", cfg.t_end);
    cfg.dt = get_double(*obj, path, "dt", cfg.dt);
    cfg.cfl_safety = get_double(*obj, path, "cfl_safety", cfg.cfl_safety);
    cfg.filter_threshold = get_double(*obj, path, "filter_threshold", cfg.filter_threshold);
    cfg.resolution_constant =
        get_double(*obj, path, "resolution_constant", cfg.resolution_constant);
    cfg.max_velocity_cap = get_double(*obj, path, "max_velocity_cap", cfg.max_velocity_cap);
    cfg.residual_cap = get_double(*obj, path, "residual_cap", cfg.residual_cap);
    cfg.checkpoint_stride = get_int(*obj, path, "checkpoint_stride", cfg.checkpoint_stride);
    cfg.project_admissibility =
        get_bool(*obj, path, "project_admissibility", cfg.project_admissibility);
    if (cfg.t_end < 0.0) fail("evolution.t_end must be nonnegative");
    if (cfg.dt < 0.0) fail("evolution.dt must be nonnegative (0 selects the automatic step)");
    if (cfg.cfl_safety <= 0.0) fail("evolution.cfl_safety must be positive");
    if (cfg.checkpoint_stride < 0) fail("evolution.checkpoint_stride must be nonnegative");
  }
  return cfg;
}

KernelEvalConfig parse_kernel(const json& root) {
  KernelEvalConfig cfg;
  if (const json* obj = find(root, "kernel")) {
    const std::string path = "kernel";
    if (!obj->is_object()) fail(path + " must be an object");
    reject_unknown_keys(*obj, path, {"pv_rule", "near_coincidence_factor", "threads"});
    if (const json* rule = find(*obj, "pv_rule")) {
      if (!rule->is_string()) fail("kernel.pv_rule must be a string");
      const std::string name = rule->get<std::string>();
      if (name == "alternate_point")
        cfg.pv_rule = PvRule::AlternatePoint;
      else if (name == "skip_diagonal")
        cfg.pv_rule = PvRule::SkipDiagonal;
      else
        fail("kernel.pv_rule must be \"alternate_point\" or \"skip_diagonal\"");
    }
    cfg.near_coincidence_factor =
        get_double(*obj, path, "near_coincidence_factor", cfg.near_coincidence_factor);
    cfg.threads = get_int(*obj, path, "threads", cfg.threads);
    if (cfg.near_coincidence_factor <= 0.0) fail("kernel.near_coincidence_factor must be positive");
    if (cfg.threads < 0) fail("kernel.threads must be nonnegative (0 selects all cores)");
  }
  return cfg;
}

ProbeConfig parse_probe(const json& root) {
  ProbeConfig cfg;
  if (const json* obj = find(root, "probe")) {
    const std::string path = "probe";
    if (!obj->is_object()) fail(path + " must be an object");
    reject_unknown_keys(*obj, path, {"rho", "n_samples", "seed"});
    cfg.rho = get_double(*obj, path, "rho", cfg.rho);
    cfg.n_samples = get_int(*obj, path, "n_samples", cfg.n_samples);
    if (const json* seed = find(*obj, "seed")) {
      if (!seed->is_number_integer() || seed->get<long long>() < 0)
        fail("probe.seed must be a nonnegative integer");
      cfg.seed = seed->get<unsigned long long>();
    }
    if (cfg.rho <= 0.0) fail("probe.rho must be positive");
    if (cfg.n_samples <= 0) fail("probe.n_samples must be positive");
  }
  return cfg;
}

std::vector<double> parse_epsilons(const json& root) {
  const json* scalar = find(root, "epsilon");
  const json* list = find(root, "epsilons");
  if (scalar && list) fail("give either \"epsilon\" or \"epsilons\", not both");
  std::vector<double> eps;
  if (scalar) {
    if (!scalar->is_number()) fail("epsilon must be a number");
    eps.push_back(scalar->get<double>());
  } else if (list) {
    eps = number_array(*list, "epsilons");
    if (eps.empty()) fail("epsilons must not be empty");
  }
  for (double e : eps)
    if (e <= 0.0) fail("every epsilon must be positive");
  for (std::size_t i = 1; i < eps.size(); ++i)
    if (eps[i] >= eps[i - 1]) fail("epsilons must be strictly decreasing");
  return eps;
}

}  // namespace

RunSetup parse_run_config(const std::string& json_text) {
  const json root = parse_document(json_text);
  if (!root.is_object()) fail("the document must be a JSON object");
  reject_unknown_keys(root, "the document",
                      {"curve", "epsilon", "epsilons", "n_points", "n_layers", "aggregate",
                       "eta0", "comparison_times", "evolution", "kernel", "probe"});

  const json* curve_obj = find(root, "curve");
  if (!curve_obj) fail("\"curve\" is required");
  const CurveInput curve_input = parse_curve(*curve_obj, "curve");
  CurveSpec curve =
      reparametrize_arclength(curve_input.coefficients, curve_input.n_modes, curve_input.rho0);

  ExperimentSpec spec{.curve = std::move(curve)};
  spec.n_points = get_int(root, "the document", "n_points", spec.n_points);
  spec.n_layers = get_int(root, "the document", "n_layers", spec.n_layers);
  spec.epsilons = parse_epsilons(root);

  const json* aggregate = find(root, "aggregate");
  if (!aggregate) fail("\"aggregate\" is required (the total sheet density)");
  spec.aggregate = parse_trig(*aggregate, "aggregate");
  if (const json* eta0 = find(root, "eta0")) spec.eta0 = parse_trig(*eta0, "eta0");

  if (const json* times = find(root, "comparison_times")) {
    spec.comparison_times = number_array(*times, "comparison_times");
    if (spec.comparison_times.empty()) fail("comparison_times must not be empty");
    for (double t : spec.comparison_times)
      if (t <= 0.0) fail("every comparison time must be positive");
    for (std::size_t i = 1; i < spec.comparison_times.size(); ++i)
      if (spec.comparison_times[i] <= spec.comparison_times[i - 1])
        fail("comparison_times must be strictly increasing");
  } else {
    spec.comparison_times = {0.05};
  }

  spec.evolution = parse_evolution(root);
  spec.evolution.kernel = parse_kernel(root);

  return RunSetup{std::move(spec), parse_probe(root), config_hash(json_text)};
}

}  // namespace vlx
