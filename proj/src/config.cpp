#include "mindex/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

#include "mindex/random.hpp"

namespace mindex {

namespace {

enum class Type { integer, number, string, boolean, int_list, num_list, str_list };

struct KeySpec {
  std::string key;
  Type type;
  Json fallback;
  bool nullable = false;
  double lo = -std::numeric_limits<double>::infinity();
  bool lo_open = false;
  double hi = std::numeric_limits<double>::infinity();
  std::vector<std::string> choices;
};

const std::vector<std::string> kActivations{"locally_quadratic", "quadratic", "cosine", "cubed_smooth"};
const std::vector<std::string> kLosses{"square", "huber", "pseudo_huber", "l1"};
const std::vector<std::string> kModes{"algorithm1", "adam"};

KeySpec integer(std::string key, Json v, double lo, bool nullable = false) {
  return {std::move(key), Type::integer, std::move(v), nullable, lo, false, 9007199254740992.0, {}};
}
KeySpec positive(std::string key, Json v, bool nullable = false) {
  return {std::move(key), Type::number, std::move(v), nullable, 0.0, true, std::numeric_limits<double>::infinity(), {}};
}
KeySpec number(std::string key, Json v, double lo, double hi = std::numeric_limits<double>::infinity()) {
  return {std::move(key), Type::number, std::move(v), false, lo, false, hi, {}};
}
KeySpec choice(std::string key, std::string v, std::vector<std::string> choices) {
  return {std::move(key), Type::string, Json(std::move(v)), false, 0, false, 0, std::move(choices)};
}
KeySpec text(std::string key, std::string v) {
  return {std::move(key), Type::string, Json(std::move(v)), false, 0, false, 0, {}};
}
KeySpec list(std::string key, Type type, Json v, double lo, bool lo_open = false) {
  return {std::move(key), type, std::move(v), false, lo, lo_open, std::numeric_limits<double>::infinity(), {}};
}

const std::vector<KeySpec>& schema() {
  static const std::vector<KeySpec> specs = {
      integer("seed", 0, 0),
      text("output_dir", "out"),
      choice("preset", "desk", {"desk", "full"}),
      choice("mode", "algorithm1", kModes),
      choice("init", "auto", {"auto", "symmetric", "kaiming"}),
      text("target", "quad2d"),
      choice("subspace", "axis_aligned", {"axis_aligned", "random"}),
      integer("d", 32, 2),
      integer("n", nullptr, 1, true),
      choice("activation", "cubed_smooth", kActivations),
      choice("loss", "square", kLosses),
      positive("loss_delta", 1.0),
      integer("m", 8, 2),
      {"kappa", Type::number, nullptr, true, 1.0, false, std::numeric_limits<double>::infinity(), {}},
      integer("T1", nullptr, 1, true),
      positive("eta1", nullptr, true),
      positive("beta1", nullptr, true),
      positive("eps0", nullptr, true),
      positive("eta2", nullptr, true),
      positive("beta2", 1e-3),
      integer("T2", 10000, 1),
      number("stage2_tol", 1e-6, 0.0),
      {"center", Type::boolean, true, false, 0, false, 0, {}},
      positive("C_eta", 4.0),
      positive("D", 4.0),
      positive("C_eps", 1.0),
      integer("n_test", 10000, 1),
      number("adam.lr", 0.005, 0.0),
      integer("adam.batch", 32, 1),
      integer("adam.epochs", 1000, 1),
      integer("spectral.n_mc", 1000000, 10000),
      choice("spectral.rank_rule", "threshold", {"threshold", "fixed"}),
      {"spectral.tau_rel", Type::number, 0.2, false, 0.0, true, 1.0, {}},
      list("sweep.d_list", Type::int_list, Json::array({32, 64, 128}), 2),
      positive("sweep.alpha_min", 1.1),
      positive("sweep.alpha_max", 1.8),
      positive("sweep.alpha_step", 0.05),
      list("sweep.eps_list", Type::num_list, Json::array({0.1}), 0.0, true),
      integer("sweep.seeds", 5, 1),
      integer("sweep.eval_every", 10, 1),
      choice("sweep.mode", "adam", kModes),
      text("sweep.target", "quad2d"),
      choice("sweep.activation", "quadratic", kActivations),
      choice("sweep.loss", "square", kLosses),
      integer("sweep.m", 4, 2),
      list("phase.d_list", Type::int_list, Json::array({200}), 2),
      list("phase.ratios", Type::num_list, Json::array({5, 10, 20, 40, 80}), 0.0, true),
      {"phase.losses", Type::str_list, Json::array({"huber", "square"}), false, 0, false, 0, kLosses},
      integer("phase.seeds", 5, 1),
      choice("phase.mode", "adam", kModes),
      text("phase.target", "hermite4sum"),
      choice("phase.activation", "cosine", kActivations),
      integer("phase.m", 4, 2),
      integer("noise.d", 64, 2),
      list("noise.n_grid", Type::int_list, Json::array({256, 512, 1024, 2048, 4096, 8192, 16384}), 1),
      integer("noise.seeds", 20, 1),
      integer("noise.n_mc", 4194304, 10000),
      text("noise.target", "hermite4sum"),
      choice("noise.loss", "huber", kLosses),
      integer("power.d", 64, 2),
      integer("power.n", 2048, 1),
      list("power.T1_list", Type::int_list, Json::array({3}), 1),
      list("power.eps0_list", Type::num_list, Json::array(), 0.0, true),
      integer("power.seeds", 1, 1),
      integer("power.n_mc", 1048576, 10000),
      text("power.target", "quad2d"),
      choice("power.activation", "cubed_smooth", kActivations),
      choice("power.loss", "square", kLosses),
      integer("power.m", 8, 2),
      integer("approx.k_max", 6, 0),
      integer("approx.grid", 101, 2),
      integer("approx.quad_order", 64, 4),
  };
  return specs;
}

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : schema()) {
    if (s.key == key) return &s;
  }
  return nullptr;
}

bool valid_target_name(const std::string& name) {
  if (name == "quad2d" || name == "hermite4sum") return true;
  if (name.rfind("hermite:", 0) != 0 || name.size() == 8) return false;
  for (std::size_t i = 8; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9') return false;
  }
  return true;
}

std::string describe(const Json& v) { return v.dump(); }

double check_scalar(const KeySpec& spec, const Json& v, bool want_int) {
  if (!v.is_number()) throw ParseError(spec.key, "expected a number, got " + describe(v));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ParseError(spec.key, "value must be finite");
  if (want_int && std::floor(x) != x) throw ParseError(spec.key, "expected an integer, got " + describe(v));
  const bool below = spec.lo_open ? !(x > spec.lo) : !(x >= spec.lo);
  if (below || x > spec.hi) {
    std::ostringstream msg;
    msg << "value " << describe(v) << " out of range (must be " << (spec.lo_open ? "> " : ">= ") << spec.lo;
    if (std::isfinite(spec.hi)) msg << " and <= " << spec.hi;
    msg << ")";
    throw ParseError(spec.key, msg.str());
  }
  return x;
}

Json normalize(const KeySpec& spec, const Json& v) {
  if (v.is_null()) {
    if (!spec.nullable) throw ParseError(spec.key, "value may not be null");
    return v;
  }
  auto check_string = [&](const Json& s) {
    if (!s.is_string()) throw ParseError(spec.key, "expected a string, got " + describe(s));
    const std::string str = s.get<std::string>();
    if (!spec.choices.empty() && std::find(spec.choices.begin(), spec.choices.end(), str) == spec.choices.end()) {
      std::string allowed;
      for (const auto& c : spec.choices) allowed += (allowed.empty() ? "" : ", ") + c;
      throw ParseError(spec.key, "invalid value '" + str + "' (expected one of: " + allowed + ")");
    }
    if (spec.key.size() >= 6 && spec.key.compare(spec.key.size() - 6, 6, "target") == 0 && !valid_target_name(str)) {
      throw ParseError(spec.key, "unknown target '" + str + "'");
    }
    return Json(str);
  };
  switch (spec.type) {
    case Type::integer:
      return Json(static_cast<long long>(check_scalar(spec, v, true)));
    case Type::number:
      return Json(check_scalar(spec, v, false));
    case Type::boolean:
      if (!v.is_boolean()) throw ParseError(spec.key, "expected true or false, got " + describe(v));
      return v;
    case Type::string:
      return check_string(v);
    case Type::int_list:
    case Type::num_list:
    case Type::str_list: {
      if (!v.is_array()) throw ParseError(spec.key, "expected an array, got " + describe(v));
      Json out = Json::array();
      for (const auto& e : v) {
        if (spec.type == Type::str_list) {
          out.push_back(check_string(e));
        } else if (spec.type == Type::int_list) {
          out.push_back(static_cast<long long>(check_scalar(spec, e, true)));
        } else {
          out.push_back(check_scalar(spec, e, false));
        }
      }
      return out;
    }
  }
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (c == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

void flatten(const Json& obj, const std::string& prefix, std::vector<std::pair<std::string, Json>>& out) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it.value().is_object()) {
      flatten(it.value(), key, out);
    } else {
      out.emplace_back(key, it.value());
    }
  }
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& s : schema()) keys.push_back(s.key);
  return keys;
}

RunConfig::RunConfig() {
  for (const auto& s : schema()) values_[s.key] = normalize(s, s.fallback);
}

const Json& RunConfig::at(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ParseError(key, "unknown configuration key");
  return it->second;
}

std::optional<double> RunConfig::opt_num(const std::string& key) const {
  const Json& v = at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

std::optional<long long> RunConfig::opt_integer(const std::string& key) const {
  const Json& v = at(key);
  if (v.is_null()) return std::nullopt;
  return v.get<long long>();
}

std::vector<double> RunConfig::num_list(const std::string& key) const { return at(key).get<std::vector<double>>(); }
std::vector<long long> RunConfig::int_list(const std::string& key) const {
  return at(key).get<std::vector<long long>>();
}
std::vector<std::string> RunConfig::str_list(const std::string& key) const {
  return at(key).get<std::vector<std::string>>();
}

void RunConfig::set(const std::string& key, const Json& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ParseError(key, "unknown configuration key");
  values_[key] = normalize(*spec, value);
}

Json RunConfig::effective_config() const {
  Json out = Json::object();
  for (const auto& [key, value] : values_) {
    std::string pointer = "/" + key;
    std::replace(pointer.begin(), pointer.end(), '.', '/');
    out[Json::json_pointer(pointer)] = value;
  }
  return out;
}

std::uint64_t RunConfig::hash() const { return fnv1a64(effective_config().dump()); }

std::string RunConfig::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

std::vector<std::pair<std::string, Json>> parse_config_text(const std::string& text) {
  std::vector<std::pair<std::string, Json>> out;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string body = trim(strip_comment(line));
    if (body.empty()) continue;
    if (body.front() == '[') {
      if (body.back() != ']') throw ParseError("line " + std::to_string(lineno), "malformed section header");
      section = trim(body.substr(1, body.size() - 2));
      continue;
    }
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("line " + std::to_string(lineno), "expected key = value");
    std::string key = trim(body.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    const std::string raw = trim(body.substr(eq + 1));
    Json value;
    try {
      value = Json::parse(raw);
    } catch (const Json::parse_error&) {
      throw ParseError(key, "cannot parse value '" + raw + "'");
    }
    out.emplace_back(key, value);
  }
  return out;
}

std::vector<std::pair<std::string, Json>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  const bool is_json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  if (!is_json) return parse_config_text(text);
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(path, std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError(path, "top level must be an object");
  if (doc.contains("effective_config")) doc = doc["effective_config"];
  std::vector<std::pair<std::string, Json>> out;
  flatten(doc, "", out);
  return out;
}

Json parse_flag_value(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error&) {
    return Json(text);
  }
}

std::vector<std::pair<std::string, Json>> preset_values(const std::string& name) {
  if (name == "desk") return {};
  if (name == "full") {
    return {
        {"sweep.alpha_step", 0.01},
        {"sweep.seeds", 10},
        {"sweep.eps_list", Json::array({0.01, 0.1, 1.0})},
        {"sweep.d_list", Json::array({32, 64, 128, 256})},
        {"phase.d_list", Json::array({100, 200, 500})},
        {"phase.ratios", Json::array({2.5, 5, 10, 15, 20, 25, 30, 40, 60, 80})},
        {"phase.seeds", 10},
        {"noise.seeds", 50},
        {"power.seeds", 5},
        {"power.T1_list", Json::array({1, 2, 3, 4})},
    };
  }
  throw ParseError("preset", "unknown preset '" + name + "'");
}

RunConfig parse_config(const std::optional<std::string>& path, const std::vector<std::pair<std::string, Json>>& flags) {
  std::vector<std::pair<std::string, Json>> file_values;
  if (path) file_values = read_config_file(*path);
  std::string preset = "desk";
  for (const auto& [k, v] : file_values) {
    if (k == "preset" && v.is_string()) preset = v.get<std::string>();
  }
  for (const auto& [k, v] : flags) {
    if (k == "preset" && v.is_string()) preset = v.get<std::string>();
  }
  RunConfig cfg;
  cfg.set("preset", preset);
  for (const auto& [k, v] : preset_values(preset)) cfg.set(k, v);
  for (const auto& [k, v] : file_values) cfg.set(k, v);
  for (const auto& [k, v] : flags) cfg.set(k, v);
  return cfg;
}

}  // namespace mindex
