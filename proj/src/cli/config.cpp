// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>
#include <sstream>

#include "cocyclab/cli.hpp"
#include "cocyclab/errors.hpp"
#include "cocyclab/io.hpp"

namespace cocyclab::cli {
namespace {

enum class Kind { Real, PosReal, Count, PosCount, Bool, Reals, Counts, Text, Matrix, Seed };

struct KeySpec {
  const char* key;
  Kind kind;
  const char* fallback;  // nullptr: no default
};

// Parameter sections. Structural sections (kernel, cocycle, direction,
// observable) are validated separately.
const std::vector<KeySpec>& param_specs() {
  static const std::vector<KeySpec> specs = {
      {"mixing.probes", Kind::Count, "32"},
      {"mixing.horizon", Kind::PosCount, "64"},
      {"mixing.doeblin_eps", Kind::PosReal, nullptr},
      {"mixing.doeblin_mode", Kind::Text, "exhaustive"},
      {"lyapunov.n", Kind::PosCount, "10000"},
      {"lyapunov.replicas", Kind::PosCount, "64"},
      {"lyapunov.qr_stride", Kind::PosCount, "1"},
      {"lyapunov.wedge_block", Kind::PosCount, "4"},
      {"lyapunov.wedge", Kind::Bool, "false"},
      {"kappa.alpha", Kind::PosReal, "0.1"},
      {"kappa.n", Kind::PosCount, "1"},
      {"kappa.trajectories", Kind::PosCount, "1000"},
      {"kappa.resolution", Kind::PosCount, "720"},
      {"kappa.random_pairs", Kind::Count, "256"},
      {"kappa.singular_products", Kind::Count, "4"},
      {"kappa.diagnostics_top", Kind::PosCount, "8"},
      {"kappa.horizon", Kind::Bool, "false"},
      {"kappa.horizon_cap", Kind::PosCount, "64"},
      {"cumulant.t_max", Kind::PosReal, "0.5"},
      {"cumulant.points", Kind::PosCount, "21"},
      {"cumulant.resolution", Kind::PosCount, "720"},
      {"cumulant.source", Kind::Text, "auto"},
      {"ldt.n_grid", Kind::Counts, "32 64 128 256 512"},
      {"ldt.eps_grid", Kind::Reals, "0.02 0.05 0.1 0.2"},
      {"ldt.samples", Kind::PosCount, "100000"},
      {"ldt.slack_samples", Kind::PosCount, "2000"},
      {"ldt.slack_directions", Kind::Count, "4"},
      {"continuity.t_grid", Kind::Reals, nullptr},
      {"continuity.flag_samples", Kind::Count, "64"},
      {"continuity.flag_n", Kind::PosCount, "256"},
      {"continuity.max_cycles", Kind::PosCount, "64"},
      {"irreducible.max_cycles", Kind::PosCount, "64"},
  };
  return specs;
}

const std::map<std::string, std::vector<std::string>>& command_sections() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"mixing", {"mixing"}},
      {"lyapunov", {"lyapunov"}},
      {"kappa", {"kappa"}},
      {"cumulant", {"cumulant"}},
      {"ldt-base", {"cumulant", "ldt"}},
      {"ldt-fiber", {"cumulant", "ldt", "lyapunov"}},
      {"continuity", {"lyapunov", "continuity"}},
      {"irreducible", {"irreducible"}},
  };
  return m;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string t;
  while (in >> t) out.push_back(t);
  return out;
}

bool parse_real(const std::string& s, double& v) {
  try {
    std::size_t used = 0;
    v = std::stod(s, &used);
    return used == s.size() && std::isfinite(v);
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_count(const std::string& s, std::uint64_t& v) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); })) return false;
  try {
    std::size_t used = 0;
    v = std::stoull(s, &used, 10);
    return used == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

bool parse_bool(const std::string& s, bool& v) {
  if (s == "true" || s == "1" || s == "yes") {
    v = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no") {
    v = false;
    return true;
  }
  return false;
}

std::string check_value(Kind kind, const std::string& value) {
  double r = 0.0;
  std::uint64_t c = 0;
  bool b = false;
  switch (kind) {
    case Kind::Real: return parse_real(value, r) ? "" : "expected a real number";
    case Kind::PosReal: return parse_real(value, r) && r > 0.0 ? "" : "expected a positive real number";
    case Kind::Count: return parse_count(value, c) ? "" : "expected a nonnegative integer";
    case Kind::PosCount: return parse_count(value, c) && c > 0 ? "" : "expected a positive integer";
    case Kind::Seed: return parse_count(value, c) ? "" : "expected an unsigned 64-bit integer";
    case Kind::Bool: return parse_bool(value, b) ? "" : "expected true or false";
    case Kind::Reals: {
      const auto t = tokens(value);
      if (t.empty()) return "expected a list of real numbers";
      for (const auto& x : t)
        if (!parse_real(x, r)) return "'" + x + "' is not a real number";
      return "";
    }
    case Kind::Counts: {
      const auto t = tokens(value);
      if (t.empty()) return "expected a list of positive integers";
      for (const auto& x : t)
        if (!parse_count(x, c) || c == 0) return "'" + x + "' is not a positive integer";
      return "";
    }
    case Kind::Text:
    case Kind::Matrix: return "";
  }
  return "";
}

bool is_edge_key(const std::string& key, std::size_t& i, std::size_t& j) {
  const auto t = tokens(key);
  std::uint64_t a = 0, b = 0;
  if (t.size() != 3 || t[0] != "edge" || !parse_count(t[1], a) || !parse_count(t[2], b)) return false;
  i = a;
  j = b;
  return true;
}

std::string resolve_path(const ConfigFile& file, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? p : (std::filesystem::path(file.base_dir()) / path).string();
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

/// Builds the matrix field in section `sec` ("cocycle" or "direction").
std::optional<MatrixField> build_field(const ConfigFile& file, const std::string& sec, const MarkovKernel& kernel,
                                       const Cocycle* base, std::vector<std::string>& problems) {
  const std::size_t before = problems.size();
  std::optional<std::size_t> dim;
  if (const auto* e = file.find(sec + ".dim")) {
    std::uint64_t d = 0;
    if (parse_count(e->value, d) && d > 0)
      dim = d;
    else
      problems.push_back(sec + ".dim: expected a positive integer");
  }
  std::optional<Matrix> constant;
  if (const auto* e = file.find(sec + ".constant")) {
    try {
      constant = parse_matrix(e->value);
      if (constant->rows() != constant->cols()) {
        problems.push_back(sec + ".constant: matrix must be square");
        constant.reset();
      }
    } catch (const Error& err) {
      problems.push_back(sec + ".constant: " + err.what());
    }
  }
  std::vector<std::tuple<std::size_t, std::size_t, Matrix, std::string>> edges;
  for (const auto& [key, entry] : file.entries()) {
    if (key.rfind(sec + ".", 0) != 0) continue;
    const std::string sub = key.substr(sec.size() + 1);
    std::size_t i = 0, j = 0;
    if (!is_edge_key(sub, i, j)) continue;
    try {
      Matrix m = parse_matrix(entry.value);
      if (m.rows() != m.cols()) {
        problems.push_back(key + ": matrix must be square");
        continue;
      }
      edges.emplace_back(i, j, std::move(m), key);
    } catch (const Error& err) {
      problems.push_back(key + ": " + err.what());
    }
  }
  if (!dim) {
    if (constant) dim = static_cast<std::size_t>(constant->rows());
    else if (!edges.empty()) dim = static_cast<std::size_t>(std::get<2>(edges.front()).rows());
    else if (base) dim = base->dim();
  }
  std::optional<double> scale_base;
  if (const auto* e = file.find(sec + ".scale_base")) {
    double v = 0.0;
    if (sec != "direction")
      problems.push_back(sec + ".scale_base: only valid in [direction]");
    else if (!parse_real(e->value, v))
      problems.push_back(sec + ".scale_base: expected a real number");
    else
      scale_base = v;
  }
  const auto* file_entry = file.find(sec + ".file");
  std::optional<std::string> file_text;
  if (file_entry) {
    try {
      file_text = read_file(resolve_path(file, file_entry->value));
    } catch (const Error& err) {
      problems.push_back(sec + ".file: " + err.what());
    }
  }
  if (!dim && file_text) {
    // Dimension of the first matrix block: entries on the line after "edge".
    std::istringstream in(*file_text);
    std::string line;
    bool after_edge = false;
    while (std::getline(in, line)) {
      const auto t = tokens(line.substr(0, line.find('#')));
      if (t.empty()) continue;
      if (after_edge) {
        dim = t.size();
        break;
      }
      after_edge = t[0] == "edge";
    }
  }
  if (!dim) {
    problems.push_back(sec + ": give dim, constant, file or edge matrices");
    return std::nullopt;
  }
  if (problems.size() > before) return std::nullopt;

  MatrixField field(kernel.n_states(), *dim);
  const auto m = static_cast<Eigen::Index>(*dim);
  if (base && sec == "direction") {
    for (const Edge& e : base->edges()) field.set(e.from, e.to, Matrix::Zero(m, m));
    if (scale_base)
      for (const Edge& e : base->edges()) field.set(e.from, e.to, *scale_base * base->at(e.from, e.to));
  }
  if (constant) {
    if (constant->rows() != m) {
      problems.push_back(sec + ".constant: size does not match dim");
      return std::nullopt;
    }
    for (const Edge& e : kernel.support()) field.set(e.from, e.to, *constant);
  }
  if (file_text) {
    try {
      const MatrixField from_file = parse_matrix_field_text(*file_text, kernel.n_states(), *dim);
      for (const Edge& e : from_file.edges()) field.set(e.from, e.to, from_file.at(e.from, e.to));
    } catch (const Error& err) {
      problems.push_back(sec + ".file: " + err.what());
    }
  }
  for (auto& [i, j, mat, key] : edges) {
    if (i >= kernel.n_states() || j >= kernel.n_states()) {
      problems.push_back(key + ": state out of range");
    } else if (mat.rows() != m) {
      problems.push_back(key + ": size does not match dim " + std::to_string(*dim));
    } else if (!kernel.has_edge(i, j)) {
      problems.push_back(key + ": not an edge of the kernel support");
    } else {
      field.set(i, j, mat);
    }
  }
  for (const Edge& e : field.edges()) {
    if (!kernel.has_edge(e.from, e.to))
      problems.push_back(sec + ": matrix on (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                         ") is not on a kernel edge");
  }
  for (const Edge& e : kernel.support()) {
    if (!field.has(e.from, e.to))
      problems.push_back(sec + ": kernel edge (" + std::to_string(e.from) + "," + std::to_string(e.to) +
                         ") has no matrix");
  }
  if (problems.size() > before) return std::nullopt;
  return field;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error("invalid config (" + std::to_string(problems.size()) + " problem(s))"),
      problems_(std::move(problems)) {}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& base_dir) {
  ConfigFile f;
  f.base_dir_ = base_dir;
  f.hash_ = fnv1a_hex(text);
  std::vector<std::string> problems;
  std::string section;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) {
        problems.push_back("line " + std::to_string(line) + ": malformed section header");
        continue;
      }
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      problems.push_back("line " + std::to_string(line) + ": expected 'key = value'");
      continue;
    }
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) {
      problems.push_back("line " + std::to_string(line) + ": empty key");
      continue;
    }
    const std::string path = section.empty() ? key : section + "." + key;
    if (f.entries_.count(path)) {
      problems.push_back(path + ": duplicate key (line " + std::to_string(line) + ")");
      continue;
    }
    f.entries_[path] = {value, line};
  }
  if (!problems.empty()) throw ConfigError(std::move(problems));
  return f;
}

const ConfigEntry* ConfigFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? nullptr : &it->second;
}

double ExperimentConfig::real(const std::string& key) const {
  double v = 0.0;
  parse_real(params.at(key), v);
  return v;
}

std::size_t ExperimentConfig::count(const std::string& key) const {
  std::uint64_t v = 0;
  parse_count(params.at(key), v);
  return static_cast<std::size_t>(v);
}

bool ExperimentConfig::flag(const std::string& key) const {
  bool v = false;
  parse_bool(params.at(key), v);
  return v;
}

std::vector<double> ExperimentConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& t : tokens(params.at(key))) {
    double v = 0.0;
    parse_real(t, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::size_t> ExperimentConfig::counts(const std::string& key) const {
  std::vector<std::size_t> out;
  for (const auto& t : tokens(params.at(key))) {
    std::uint64_t v = 0;
    parse_count(t, v);
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"mixing",    "lyapunov",  "kappa",      "cumulant",
                                             "ldt-base",  "ldt-fiber", "continuity", "irreducible"};
  return c;
}

ExperimentConfig load_config(const ConfigFile& file, const std::string& command) {
  std::vector<std::string> problems;
  const auto sections_it = command_sections().find(command);
  if (sections_it == command_sections().end()) throw ConfigError({"unknown command '" + command + "'"});
  ExperimentConfig cfg;
  cfg.command = command;

  // Unknown keys and malformed values anywhere in the file.
  static const std::set<std::string> structural = {
      "seed",          "kernel.rows",      "kernel.file",         "cocycle.dim",      "cocycle.constant",
      "cocycle.file",  "direction.dim",    "direction.constant",  "direction.file",   "direction.scale_base",
      "observable.window", "observable.indicator", "observable.values", "observable.constant"};
  for (const auto& [key, entry] : file.entries()) {
    const auto spec = std::find_if(param_specs().begin(), param_specs().end(),
                                   [&](const KeySpec& k) { return key == k.key; });
    std::size_t i = 0, j = 0;
    const bool edge = (key.rfind("cocycle.", 0) == 0 && is_edge_key(key.substr(8), i, j)) ||
                      (key.rfind("direction.", 0) == 0 && is_edge_key(key.substr(10), i, j));
    if (spec == param_specs().end() && !structural.count(key) && !edge) {
      problems.push_back(key + ": unknown key (line " + std::to_string(entry.line) + ")");
      continue;
    }
    if (spec != param_specs().end()) {
      const std::string msg = check_value(spec->kind, entry.value);
      if (!msg.empty()) problems.push_back(key + ": " + msg);
    }
  }

  if (const auto* e = file.find("seed")) {
    std::uint64_t s = 0;
    if (parse_count(e->value, s))
      cfg.seed = s;
    else
      problems.push_back("seed: expected an unsigned 64-bit integer");
  } else {
    problems.push_back("seed: required");
  }
  cfg.params["seed"] = std::to_string(cfg.seed);

  for (const auto& spec : param_specs()) {
    const std::string key = spec.key;
    const std::string sec = key.substr(0, key.find('.'));
    if (std::find(sections_it->second.begin(), sections_it->second.end(), sec) == sections_it->second.end()) continue;
    if (const auto* e = file.find(key))
      cfg.params[key] = e->value;
    else if (spec.fallback)
      cfg.params[key] = spec.fallback;
  }
  auto text_choice = [&](const std::string& key, std::initializer_list<const char*> allowed) {
    const auto it = cfg.params.find(key);
    if (it == cfg.params.end()) return;
    for (const char* a : allowed)
      if (it->second == a) return;
    std::string msg = key + ": expected one of";
    for (const char* a : allowed) msg += std::string(" ") + a;
    problems.push_back(msg);
  };
  text_choice("mixing.doeblin_mode", {"exhaustive", "singletons"});
  text_choice("cumulant.source", {"auto", "fiber", "base"});
  if (const auto it = cfg.params.find("mixing.doeblin_eps"); it != cfg.params.end()) {
    double v = 0.0;
    if (parse_real(it->second, v) && !(v < 1.0)) problems.push_back("mixing.doeblin_eps: must lie in (0,1)");
  }
  if (const auto it = cfg.params.find("kappa.alpha"); it != cfg.params.end()) {
    double v = 0.0;
    if (parse_real(it->second, v) && v > 1.0) problems.push_back("kappa.alpha: must lie in (0,1]");
  }
  if (const auto it = cfg.params.find("cumulant.points"); it != cfg.params.end()) {
    std::uint64_t v = 0;
    if (parse_count(it->second, v) && (v < 3 || v % 2 == 0))
      problems.push_back("cumulant.points: must be odd and >= 3");
  }

  // Kernel.
  const auto* rows = file.find("kernel.rows");
  const auto* kfile = file.find("kernel.file");
  if (rows && kfile) {
    problems.push_back("kernel: give either kernel.rows or kernel.file, not both");
  } else if (!rows && !kfile) {
    problems.push_back("kernel.rows: required (or kernel.file)");
  } else {
    const std::string key = rows ? "kernel.rows" : "kernel.file";
    try {
      if (rows) {
        cfg.kernel.emplace(parse_matrix(rows->value));
      } else {
        cfg.kernel.emplace(parse_kernel_text(read_file(resolve_path(file, kfile->value))));
      }
    } catch (const Error& e) {
      problems.push_back(key + ": " + e.what());
    }
  }

  const bool has_obs_keys = std::any_of(file.entries().begin(), file.entries().end(),
                                        [](const auto& kv) { return kv.first.rfind("observable.", 0) == 0; });
  const std::string source = command == "cumulant" ? cfg.params["cumulant.source"] : "";
  const bool needs_cocycle = command != "mixing" && command != "ldt-base" && source != "base" &&
                             !(source == "auto" && has_obs_keys);
  const bool has_cocycle_keys = std::any_of(file.entries().begin(), file.entries().end(),
                                            [](const auto& kv) { return kv.first.rfind("cocycle.", 0) == 0; });
  if (cfg.kernel && (needs_cocycle || has_cocycle_keys)) {
    if (!has_cocycle_keys) {
      problems.push_back("cocycle: required for command '" + command + "'");
    } else if (auto field = build_field(file, "cocycle", *cfg.kernel, nullptr, problems)) {
      try {
        cfg.cocycle.emplace(std::move(*field));
      } catch (const Error& e) {
        problems.push_back(std::string("cocycle: ") + e.what());
      }
    }
  }
  if (cfg.cocycle) {
    const bool fiber_only = command == "kappa" || command == "ldt-fiber" || source == "fiber";
    if (fiber_only && cfg.cocycle->dim() < 2) problems.push_back("cocycle.dim: command '" + command + "' needs m >= 2");
  }

  const bool has_direction_keys = std::any_of(file.entries().begin(), file.entries().end(),
                                              [](const auto& kv) { return kv.first.rfind("direction.", 0) == 0; });
  if (command == "continuity") {
    if (!cfg.params.count("continuity.t_grid")) problems.push_back("continuity.t_grid: required");
    if (!has_direction_keys) problems.push_back("direction: required for command 'continuity'");
  }
  if (cfg.kernel && cfg.cocycle && has_direction_keys) {
    if (auto field = build_field(file, "direction", *cfg.kernel, &*cfg.cocycle, problems)) {
      if (!field->same_shape(cfg.cocycle->field()))
        problems.push_back("direction: dimension or edge set differs from the cocycle");
      else
        cfg.direction = std::move(*field);
    }
  }

  const bool needs_obs = command == "ldt-base" || source == "base";
  if (needs_obs && !has_obs_keys) problems.push_back("observable: required for command '" + command + "'");
  if (cfg.kernel && has_obs_keys) {
    const std::size_t S = cfg.kernel->n_states();
    std::uint64_t w = 1;
    if (const auto* e = file.find("observable.window"); e && (!parse_count(e->value, w) || w == 0)) {
      problems.push_back("observable.window: expected a positive integer");
      w = 0;
    }
    const auto* ind = file.find("observable.indicator");
    const auto* vals = file.find("observable.values");
    const auto* cst = file.find("observable.constant");
    const int given = (ind != nullptr) + (vals != nullptr) + (cst != nullptr);
    if (given != 1) {
      problems.push_back("observable: give exactly one of indicator, values, constant");
    } else if (w > 0) {
      try {
        if (ind) {
          std::uint64_t s = 0;
          if (!parse_count(ind->value, s) || s >= S)
            problems.push_back("observable.indicator: expected a state index below " + std::to_string(S));
          else if (w != 1)
            problems.push_back("observable.indicator: needs window = 1");
          else
            cfg.observable.emplace(Observable::indicator(S, s));
        } else if (cst) {
          double c = 0.0;
          if (!parse_real(cst->value, c))
            problems.push_back("observable.constant: expected a real number");
          else
            cfg.observable.emplace(Observable(S, w, [c](std::span<const State>) { return c; }));
        } else {
          std::vector<double> table;
          bool ok = true;
          for (const auto& t : tokens(vals->value)) {
            double v = 0.0;
            ok = ok && parse_real(t, v);
            table.push_back(v);
          }
          if (!ok)
            problems.push_back("observable.values: expected real numbers");
          else
            cfg.observable.emplace(S, w, std::move(table));
        }
      } catch (const Error& e) {
        problems.push_back(std::string("observable: ") + e.what());
      }
    }
  }

  if (!problems.empty()) throw ConfigError(std::move(problems));
  return cfg;
}

}  // namespace cocyclab::cli
