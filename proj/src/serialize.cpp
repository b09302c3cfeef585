// SPDX-License-Identifier: Apache-2.0
#include "nkai/serialize.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <istream>
#include <ostream>
#include <sstream>

namespace nkai {

namespace {

std::string path_of(std::string_view where, std::string_view key) {
  if (where.empty()) return std::string(key);
  return std::string(where) + "." + std::string(key);
}

[[noreturn]] void fail(const std::string& field, std::string_view msg) {
  throw ConfigError("config field '" + field + "': " + std::string(msg));
}

void require_object(const Json& j, std::string_view where) {
  if (!j.is_object()) fail(std::string(where), "expected a table/object");
}

void reject_unknown(const Json& j, std::string_view where, std::initializer_list<std::string_view> known) {
  for (const auto& [key, value] : j.items()) {
    bool ok = false;
    for (auto k : known) ok = ok || key == k;
    if (!ok) fail(path_of(where, key), "unknown field");
  }
}

const Json& need(const Json& j, std::string_view where, std::string_view key) {
  auto it = j.find(std::string(key));
  if (it == j.end()) fail(path_of(where, key), "missing");
  return *it;
}

double as_number(const Json& v, const std::string& field) {
  if (!v.is_number()) fail(field, "expected a number");
  return v.get<double>();
}

int as_int(const Json& v, const std::string& field) {
  if (!v.is_number_integer()) fail(field, "expected an integer");
  return v.get<int>();
}

std::string as_string(const Json& v, const std::string& field) {
  if (!v.is_string()) fail(field, "expected a string");
  return v.get<std::string>();
}

std::vector<double> as_number_list(const Json& v, const std::string& field) {
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array()) fail(field, "expected a number or a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_number(v[i], field + "[" + std::to_string(i) + "]"));
  if (out.empty()) fail(field, "list must not be empty");
  return out;
}

std::vector<int> as_int_list(const Json& v, const std::string& field) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array()) fail(field, "expected an integer or a list of integers");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(as_int(v[i], field + "[" + std::to_string(i) + "]"));
  if (out.empty()) fail(field, "list must not be empty");
  return out;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json to_json(const ArrayGeometry& geom) {
  if (geom.kind() == ArrayKind::Nested) {
    return {{"kind", "nested"}, {"M1", geom.inner()}, {"M2", geom.outer()}, {"d1", geom.d1()}};
  }
  if (geom.kind() == ArrayKind::Sparse) {
    return {{"kind", "sparse"}, {"positions", geom.positions()}, {"d", geom.d1()}};
  }
  return {{"kind", "ula"}, {"M", geom.size()}, {"d", geom.d1()}};
}

ArrayGeometry geometry_from_json(const Json& j, std::string_view where) {
  require_object(j, where);
  const std::string kind = as_string(need(j, where, "kind"), path_of(where, "kind"));
  try {
    if (kind == "nested") {
      reject_unknown(j, where, {"kind", "M1", "M2", "d1"});
      const int m1 = as_int(need(j, where, "M1"), path_of(where, "M1"));
      const int m2 = as_int(need(j, where, "M2"), path_of(where, "M2"));
      const double d1 = j.contains("d1") ? as_number(j["d1"], path_of(where, "d1")) : 0.5;
      return ArrayGeometry::nested(m1, m2, d1);
    }
    if (kind == "ula") {
      reject_unknown(j, where, {"kind", "M", "d"});
      const int m = as_int(need(j, where, "M"), path_of(where, "M"));
      const double d = j.contains("d") ? as_number(j["d"], path_of(where, "d")) : 0.5;
      return ArrayGeometry::ula(m, d);
    }
    if (kind == "sparse") {
      reject_unknown(j, where, {"kind", "positions", "d"});
      const auto pos = as_int_list(need(j, where, "positions"), path_of(where, "positions"));
      const double d = j.contains("d") ? as_number(j["d"], path_of(where, "d")) : 0.5;
      return ArrayGeometry::sparse(pos, d);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidArgument& e) {
    fail(std::string(where), e.what());
  }
  fail(path_of(where, "kind"), "expected \"nested\", \"ula\" or \"sparse\"");
}

Json to_json(const ScenarioSpec& spec) {
  Json j;
  j["doas_deg"] = spec.scenario.doas_deg;
  if (spec.scenario.snr_db) {
    j["snr_db"] = *spec.scenario.snr_db;
  } else {
    j["powers"] = spec.scenario.powers;
  }
  j["noise_power"] = spec.scenario.noise_power;
  j["n_snapshots"] = spec.snapshots;
  j["seed"] = spec.seed;
  return j;
}

ScenarioSpec scenario_from_json(const Json& j, std::string_view where) {
  require_object(j, where);
  reject_unknown(j, where, {"doas_deg", "snr_db", "powers", "noise_power", "n_snapshots", "seed"});
  ScenarioSpec spec;
  const auto doas = as_number_list(need(j, where, "doas_deg"), path_of(where, "doas_deg"));
  const double noise = j.contains("noise_power")
                           ? as_number(j["noise_power"], path_of(where, "noise_power"))
                           : 1.0;
  if (j.contains("snr_db") == j.contains("powers")) {
    fail(path_of(where, "snr_db"), "give exactly one of snr_db or powers");
  }
  if (j.contains("snr_db")) {
    spec.scenario = SourceScenario::equal_power(doas, as_number(j["snr_db"], path_of(where, "snr_db")), noise);
  } else {
    spec.scenario.doas_deg = doas;
    spec.scenario.powers = as_number_list(j["powers"], path_of(where, "powers"));
    spec.scenario.noise_power = noise;
  }
  if (j.contains("n_snapshots")) spec.snapshots = as_int(j["n_snapshots"], path_of(where, "n_snapshots"));
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail(path_of(where, "seed"), "expected a non-negative integer");
    spec.seed = j["seed"].get<std::uint64_t>();
  }
  try {
    spec.scenario.validate();
  } catch (const InvalidArgument& e) {
    fail(std::string(where), e.what());
  }
  if (spec.snapshots < 1) fail(path_of(where, "n_snapshots"), "must be >= 1");
  return spec;
}

Json to_json(const KaiConfig& config) {
  Json j;
  j["iterations"] = config.iterations ? Json(*config.iterations) : Json(nullptr);
  j["mu_increment"] = config.mu_increment;
  j["grid_step_deg"] = config.grid_step_deg;
  j["duplicate_policy"] = std::string(to_string(config.duplicate_policy));
  return j;
}

KaiConfig kai_config_from_json(const Json& j, std::string_view where) {
  require_object(j, where);
  reject_unknown(j, where, {"iterations", "mu_increment", "grid_step_deg", "duplicate_policy"});
  KaiConfig c;
  if (j.contains("iterations") && !j["iterations"].is_null()) {
    c.iterations = as_int(j["iterations"], path_of(where, "iterations"));
    if (*c.iterations < 1) fail(path_of(where, "iterations"), "must be >= 1");
  }
  if (j.contains("mu_increment")) c.mu_increment = as_number(j["mu_increment"], path_of(where, "mu_increment"));
  if (j.contains("grid_step_deg")) c.grid_step_deg = as_number(j["grid_step_deg"], path_of(where, "grid_step_deg"));
  if (j.contains("duplicate_policy")) {
    const auto field = path_of(where, "duplicate_policy");
    try {
      c.duplicate_policy = duplicate_policy_from_string(as_string(j["duplicate_policy"], field));
    } catch (const ConfigError&) {
      throw;
    } catch (const InvalidArgument& e) {
      fail(field, e.what());
    }
  }
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    fail(std::string(where), e.what());
  }
  return c;
}

Json to_json(const KaiTrace& trace) {
  Json j;
  j["initial_doas"] = trace.initial_doas;
  j["degenerate_fallback"] = trace.degenerate_fallback;
  j["iterations"] = Json::array();
  for (const auto& rec : trace.iterations) {
    Json r;
    r["iteration"] = rec.iteration;
    r["manifold_angles"] = rec.manifold_angles;
    r["mu"] = rec.mu;
    Json objective = Json::array();
    for (double u : rec.objective) objective.push_back(finite_or_null(u));
    r["objective"] = objective;
    r["candidate_doas"] = rec.candidate_doas;
    r["mu_opt"] = rec.mu_opt;
    r["doas"] = rec.doas;
    j["iterations"].push_back(r);
  }
  return j;
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["name"] = c.name;
  j["sweep"] = std::string(to_string(c.sweep));
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["workers"] = c.workers;
  j["output_dir"] = c.output_dir;
  Json est = Json::array();
  for (auto e : c.estimators) est.push_back(std::string(to_string(e)));
  j["estimators"] = est;
  j["geometry"] = to_json(c.geometry);
  j["baseline_geometry"] = to_json(c.baseline_ula());
  j["scenario"] = {{"doas_deg", c.doas_deg},
                   {"snr_db", c.snr_db},
                   {"n_snapshots", c.snapshots},
                   {"noise_power", c.noise_power}};
  Json kai = to_json(c.kai);
  kai["iterations"] = c.kai.iterations_for(c.sources());
  j["kai"] = kai;
  return j;
}

ExperimentConfig experiment_from_json(const Json& j) {
  require_object(j, "");
  reject_unknown(j, "", {"name", "sweep", "trials", "seed", "workers", "output_dir", "estimators",
                         "geometry", "baseline_geometry", "scenario", "kai"});
  ExperimentConfig c;
  if (j.contains("name")) c.name = as_string(j["name"], "name");
  if (j.contains("sweep")) {
    const auto s = as_string(j["sweep"], "sweep");
    if (s == "snr") {
      c.sweep = SweepKind::Snr;
    } else if (s == "snapshots") {
      c.sweep = SweepKind::Snapshots;
    } else {
      fail("sweep", "expected \"snr\" or \"snapshots\"");
    }
  }
  if (j.contains("trials")) c.trials = as_int(j["trials"], "trials");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("workers")) c.workers = as_int(j["workers"], "workers");
  if (j.contains("output_dir")) c.output_dir = as_string(j["output_dir"], "output_dir");
  if (j.contains("estimators")) {
    const auto& list = j["estimators"];
    if (!list.is_array()) fail("estimators", "expected a list of estimator names");
    c.estimators.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto field = "estimators[" + std::to_string(i) + "]";
      try {
        c.estimators.push_back(estimator_from_string(as_string(list[i], field)));
      } catch (const ConfigError&) {
        throw;
      } catch (const InvalidArgument& e) {
        fail(field, e.what());
      }
    }
  }
  if (j.contains("geometry")) c.geometry = geometry_from_json(j["geometry"], "geometry");
  if (j.contains("baseline_geometry")) {
    c.ula_geometry = geometry_from_json(j["baseline_geometry"], "baseline_geometry");
    if (c.ula_geometry->kind() != ArrayKind::Ula) fail("baseline_geometry.kind", "must be \"ula\"");
  }
  if (j.contains("scenario")) {
    const auto& s = j["scenario"];
    require_object(s, "scenario");
    reject_unknown(s, "scenario", {"doas_deg", "snr_db", "n_snapshots", "noise_power"});
    if (s.contains("doas_deg")) c.doas_deg = as_number_list(s["doas_deg"], "scenario.doas_deg");
    if (s.contains("snr_db")) c.snr_db = as_number_list(s["snr_db"], "scenario.snr_db");
    if (s.contains("n_snapshots")) c.snapshots = as_int_list(s["n_snapshots"], "scenario.n_snapshots");
    if (s.contains("noise_power")) c.noise_power = as_number(s["noise_power"], "scenario.noise_power");
  }
  if (j.contains("kai")) c.kai = kai_config_from_json(j["kai"], "kai");
  return c;
}

// ---------------------------------------------------------------------------
// TOML subset

namespace {

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  Json parse() {
    Json root = Json::object();
    Json* table = &root;
    while (!at_end()) {
      skip_blank_and_comments();
      if (at_end()) break;
      if (peek() == '[') {
        table = &open_table(root);
      } else {
        std::vector<std::string> key = parse_key();
        skip_inline_space();
        expect('=');
        skip_inline_space();
        Json value = parse_value();
        assign(*table, key, std::move(value));
      }
      end_of_line();
    }
    return root;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return at_end() ? '\0' : text_[pos_]; }
  char get() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }

  [[noreturn]] void error(std::string_view msg) const {
    throw ConfigError("TOML line " + std::to_string(line_) + ": " + std::string(msg));
  }

  void expect(char c) {
    if (peek() != c) error(std::string("expected '") + c + "'");
    get();
  }

  void skip_inline_space() {
    while (peek() == ' ' || peek() == '\t') get();
  }

  void skip_comment() {
    if (peek() == '#') {
      while (!at_end() && peek() != '\n') get();
    }
  }

  // Whitespace, newlines and comments, as allowed between array items and
  // between statements.
  void skip_blank_and_comments() {
    while (!at_end()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        skip_comment();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_space();
    skip_comment();
    if (peek() == '\r') get();
    if (!at_end() && peek() != '\n') error("unexpected trailing characters");
  }

  std::string parse_simple_key() {
    if (peek() == '"') return parse_string();
    std::string key;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-') key += get();
    if (key.empty()) error("expected a key");
    return key;
  }

  std::vector<std::string> parse_key() {
    std::vector<std::string> parts{parse_simple_key()};
    skip_inline_space();
    while (peek() == '.') {
      get();
      skip_inline_space();
      parts.push_back(parse_simple_key());
      skip_inline_space();
    }
    return parts;
  }

  Json& open_table(Json& root) {
    expect('[');
    if (peek() == '[') error("arrays of tables are not supported");
    skip_inline_space();
    const auto key = parse_key();
    expect(']');
    Json* node = &root;
    for (const auto& part : key) {
      Json& child = (*node)[part];
      if (child.is_null()) child = Json::object();
      if (!child.is_object()) error("'" + part + "' is not a table");
      node = &child;
    }
    return *node;
  }

  void assign(Json& table, const std::vector<std::string>& key, Json value) {
    Json* node = &table;
    for (std::size_t i = 0; i + 1 < key.size(); ++i) {
      Json& child = (*node)[key[i]];
      if (child.is_null()) child = Json::object();
      if (!child.is_object()) error("'" + key[i] + "' is not a table");
      node = &child;
    }
    if (node->contains(key.back())) error("duplicate key '" + key.back() + "'");
    (*node)[key.back()] = std::move(value);
  }

  std::string parse_string() {
    expect('"');
    std::string out;
    while (true) {
      if (at_end() || peek() == '\n') error("unterminated string");
      char c = get();
      if (c == '"') break;
      if (c == '\\') {
        if (at_end()) error("unterminated string");
        c = get();
        switch (c) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case '"': out += '"'; break;
          case '\\': out += '\\'; break;
          default: error("unsupported escape sequence");
        }
      } else {
        out += c;
      }
    }
    return out;
  }

  Json parse_value() {
    const char c = peek();
    if (c == '"') return parse_string();
    if (c == '[') return parse_array();
    if (c == '{') return parse_inline_table();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return parse_number();
  }

  Json parse_number() {
    std::string token;
    while (!at_end()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' || c == '_') {
        if (c != '_') token += c;
        get();
      } else {
        break;
      }
    }
    if (token.empty()) error("expected a value");
    const bool is_float = token.find_first_of(".eE") != std::string::npos || token == "inf" ||
                          token == "+inf" || token == "-inf" || token.find("nan") != std::string::npos;
    if (!is_float) {
      std::int64_t v = 0;
      const char* first = token.data() + (token[0] == '+' ? 1 : 0);
      auto res = std::from_chars(first, token.data() + token.size(), v);
      if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
        error("invalid value '" + token + "'");
      }
      if (v >= 0) return static_cast<std::uint64_t>(v);
      return v;
    }
    try {
      std::size_t used = 0;
      const double v = std::stod(token, &used);
      if (used != token.size()) error("invalid number '" + token + "'");
      return v;
    } catch (const std::logic_error&) {
      error("invalid number '" + token + "'");
    }
  }

  Json parse_array() {
    expect('[');
    Json arr = Json::array();
    skip_blank_and_comments();
    while (peek() != ']') {
      arr.push_back(parse_value());
      skip_blank_and_comments();
      if (peek() == ',') {
        get();
        skip_blank_and_comments();
      } else if (peek() != ']') {
        error("expected ',' or ']' in array");
      }
    }
    expect(']');
    return arr;
  }

  Json parse_inline_table() {
    expect('{');
    Json table = Json::object();
    skip_inline_space();
    while (peek() != '}') {
      const auto key = parse_key();
      skip_inline_space();
      expect('=');
      skip_inline_space();
      assign(table, key, parse_value());
      skip_inline_space();
      if (peek() == ',') {
        get();
        skip_inline_space();
      } else if (peek() != '}') {
        error("expected ',' or '}' in inline table");
      }
    }
    expect('}');
    return table;
  }
};

}  // namespace

Json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  if (path.extension() == ".json") {
    try {
      return Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError("config file '" + path.string() + "': " + e.what());
    }
  }
  return parse_toml(text);
}

// ---------------------------------------------------------------------------
// Matrix and spectrum dumps

void write_matrix_csv(std::ostream& os, const CMatrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) os << ',';
      os << format_number(m(r, c).real()) << ',' << format_number(m(r, c).imag());
    }
    os << '\n';
  }
}

CMatrix read_matrix_csv(std::istream& is) {
  std::vector<std::vector<Complex>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<double> vals;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() % 2) throw InvalidArgument("matrix CSV row has an odd number of fields");
    std::vector<Complex> row;
    for (std::size_t i = 0; i < vals.size(); i += 2) row.emplace_back(vals[i], vals[i + 1]);
    if (!rows.empty() && row.size() != rows.front().size()) throw InvalidArgument("ragged matrix CSV");
    rows.push_back(std::move(row));
  }
  CMatrix m(static_cast<Eigen::Index>(rows.size()),
            rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

void write_matrix_binary(std::ostream& os, const CMatrix& m) {
  const std::int64_t dims[2] = {m.rows(), m.cols()};
  os.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      const double pair[2] = {m(r, c).real(), m(r, c).imag()};
      os.write(reinterpret_cast<const char*>(pair), sizeof pair);
    }
  }
}

CMatrix read_matrix_binary(std::istream& is) {
  std::int64_t dims[2] = {0, 0};
  if (!is.read(reinterpret_cast<char*>(dims), sizeof dims) || dims[0] < 0 || dims[1] < 0) {
    throw InvalidArgument("bad matrix dump header");
  }
  CMatrix m(dims[0], dims[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double pair[2];
      if (!is.read(reinterpret_cast<char*>(pair), sizeof pair)) throw InvalidArgument("truncated matrix dump");
      m(r, c) = {pair[0], pair[1]};
    }
  }
  return m;
}

void write_spectrum_csv(std::ostream& os, const Pseudospectrum& spectrum) {
  os << "angle_deg,value\n";
  for (std::size_t g = 0; g < spectrum.grid.size(); ++g) {
    os << format_number(spectrum.grid[g]) << ',' << format_number(spectrum.values[g]) << '\n';
  }
}

}  // namespace nkai
