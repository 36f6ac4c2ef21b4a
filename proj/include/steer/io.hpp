#pragma once

// State specifications, measure files and number formatting shared by the
// command-line front end.
//
// State spec (JSON, "format": 1), exactly one of:
//   {"dense": [[re, im] x 16]}                   row-major 4x4 density matrix
//   {"dense": [[[re, im] x 4] x 4]}              same, nested by row
//   {"theta": [[...4] x 4]}                      Pauli coordinates Theta_ij
//   {"family": "werner", "p": 0.3}               also "bell" {index}, "tstate" {t1, t2, t3}
// Inline family form for the command line: werner:p=0.3, bell:index=3,
// tstate:t1=0.5,t2=-0.4,t3=0.3.
//
// Measure files: text, one atom per line "weight x y z" ('#' starts a comment),
// or JSON {"format": 1, "atoms": [[w, x, y, z], ...]} when the name ends in .json.

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "steer/ansatz.hpp"
#include "steer/qstate.hpp"

namespace steer {

using json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct FamilySpec {
  std::string name;
  std::map<std::string, double> params;
};

struct StateSpec {
  std::variant<CMat4, Mat4, FamilySpec> value;
};

/// Shortest decimal that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, "cannot open '" + path + "'");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Parse, "cannot write '" + path + "'");
  out << content;
}

namespace detail {

inline json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into a line number.
    std::size_t line = 1;
    for (std::size_t i = 0; i < std::min<std::size_t>(e.byte, text.size()); ++i)
      if (text[i] == '\n') ++line;
    std::ostringstream os;
    os << origin << ":" << line << ": " << e.what();
    throw Error(ErrorKind::Parse, os.str());
  }
}

inline double number_at(const json& j, const std::string& field) {
  if (!j.is_number()) throw Error(ErrorKind::Parse, "field '" + field + "' must be a number");
  return j.get<double>();
}

inline void check_format(const json& j) {
  if (j.contains("format") && !(j["format"].is_number_integer() && j["format"] == kFormatVersion))
    throw Error(ErrorKind::Parse, "field 'format': only version 1 is supported");
}

inline Complex complex_at(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 2)
    throw Error(ErrorKind::Parse, "field '" + field + "' must be a [re, im] pair");
  return {number_at(j[0], field + "[0]"), number_at(j[1], field + "[1]")};
}

inline FamilySpec parse_inline_family(std::string_view text) {
  FamilySpec f;
  const auto colon = text.find(':');
  f.name = std::string(text.substr(0, colon));
  if (colon == std::string_view::npos) return f;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::Parse, "family parameter '" + std::string(item) + "' needs name=value");
    const std::string key(item.substr(0, eq));
    const std::string val(item.substr(eq + 1));
    double v = 0.0;
    const auto res = std::from_chars(val.data(), val.data() + val.size(), v);
    if (res.ec != std::errc() || res.ptr != val.data() + val.size())
      throw Error(ErrorKind::Parse, "family parameter '" + key + "': '" + val + "' is not a number");
    f.params[key] = v;
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return f;
}

inline bool is_family_name(std::string_view name) {
  return name == "werner" || name == "bell" || name == "tstate";
}

}  // namespace detail

inline StateSpec state_spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, "state spec must be a JSON object");
  detail::check_format(j);
  const int present = int(j.contains("dense")) + int(j.contains("theta")) + int(j.contains("family"));
  if (present != 1)
    throw Error(ErrorKind::Parse, "state spec needs exactly one of 'dense', 'theta', 'family'");

  if (j.contains("dense")) {
    const json& d = j["dense"];
    CMat4 rho;
    if (d.is_array() && d.size() == 16) {
      for (int k = 0; k < 16; ++k)
        rho(k / 4, k % 4) = detail::complex_at(d[static_cast<std::size_t>(k)],
                                               "dense[" + std::to_string(k) + "]");
    } else if (d.is_array() && d.size() == 4) {
      for (int r = 0; r < 4; ++r) {
        const json& row = d[static_cast<std::size_t>(r)];
        if (!row.is_array() || row.size() != 4)
          throw Error(ErrorKind::Parse, "field 'dense[" + std::to_string(r) + "]' must have 4 entries");
        for (int c = 0; c < 4; ++c)
          rho(r, c) = detail::complex_at(
              row[static_cast<std::size_t>(c)],
              "dense[" + std::to_string(r) + "][" + std::to_string(c) + "]");
      }
    } else {
      throw Error(ErrorKind::Parse, "field 'dense' must hold 16 pairs or 4 rows of 4 pairs");
    }
    return {rho};
  }
  if (j.contains("theta")) {
    const json& t = j["theta"];
    if (!t.is_array() || t.size() != 4) throw Error(ErrorKind::Parse, "field 'theta' must have 4 rows");
    Mat4 theta;
    for (int r = 0; r < 4; ++r) {
      const json& row = t[static_cast<std::size_t>(r)];
      if (!row.is_array() || row.size() != 4)
        throw Error(ErrorKind::Parse, "field 'theta[" + std::to_string(r) + "]' must have 4 entries");
      for (int c = 0; c < 4; ++c)
        theta(r, c) = detail::number_at(row[static_cast<std::size_t>(c)],
                                        "theta[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return {theta};
  }
  FamilySpec f;
  if (!j["family"].is_string()) throw Error(ErrorKind::Parse, "field 'family' must be a string");
  f.name = j["family"].get<std::string>();
  const json& params = j.contains("params") ? j["params"] : j;
  for (const auto& [key, val] : params.items()) {
    if (key == "family" || key == "format" || key == "params") continue;
    f.params[key] = detail::number_at(val, key);
  }
  return {f};
}

/// Inline family string, literal JSON, or the path of a JSON file.
inline StateSpec parse_state_spec(std::string_view text) {
  if (!text.empty() && text.front() == '{')
    return state_spec_from_json(detail::parse_json(std::string(text), "<inline>"));
  const auto name = text.substr(0, text.find(':'));
  if (detail::is_family_name(name)) return {detail::parse_inline_family(text)};
  const std::string path(text);
  return state_spec_from_json(detail::parse_json(read_file(path), path));
}

inline json to_json(const StateSpec& spec) {
  json j;
  j["format"] = kFormatVersion;
  if (const auto* rho = std::get_if<CMat4>(&spec.value)) {
    json d = json::array();
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) d.push_back({(*rho)(r, c).real(), (*rho)(r, c).imag()});
    j["dense"] = d;
  } else if (const auto* theta = std::get_if<Mat4>(&spec.value)) {
    json t = json::array();
    for (int r = 0; r < 4; ++r) {
      json row = json::array();
      for (int c = 0; c < 4; ++c) row.push_back((*theta)(r, c));
      t.push_back(row);
    }
    j["theta"] = t;
  } else {
    const auto& f = std::get<FamilySpec>(spec.value);
    j["family"] = f.name;
    for (const auto& [k, v] : f.params) j[k] = v;
  }
  return j;
}

namespace detail {

inline double family_param(const FamilySpec& f, const std::string& key) {
  const auto it = f.params.find(key);
  if (it == f.params.end())
    throw Error(ErrorKind::Parse, "family '" + f.name + "' needs parameter '" + key + "'");
  return it->second;
}

}  // namespace detail

/// Builds and validates the state. Family parameters are checked by
/// reconstructing rho and testing its spectrum.
inline TwoQubitState realize(const StateSpec& spec) {
  if (const auto* rho = std::get_if<CMat4>(&spec.value)) return TwoQubitState::from_matrix(*rho);
  if (const auto* theta = std::get_if<Mat4>(&spec.value)) return TwoQubitState::from_theta(*theta);
  const auto& f = std::get<FamilySpec>(spec.value);
  if (f.name == "werner") return werner_state(detail::family_param(f, "p"));
  if (f.name == "bell") {
    const double idx = detail::family_param(f, "index");
    if (idx != std::floor(idx)) throw Error(ErrorKind::Parse, "bell index must be an integer");
    return bell_state(static_cast<int>(idx));
  }
  if (f.name == "tstate")
    return tstate(Vec3(detail::family_param(f, "t1"), detail::family_param(f, "t2"),
                       detail::family_param(f, "t3")));
  throw Error(ErrorKind::Parse, "unknown family '" + f.name + "' (werner, bell, tstate)");
}

// Measure files.

inline std::string measure_to_text(const SphereMeasure& m) {
  std::string out = "# steer measure format 1: weight x y z\n";
  for (const auto& a : m.atoms) {
    out += format_double(a.weight) + ' ' + format_double(a.n.x()) + ' ' + format_double(a.n.y()) +
           ' ' + format_double(a.n.z()) + '\n';
  }
  return out;
}

inline SphereMeasure measure_from_text(const std::string& text, const std::string& origin = "<text>") {
  SphereMeasure m;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::vector<double> vals;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      while (p < end && (*p == ' ' || *p == '\t' || *p == '\r' || *p == ',')) ++p;
      if (p == end) break;
      double v = 0.0;
      const auto res = std::from_chars(p, end, v);
      if (res.ec != std::errc()) {
        std::ostringstream os;
        os << origin << ":" << lineno << ": expected a number";
        throw Error(ErrorKind::Parse, os.str());
      }
      vals.push_back(v);
      p = res.ptr;
    }
    if (vals.empty()) continue;
    if (vals.size() != 4) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": expected 'weight x y z', got " << vals.size() << " numbers";
      throw Error(ErrorKind::Parse, os.str());
    }
    m.atoms.push_back({vals[0], Vec3(vals[1], vals[2], vals[3])});
  }
  m.symmetric = m.has_antipodal_pairs();
  m.barycenter_target = m.barycenter();
  return m;
}

inline json measure_to_json(const SphereMeasure& m) {
  json atoms = json::array();
  for (const auto& a : m.atoms) atoms.push_back({a.weight, a.n.x(), a.n.y(), a.n.z()});
  return {{"format", kFormatVersion},
          {"symmetric", m.symmetric},
          {"barycenter_target", {m.barycenter_target.x(), m.barycenter_target.y(), m.barycenter_target.z()}},
          {"atoms", atoms}};
}

inline SphereMeasure measure_from_json(const json& j) {
  detail::check_format(j);
  if (!j.contains("atoms") || !j["atoms"].is_array())
    throw Error(ErrorKind::Parse, "measure needs an 'atoms' array");
  SphereMeasure m;
  std::size_t k = 0;
  for (const auto& a : j["atoms"]) {
    const std::string field = "atoms[" + std::to_string(k++) + "]";
    if (!a.is_array() || a.size() != 4)
      throw Error(ErrorKind::Parse, "field '" + field + "' must be [w, x, y, z]");
    m.atoms.push_back({detail::number_at(a[0], field), Vec3(detail::number_at(a[1], field),
                                                            detail::number_at(a[2], field),
                                                            detail::number_at(a[3], field))});
  }
  m.symmetric = m.has_antipodal_pairs();
  if (j.contains("barycenter_target")) {
    const auto& b = j["barycenter_target"];
    m.barycenter_target = Vec3(detail::number_at(b.at(0), "barycenter_target"),
                               detail::number_at(b.at(1), "barycenter_target"),
                               detail::number_at(b.at(2), "barycenter_target"));
  } else {
    m.barycenter_target = m.barycenter();
  }
  return m;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline SphereMeasure load_measure(const std::string& path) {
  const std::string text = read_file(path);
  if (ends_with(path, ".json")) return measure_from_json(detail::parse_json(text, path));
  return measure_from_text(text, path);
}

inline void save_measure(const SphereMeasure& m, const std::string& path) {
  write_file(path, ends_with(path, ".json") ? measure_to_json(m).dump(1) + "\n" : measure_to_text(m));
}

}  // namespace steer
