#pragma once

// File formats shared by the command-line runner and the demos: a flat
// key = value config dialect, JSON (de)serialization of kernels and chaos
// functionals, and CSV emission with a leading `#` metadata block.
//
// Index tuples are 1-based in every on-disk format. The in-memory tensors
// are 0-based; the translation happens here and nowhere else.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "wchaos/chaos.hpp"
#include "wchaos/sym_tensor.hpp"

namespace wchaos {

using Json = nlohmann::ordered_json;

// Functionals above this dimension are almost certainly a typo in a config
// file, not a real request; the dense sampler would allocate d^q doubles.
inline constexpr int kMaxChaosDim = 512;

// ---------------------------------------------------------------------------
// Number formatting. Shortest round-trip representation, locale-free, so a
// rerun with the same seed produces byte-identical output files.

inline std::string fmt_double(double x) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

inline std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

// ---------------------------------------------------------------------------
// CSV. Separator `,`, decimal `.`, one header row, rows in deterministic
// order. Metadata lines start with `#` and precede the header.

inline std::string csv_escape(const std::string& field) {
  const bool needs_quotes =
      field.find_first_of(",\"\n\r") != std::string::npos ||
      (!field.empty() && (field.front() == ' ' || field.back() == ' '));
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  // Metadata must be written before the header row.
  void meta(const std::string& key, const std::string& value) {
    if (state_ != State::kMeta)
      throw std::logic_error("CsvWriter: metadata after header");
    out_ << "# " << key << ": " << value << "\n";
  }

  void header(const std::vector<std::string>& cols) {
    if (state_ != State::kMeta)
      throw std::logic_error("CsvWriter: duplicate header");
    width_ = cols.size();
    write_line(cols);
    state_ = State::kRows;
  }

  void row(const std::vector<std::string>& cells) {
    if (state_ != State::kRows)
      throw std::logic_error("CsvWriter: row before header");
    if (cells.size() != width_)
      throw std::logic_error("CsvWriter: row width mismatch");
    write_line(cells);
  }

 private:
  enum class State { kMeta, kRows };

  void write_line(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << csv_escape(cells[i]);
    }
    out_ << '\n';
  }

  std::ostream& out_;
  State state_ = State::kMeta;
  std::size_t width_ = 0;
};

// ---------------------------------------------------------------------------
// Config files: flat `key = value` lines, `#` comments, double-quoted
// strings, `[a, b, c]` numeric lists. Keys are parsed eagerly, values
// lazily, so type errors carry the line number of the offending entry.

class Config {
 public:
  Config() = default;

  static Config parse_string(const std::string& text, std::string name) {
    Config cfg;
    cfg.name_ = std::move(name);
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      cfg.parse_line(line, lineno);
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open config file");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str(), path);
  }

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return entries_.count(key) > 0; }
  std::size_t size() const { return entries_.size(); }

  std::string get_string(const std::string& key) const {
    const Entry& e = require(key);
    std::string_view raw = e.raw;
    if (raw.size() >= 2 && raw.front() == '"' && raw.back() == '"') {
      raw.remove_prefix(1);
      raw.remove_suffix(1);
      if (raw.find('"') != std::string_view::npos)
        fail(key, e.line, "embedded quote in string value");
      return std::string(raw);
    }
    if (raw.find('"') != std::string_view::npos)
      fail(key, e.line, "unterminated string value");
    return std::string(raw);
  }

  double get_double(const std::string& key) const {
    const Entry& e = require(key);
    return parse_double(key, e.line, e.raw);
  }

  std::uint64_t get_u64(const std::string& key) const {
    const Entry& e = require(key);
    std::uint64_t v = 0;
    if (!parse_full(e.raw, v) || e.raw.front() == '-')
      fail(key, e.line, "expected a non-negative integer, got '" + e.raw + "'");
    return v;
  }

  int get_int(const std::string& key) const {
    const Entry& e = require(key);
    int v = 0;
    if (!parse_full(e.raw, v))
      fail(key, e.line, "expected an integer, got '" + e.raw + "'");
    return v;
  }

  bool get_bool(const std::string& key) const {
    const Entry& e = require(key);
    if (e.raw == "true") return true;
    if (e.raw == "false") return false;
    fail(key, e.line, "expected true or false, got '" + e.raw + "'");
  }

  std::vector<double> get_double_list(const std::string& key) const {
    const Entry& e = require(key);
    const std::string& raw = e.raw;
    if (raw.size() < 2 || raw.front() != '[' || raw.back() != ']')
      fail(key, e.line, "expected a [..] list, got '" + raw + "'");
    std::vector<double> out;
    std::string_view body(raw.data() + 1, raw.size() - 2);
    if (trim(body).empty()) return out;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = body.find(',', start);
      const std::string_view item =
          trim(body.substr(start, comma == std::string_view::npos
                                      ? std::string_view::npos
                                      : comma - start));
      if (item.empty()) fail(key, e.line, "empty list element");
      out.push_back(parse_double(key, e.line, std::string(item)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return out;
  }

  std::string get_string_or(const std::string& key, const std::string& v) const {
    return has(key) ? get_string(key) : v;
  }
  double get_double_or(const std::string& key, double v) const {
    return has(key) ? get_double(key) : v;
  }
  std::uint64_t get_u64_or(const std::string& key, std::uint64_t v) const {
    return has(key) ? get_u64(key) : v;
  }
  int get_int_or(const std::string& key, int v) const {
    return has(key) ? get_int(key) : v;
  }
  bool get_bool_or(const std::string& key, bool v) const {
    return has(key) ? get_bool(key) : v;
  }
  std::vector<double> get_double_list_or(const std::string& key,
                                         std::vector<double> v) const {
    return has(key) ? get_double_list(key) : std::move(v);
  }

  // Rejects keys outside the allowed set; catches typos like `replcias`.
  void require_known(std::initializer_list<std::string_view> allowed) const {
    for (const auto& [key, entry] : entries_) {
      bool known = false;
      for (std::string_view a : allowed)
        if (key == a) { known = true; break; }
      if (!known) fail(key, entry.line, "unknown key");
    }
  }

 private:
  struct Entry {
    std::string raw;
    int line;
  };

  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                          s.front() == '\r'))
      s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                          s.back() == '\r'))
      s.remove_suffix(1);
    return s;
  }

  static bool valid_key(std::string_view key) {
    if (key.empty()) return false;
    auto alpha = [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    };
    if (!alpha(key.front())) return false;
    for (char c : key)
      if (!alpha(c) && !(c >= '0' && c <= '9')) return false;
    return true;
  }

  void parse_line(const std::string& line, int lineno) {
    // A `#` outside quotes starts a comment.
    std::string code;
    bool in_quotes = false;
    for (char c : line) {
      if (c == '"') in_quotes = !in_quotes;
      if (c == '#' && !in_quotes) break;
      code += c;
    }
    const std::string_view stripped = trim(code);
    if (stripped.empty()) return;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string_view::npos)
      fail_line(lineno, "expected `key = value`");
    const std::string_view key = trim(stripped.substr(0, eq));
    const std::string_view value = trim(stripped.substr(eq + 1));
    if (!valid_key(key))
      fail_line(lineno, "invalid key '" + std::string(key) + "'");
    if (value.empty())
      fail_line(lineno, "empty value for key '" + std::string(key) + "'");
    const auto [it, inserted] =
        entries_.emplace(std::string(key), Entry{std::string(value), lineno});
    if (!inserted)
      fail_line(lineno, "duplicate key '" + std::string(key) +
                            "' (first set on line " +
                            std::to_string(it->second.line) + ")");
  }

  const Entry& require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end())
      throw std::runtime_error(name_ + ": missing required key '" + key + "'");
    return it->second;
  }

  template <typename T>
  static bool parse_full(const std::string& raw, T& out) {
    const char* first = raw.data();
    const char* last = raw.data() + raw.size();
    const auto res = std::from_chars(first, last, out);
    return res.ec == std::errc() && res.ptr == last;
  }

  double parse_double(const std::string& key, int line,
                      const std::string& raw) const {
    double v = 0.0;
    if (!parse_full(raw, v))
      fail(key, line, "expected a number, got '" + raw + "'");
    return v;
  }

  [[noreturn]] void fail(const std::string& key, int line,
                         const std::string& msg) const {
    throw std::runtime_error(name_ + ":" + std::to_string(line) + ": " + msg +
                             " (key '" + key + "')");
  }

  [[noreturn]] void fail_line(int line, const std::string& msg) const {
    throw std::runtime_error(name_ + ":" + std::to_string(line) + ": " + msg);
  }

  std::string name_;
  std::map<std::string, Entry> entries_;
};

// ---------------------------------------------------------------------------
// JSON kernels and functionals.
//
//   tensor      {"order": q, "dim": d, "entries": [{"tuple": [i1..iq],
//                "value": x}, ...]}              tuples 1-based, any order
//   functional  {"id": "name", "dim": d, "terms": [{"q": q, "tensor": ...}]}
//   file        {"functionals": [functional, ...]}

inline Json tensor_to_json(const SymTensor& f) {
  Json entries = Json::array();
  for (const auto& [tuple, value] : f.coeffs()) {
    Json idx = Json::array();
    for (int i : tuple) idx.push_back(i + 1);
    entries.push_back(Json{{"tuple", std::move(idx)}, {"value", value}});
  }
  return Json{{"order", f.order()}, {"dim", f.dim()}, {"entries", entries}};
}

namespace detail {

[[noreturn]] inline void json_fail(const std::string& where,
                                   const std::string& msg) {
  throw std::runtime_error(where + ": " + msg);
}

inline int json_int(const Json& j, const char* field, const std::string& where) {
  if (!j.contains(field) || !j[field].is_number_integer())
    json_fail(where, std::string("missing or non-integer '") + field + "'");
  return j[field].get<int>();
}

}  // namespace detail

inline SymTensor tensor_from_json(const Json& j,
                                  const std::string& where = "tensor") {
  if (!j.is_object()) detail::json_fail(where, "expected an object");
  const int order = detail::json_int(j, "order", where);
  const int dim = detail::json_int(j, "dim", where);
  if (order < 0 || order > kMaxChaosOrder)
    detail::json_fail(where, "order " + std::to_string(order) +
                                 " outside [0, " +
                                 std::to_string(kMaxChaosOrder) + "]");
  if (dim < 1 || dim > kMaxChaosDim)
    detail::json_fail(where, "dim " + std::to_string(dim) + " outside [1, " +
                                 std::to_string(kMaxChaosDim) + "]");
  if (!j.contains("entries") || !j["entries"].is_array())
    detail::json_fail(where, "missing 'entries' array");
  SymTensor f(order, dim);
  std::map<IndexTuple, bool> seen;
  for (const Json& e : j["entries"]) {
    if (!e.is_object() || !e.contains("tuple") || !e["tuple"].is_array() ||
        !e.contains("value") || !e["value"].is_number())
      detail::json_fail(where, "entry must be {\"tuple\": [..], \"value\": x}");
    const Json& tup = e["tuple"];
    if (static_cast<int>(tup.size()) != order)
      detail::json_fail(where, "tuple length " + std::to_string(tup.size()) +
                                   " != order " + std::to_string(order));
    IndexTuple idx;
    idx.reserve(tup.size());
    for (const Json& c : tup) {
      if (!c.is_number_integer())
        detail::json_fail(where, "tuple entries must be integers");
      const int i = c.get<int>();
      if (i < 1 || i > dim)
        detail::json_fail(where, "index " + std::to_string(i) +
                                     " outside [1, " + std::to_string(dim) +
                                     "]");
      idx.push_back(i - 1);
    }
    std::sort(idx.begin(), idx.end());
    const double value = e["value"].get<double>();
    if (!std::isfinite(value))
      detail::json_fail(where, "non-finite coefficient");
    if (!seen.emplace(idx, true).second)
      detail::json_fail(where, "duplicate tuple (up to reordering)");
    f.set(idx, value);
  }
  return f;
}

inline Json chaos_to_json(const ChaosVector& F) {
  Json terms = Json::array();
  for (const auto& [q, f] : F.terms())
    terms.push_back(Json{{"q", q}, {"tensor", tensor_to_json(f)}});
  return Json{{"dim", F.dim()}, {"terms", terms}};
}

inline ChaosVector chaos_from_json(const Json& j,
                                   const std::string& where = "functional") {
  if (!j.is_object()) detail::json_fail(where, "expected an object");
  const int dim = detail::json_int(j, "dim", where);
  if (dim < 1 || dim > kMaxChaosDim)
    detail::json_fail(where, "dim " + std::to_string(dim) + " outside [1, " +
                                 std::to_string(kMaxChaosDim) + "]");
  if (!j.contains("terms") || !j["terms"].is_array())
    detail::json_fail(where, "missing 'terms' array");
  ChaosVector F(dim);
  std::map<int, bool> seen;
  for (const Json& t : j["terms"]) {
    if (!t.is_object()) detail::json_fail(where, "term must be an object");
    const int q = detail::json_int(t, "q", where);
    if (!t.contains("tensor"))
      detail::json_fail(where, "term missing 'tensor'");
    if (!seen.emplace(q, true).second)
      detail::json_fail(where, "duplicate chaos order " + std::to_string(q));
    const SymTensor f = tensor_from_json(
        t["tensor"], where + ": q=" + std::to_string(q) + " tensor");
    if (f.order() != q)
      detail::json_fail(where, "tensor order " + std::to_string(f.order()) +
                                   " != term q " + std::to_string(q));
    if (f.dim() != dim)
      detail::json_fail(where, "tensor dim " + std::to_string(f.dim()) +
                                   " != functional dim " +
                                   std::to_string(dim));
    F.add_term(q, f);
  }
  return F;
}

struct NamedFunctional {
  std::string id;
  ChaosVector F;
};

inline Json functionals_to_json(const std::vector<NamedFunctional>& fs) {
  Json arr = Json::array();
  for (const auto& nf : fs) {
    Json f = chaos_to_json(nf.F);
    arr.push_back(Json{{"id", nf.id},
                       {"dim", f["dim"]},
                       {"terms", std::move(f["terms"])}});
  }
  return Json{{"functionals", std::move(arr)}};
}

inline std::vector<NamedFunctional> functionals_from_json(
    const Json& j, const std::string& where = "functionals") {
  if (!j.is_object() || !j.contains("functionals") ||
      !j["functionals"].is_array())
    detail::json_fail(where, "expected {\"functionals\": [..]}");
  std::vector<NamedFunctional> out;
  std::map<std::string, bool> ids;
  for (const Json& f : j["functionals"]) {
    if (!f.is_object() || !f.contains("id") || !f["id"].is_string())
      detail::json_fail(where, "functional missing string 'id'");
    const std::string id = f["id"].get<std::string>();
    if (id.empty()) detail::json_fail(where, "empty functional id");
    if (!ids.emplace(id, true).second)
      detail::json_fail(where, "duplicate functional id '" + id + "'");
    out.push_back(NamedFunctional{id, chaos_from_json(f, where + ": '" + id + "'")});
  }
  if (out.empty()) detail::json_fail(where, "no functionals in file");
  return out;
}

// ---------------------------------------------------------------------------
// Whole-file helpers.

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open file for writing");
  out << content;
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline Json load_json_file(const std::string& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

}  // namespace wchaos
