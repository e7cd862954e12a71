#include "spdh/tomlmini.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spdh::toml {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
  throw Error("toml: " + origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// strip a trailing comment, respecting quoted strings
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

bool is_bare_key(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  return true;
}

std::string parse_basic_string(const std::string& s, const std::string& origin, int line) {
  std::string out;
  for (size_t i = 1; i + 1 <= s.size(); ++i) {
    if (s[i] == '"') {
      if (i + 1 != s.size()) fail(origin, line, "trailing characters after string");
      return out;
    }
    if (s[i] == '\\') {
      ++i;
      if (i >= s.size()) fail(origin, line, "dangling escape");
      switch (s[i]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case 'r': out += '\r'; break;
        default: fail(origin, line, std::string("unsupported escape \\") + s[i]);
      }
    } else {
      out += s[i];
    }
  }
  fail(origin, line, "unterminated string");
}

Value parse_value(const std::string& raw, const std::string& origin, int line);

Array parse_array(const std::string& s, const std::string& origin, int line) {
  Array out;
  const std::string inner = s.substr(1, s.size() - 2);
  // split on top-level commas
  int depth = 0;
  bool in_str = false;
  char prev = 0;
  std::string cur;
  for (char c : inner) {
    if (c == '"' && prev != '\\') in_str = !in_str;
    if (!in_str && c == '[') ++depth;
    if (!in_str && c == ']') --depth;
    if (!in_str && c == ',' && depth == 0) {
      const std::string item = trim(cur);
      if (item.empty()) fail(origin, line, "empty array element");
      out.push_back(parse_value(item, origin, line));
      cur.clear();
      prev = c;
      continue;
    }
    cur += c;
    prev = c;
  }
  const std::string item = trim(cur);
  if (!item.empty()) out.push_back(parse_value(item, origin, line));
  return out;
}

Value parse_value(const std::string& raw, const std::string& origin, int line) {
  if (raw.empty()) fail(origin, line, "empty value");
  if (raw.front() == '"') return Value(parse_basic_string(raw, origin, line));
  if (raw.front() == '[') {
    if (raw.back() != ']') fail(origin, line, "unterminated array");
    return Value(parse_array(raw, origin, line));
  }
  if (raw == "true") return Value(true);
  if (raw == "false") return Value(false);
  const bool looks_float = raw.find_first_of(".eE") != std::string::npos ||
                           raw.find("inf") != std::string::npos ||
                           raw.find("nan") != std::string::npos;
  try {
    size_t used = 0;
    if (looks_float) {
      const double d = std::stod(raw, &used);
      if (used != raw.size()) fail(origin, line, "malformed float '" + raw + "'");
      return Value(d);
    }
    const long long i = std::stoll(raw, &used);
    if (used != raw.size()) fail(origin, line, "malformed integer '" + raw + "'");
    return Value(static_cast<std::int64_t>(i));
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(origin, line, "malformed value '" + raw + "'");
  }
}

Table* descend(Table& root, const std::string& path, const std::string& origin, int line) {
  Table* cur = &root;
  std::stringstream ss(path);
  std::string part;
  while (std::getline(ss, part, '.')) {
    part = trim(part);
    if (!is_bare_key(part)) fail(origin, line, "bad table name '" + path + "'");
    Value& v = (*cur)[part];
    if (!v.is_table()) fail(origin, line, "'" + part + "' is not a table");
    cur = &std::get<Table>(v.data);
  }
  return cur;
}

}  // namespace

Table parse(const std::string& text, const std::string& origin) {
  Table root;
  Table* current = &root;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.size() >= 4 && line.substr(0, 2) == "[[" && line.substr(line.size() - 2) == "]]") {
      const std::string name = trim(line.substr(2, line.size() - 4));
      if (!is_bare_key(name)) fail(origin, line_no, "bad table-array name '" + name + "'");
      auto it = root.find(name);
      if (it == root.end()) {
        root[name] = Value(TableArray{});
        it = root.find(name);
      }
      if (!it->second.is_table_array())
        fail(origin, line_no, "'" + name + "' is not an array of tables");
      auto& arr = std::get<TableArray>(it->second.data);
      arr.emplace_back();
      current = &arr.back();
      continue;
    }
    if (line.front() == '[' && line.back() == ']') {
      const std::string name = trim(line.substr(1, line.size() - 2));
      current = descend(root, name, origin, line_no);
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!is_bare_key(key)) fail(origin, line_no, "bad key '" + key + "'");
    if (current->count(key)) fail(origin, line_no, "duplicate key '" + key + "'");
    (*current)[key] = parse_value(value, origin, line_no);
  }
  return root;
}

Table parse_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  SPDH_REQUIRE(in.good(), "cannot open TOML file: ", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

namespace {

std::string format_scalar(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v.data)) {
    std::string out = "\"";
    for (char c : *s) {
      switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default: out += c;
      }
    }
    return out + "\"";
  }
  if (const auto* i = std::get_if<std::int64_t>(&v.data)) return std::to_string(*i);
  if (const auto* d = std::get_if<double>(&v.data)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", *d);
    std::string out = buf;
    if (out.find_first_of(".eE") == std::string::npos && out.find("inf") == std::string::npos &&
        out.find("nan") == std::string::npos)
      out += ".0";
    return out;
  }
  if (const auto* b = std::get_if<bool>(&v.data)) return *b ? "true" : "false";
  if (const auto* a = std::get_if<Array>(&v.data)) {
    std::string out = "[";
    for (size_t i = 0; i < a->size(); ++i) {
      if (i) out += ", ";
      out += format_scalar((*a)[i]);
    }
    return out + "]";
  }
  throw Error("toml: tables cannot appear as inline values");
}

void serialize_table(std::ostringstream& os, const Table& t, const std::string& prefix) {
  for (const auto& [k, v] : t)
    if (!v.is_table() && !v.is_table_array()) os << k << " = " << format_scalar(v) << "\n";
  for (const auto& [k, v] : t) {
    if (v.is_table()) {
      const std::string path = prefix.empty() ? k : prefix + "." + k;
      os << "\n[" << path << "]\n";
      serialize_table(os, std::get<Table>(v.data), path);
    }
  }
  for (const auto& [k, v] : t) {
    if (v.is_table_array()) {
      SPDH_REQUIRE(prefix.empty(), "toml: nested table arrays are not supported");
      for (const Table& entry : std::get<TableArray>(v.data)) {
        os << "\n[[" << k << "]]\n";
        for (const auto& [ek, ev] : entry) {
          SPDH_REQUIRE(!ev.is_table() && !ev.is_table_array(),
                       "toml: table-array entries must hold scalars only");
          os << ek << " = " << format_scalar(ev) << "\n";
        }
      }
    }
  }
}

}  // namespace

std::string serialize(const Table& root) {
  std::ostringstream os;
  serialize_table(os, root, "");
  return os.str();
}

void write_file(const std::filesystem::path& path, const Table& root) {
  std::ofstream out(path);
  SPDH_REQUIRE(out.good(), "cannot write TOML file: ", path.string());
  out << serialize(root);
  SPDH_REQUIRE(out.good(), "TOML write failed: ", path.string());
}

const Value* find(const Table& t, const std::string& key) {
  auto it = t.find(key);
  return it == t.end() ? nullptr : &it->second;
}

const std::string& Value::as_string(const std::string& key) const {
  const auto* s = std::get_if<std::string>(&data);
  SPDH_REQUIRE(s, "toml: '", key, "' is not a string");
  return *s;
}
std::int64_t Value::as_int(const std::string& key) const {
  const auto* i = std::get_if<std::int64_t>(&data);
  SPDH_REQUIRE(i, "toml: '", key, "' is not an integer");
  return *i;
}
double Value::as_float(const std::string& key) const {
  if (const auto* d = std::get_if<double>(&data)) return *d;
  if (const auto* i = std::get_if<std::int64_t>(&data)) return static_cast<double>(*i);
  throw Error("toml: '" + key + "' is not a number");
}
bool Value::as_bool(const std::string& key) const {
  const auto* b = std::get_if<bool>(&data);
  SPDH_REQUIRE(b, "toml: '", key, "' is not a boolean");
  return *b;
}
const Array& Value::as_array(const std::string& key) const {
  const auto* a = std::get_if<Array>(&data);
  SPDH_REQUIRE(a, "toml: '", key, "' is not an array");
  return *a;
}
const Table& Value::as_table(const std::string& key) const {
  const auto* t = std::get_if<Table>(&data);
  SPDH_REQUIRE(t, "toml: '", key, "' is not a table");
  return *t;
}
const TableArray& Value::as_table_array(const std::string& key) const {
  const auto* t = std::get_if<TableArray>(&data);
  SPDH_REQUIRE(t, "toml: '", key, "' is not an array of tables");
  return *t;
}

std::string get_string(const Table& t, const std::string& key) {
  const Value* v = find(t, key);
  SPDH_REQUIRE(v, "toml: missing key '", key, "'");
  return v->as_string(key);
}
std::string get_string_or(const Table& t, const std::string& key, const std::string& fallback) {
  const Value* v = find(t, key);
  return v ? v->as_string(key) : fallback;
}
std::int64_t get_int(const Table& t, const std::string& key) {
  const Value* v = find(t, key);
  SPDH_REQUIRE(v, "toml: missing key '", key, "'");
  return v->as_int(key);
}
std::int64_t get_int_or(const Table& t, const std::string& key, std::int64_t fallback) {
  const Value* v = find(t, key);
  return v ? v->as_int(key) : fallback;
}
double get_float(const Table& t, const std::string& key) {
  const Value* v = find(t, key);
  SPDH_REQUIRE(v, "toml: missing key '", key, "'");
  return v->as_float(key);
}
double get_float_or(const Table& t, const std::string& key, double fallback) {
  const Value* v = find(t, key);
  return v ? v->as_float(key) : fallback;
}
bool get_bool_or(const Table& t, const std::string& key, bool fallback) {
  const Value* v = find(t, key);
  return v ? v->as_bool(key) : fallback;
}
std::vector<double> get_float_array(const Table& t, const std::string& key) {
  const Value* v = find(t, key);
  SPDH_REQUIRE(v, "toml: missing key '", key, "'");
  std::vector<double> out;
  for (const Value& e : v->as_array(key)) out.push_back(e.as_float(key));
  return out;
}

}  // namespace spdh::toml
