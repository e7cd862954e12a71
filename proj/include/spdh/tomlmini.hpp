#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "spdh/error.hpp"

namespace spdh::toml {

// Strict subset of TOML, enough for this project's manifests and run
// configs: bare keys, basic strings, integers, floats, booleans, single-line
// arrays, [table] and [[array-of-table]] headers. Anything else is a parse
// error on purpose.

struct Value;
using Table = std::map<std::string, Value>;
using Array = std::vector<Value>;
using TableArray = std::vector<Table>;

struct Value {
  std::variant<std::string, std::int64_t, double, bool, Array, Table, TableArray> data;

  Value() : data(Table{}) {}
  Value(const char* s) : data(std::string(s)) {}
  Value(std::string s) : data(std::move(s)) {}
  Value(std::int64_t i) : data(i) {}
  Value(int i) : data(static_cast<std::int64_t>(i)) {}
  Value(double d) : data(d) {}
  Value(bool b) : data(b) {}
  Value(Array a) : data(std::move(a)) {}
  Value(Table t) : data(std::move(t)) {}
  Value(TableArray t) : data(std::move(t)) {}

  bool is_table() const { return std::holds_alternative<Table>(data); }
  bool is_table_array() const { return std::holds_alternative<TableArray>(data); }

  const std::string& as_string(const std::string& key) const;
  std::int64_t as_int(const std::string& key) const;
  double as_float(const std::string& key) const;  // ints promote
  bool as_bool(const std::string& key) const;
  const Array& as_array(const std::string& key) const;
  const Table& as_table(const std::string& key) const;
  const TableArray& as_table_array(const std::string& key) const;
};

Table parse(const std::string& text, const std::string& origin = "<string>");
Table parse_file(const std::filesystem::path& path);

std::string serialize(const Table& root);
void write_file(const std::filesystem::path& path, const Table& root);

// lookup helpers; the *_or forms return the fallback when the key is absent
const Value* find(const Table& t, const std::string& key);
std::string get_string(const Table& t, const std::string& key);
std::string get_string_or(const Table& t, const std::string& key, const std::string& fallback);
std::int64_t get_int(const Table& t, const std::string& key);
std::int64_t get_int_or(const Table& t, const std::string& key, std::int64_t fallback);
double get_float(const Table& t, const std::string& key);
double get_float_or(const Table& t, const std::string& key, double fallback);
bool get_bool_or(const Table& t, const std::string& key, bool fallback);
std::vector<double> get_float_array(const Table& t, const std::string& key);

}  // namespace spdh::toml
