#pragma once

// Small serialization helpers shared by the file formats.
//
// All floating-point output goes through format_double, which prints up to 17
// significant decimal digits; that is enough for exact IEEE-754 double
// round-trips and keeps every artifact byte-deterministic.

#include <string>
#include <vector>

namespace orbit::io {

// Shortest %.17g rendering of a double (exact round-trip).
std::string format_double(double x);

// Whole-file read/write. Throws std::runtime_error on IO failure.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

// Minimal JSON emitter. The library writes JSON through this (field order and
// number format are pinned) and parses it with a standard parser.
class JsonWriter {
 public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& name);
  JsonWriter& value(double x);
  JsonWriter& value(long long x);
  JsonWriter& value(int x) { return value(static_cast<long long>(x)); }
  JsonWriter& value(unsigned long long x);
  JsonWriter& value(bool b);
  JsonWriter& value(const std::string& s);
  JsonWriter& value(const char* s) { return value(std::string(s)); }
  JsonWriter& value(const std::vector<double>& v);

  const std::string& str() const { return out_; }

 private:
  std::string out_;
  // Tracks whether a separator is needed before the next element at the
  // current nesting level.
  std::vector<bool> need_comma_{false};

  void element_prefix();
};

}  // namespace orbit::io
