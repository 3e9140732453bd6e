#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "botdr/errors.hpp"

namespace botdr::io {

/// Minimal TOML-subset document, sufficient for this tool's config and
/// calibration files: [table] / [[table-array]] headers, bare or dotted keys,
/// strings, integers, floats, booleans, and flat arrays.  Values are exposed
/// through dotted paths; array-of-table entries get numeric path components
/// ("fiber.segments.0.length_m").  Parse failures throw ParseError with the
/// offending line.
class TomlDoc {
  public:
    struct Value {
        enum class Kind { string, integer, real, boolean, array };
        Kind kind = Kind::string;
        std::string str;
        long long integer = 0;
        double real = 0.0;
        bool boolean = false;
        std::vector<Value> array;
        int line = 0;
    };

    static TomlDoc parse_file(const std::string& path);
    static TomlDoc parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    /// Typed getters with defaults; wrong types throw ParseError naming the
    /// key and line.  Integers promote to reals.
    double get_real(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
    std::string get_string(const std::string& key, const std::string& fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    std::vector<double> get_real_array(const std::string& key) const;  // empty when absent

    double require_real(const std::string& key) const;
    std::string require_string(const std::string& key) const;

    /// Number of entries under an array-of-tables prefix ("fiber.segments").
    size_t table_array_size(const std::string& prefix) const;

    /// All dotted keys present, for unknown-key validation.
    std::vector<std::string> keys() const;

    int line_of(const std::string& key) const;
    const std::string& origin() const { return origin_; }

  private:
    const Value* find(const std::string& key) const;
    [[noreturn]] void missing(const std::string& key) const;

    std::map<std::string, Value> values_;
    std::string origin_;
};

/// Canonical TOML emitter: fixed key order (caller-driven), shortest
/// round-trip-exact float formatting, LF line endings.  Re-serializing a
/// loaded document through the same writer reproduces the bytes exactly.
class TomlWriter {
  public:
    void comment(const std::string& text);
    void blank();
    void section(const std::string& name);
    void array_section(const std::string& name);
    void kv(const std::string& key, const std::string& value);
    void kv(const std::string& key, const char* value);
    void kv(const std::string& key, double value);
    void kv(const std::string& key, long long value);
    void kv(const std::string& key, std::uint64_t value);
    void kv(const std::string& key, int value);
    void kv(const std::string& key, bool value);
    void kv(const std::string& key, const std::vector<double>& values);
    /// Escape hatch for the rare line the typed overloads cannot express.
    void raw(const std::string& line);

    /// Shortest decimal form of v that parses back to exactly v.
    static std::string format_real(double value);

    const std::string& str() const { return out_; }

  private:
    std::string out_;
};

}  // namespace botdr::io
