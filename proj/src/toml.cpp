#include "botdr/toml.hpp"

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace botdr::io {

namespace {

[[noreturn]] void fail(const std::string& origin, int line, const std::string& msg) {
    throw Error(ErrorCode::ParseError, origin + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

bool bare_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

void check_key_path(const std::string& key, const std::string& origin, int line) {
    if (key.empty()) fail(origin, line, "empty key");
    bool comp = false;
    for (char c : key) {
        if (c == '.') {
            if (!comp) fail(origin, line, "empty key component in '" + key + "'");
            comp = false;
        } else if (bare_key_char(c)) {
            comp = true;
        } else {
            fail(origin, line, std::string("unsupported character '") + c + "' in key '" + key + "'");
        }
    }
    if (!comp) fail(origin, line, "key '" + key + "' ends with a dot");
}

/// Remove a trailing comment, respecting quoted strings.
std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_str = false;
            }
        } else if (c == '"') {
            in_str = true;
        } else if (c == '#') {
            return s.substr(0, i);
        }
    }
    return s;
}

int bracket_balance(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    for (size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_str) {
            if (c == '\\')
                ++i;
            else if (c == '"')
                in_str = false;
        } else if (c == '"') {
            in_str = true;
        } else if (c == '[') {
            ++depth;
        } else if (c == ']') {
            --depth;
        }
    }
    return depth;
}

std::string parse_basic_string(const std::string& text, size_t& pos, const std::string& origin,
                               int line) {
    // pos points at the opening quote
    std::string out;
    for (size_t i = pos + 1; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '\\') {
            if (i + 1 >= text.size()) fail(origin, line, "dangling escape in string");
            const char e = text[++i];
            switch (e) {
                case '"': out += '"'; break;
                case '\\': out += '\\'; break;
                case 'n': out += '\n'; break;
                case 't': out += '\t'; break;
                case 'r': out += '\r'; break;
                default: fail(origin, line, std::string("unsupported escape '\\") + e + "'");
            }
        } else if (c == '"') {
            pos = i + 1;
            return out;
        } else {
            out += c;
        }
    }
    fail(origin, line, "unterminated string");
}

TomlDoc::Value parse_value(const std::string& raw, const std::string& origin, int line);

TomlDoc::Value parse_array(const std::string& raw, const std::string& origin, int line) {
    TomlDoc::Value v;
    v.kind = TomlDoc::Value::Kind::array;
    v.line = line;
    // split on top-level commas; raw starts at the opening bracket
    int depth = 0;
    bool in_str = false;
    bool closed = false;
    std::string cur;
    auto flush = [&]() {
        const std::string t = trim(cur);
        cur.clear();
        if (t.empty()) return;
        v.array.push_back(parse_value(t, origin, line));
    };
    size_t i = 1;
    for (; i < raw.size(); ++i) {
        const char c = raw[i];
        if (in_str) {
            cur += c;
            if (c == '\\' && i + 1 < raw.size())
                cur += raw[++i];
            else if (c == '"')
                in_str = false;
            continue;
        }
        if (c == '"') {
            in_str = true;
            cur += c;
        } else if (c == '[') {
            ++depth;
            cur += c;
        } else if (c == ']') {
            if (depth == 0) {
                closed = true;
                break;
            }
            --depth;
            cur += c;
        } else if (c == ',' && depth == 0) {
            flush();
        } else {
            cur += c;
        }
    }
    if (!closed) fail(origin, line, "unterminated array");
    if (!trim(raw.substr(i + 1)).empty()) fail(origin, line, "trailing characters after array");
    flush();
    return v;
}

TomlDoc::Value parse_value(const std::string& raw, const std::string& origin, int line) {
    TomlDoc::Value v;
    v.line = line;
    if (raw.empty()) fail(origin, line, "missing value");
    if (raw.front() == '"') {
        size_t pos = 0;
        v.kind = TomlDoc::Value::Kind::string;
        v.str = parse_basic_string(raw, pos, origin, line);
        if (!trim(raw.substr(pos)).empty())
            fail(origin, line, "trailing characters after string value");
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') fail(origin, line, "unterminated array");
        return parse_array(raw, origin, line);
    }
    if (raw == "true" || raw == "false") {
        v.kind = TomlDoc::Value::Kind::boolean;
        v.boolean = raw == "true";
        return v;
    }
    // number: integer when it looks like one, float otherwise
    bool integral = true;
    for (size_t i = 0; i < raw.size(); ++i) {
        const char c = raw[i];
        if (i == 0 && (c == '+' || c == '-')) continue;
        if (!std::isdigit(static_cast<unsigned char>(c))) {
            integral = false;
            break;
        }
    }
    if (integral) {
        errno = 0;
        char* end = nullptr;
        if (raw.front() != '-') {
            const unsigned long long u = std::strtoull(raw.c_str(), &end, 10);
            if (errno == ERANGE || end != raw.c_str() + raw.size())
                fail(origin, line, "invalid integer '" + raw + "'");
            v.integer = static_cast<long long>(u);
        } else {
            const long long i = std::strtoll(raw.c_str(), &end, 10);
            if (errno == ERANGE || end != raw.c_str() + raw.size())
                fail(origin, line, "invalid integer '" + raw + "'");
            v.integer = i;
        }
        v.kind = TomlDoc::Value::Kind::integer;
        v.str = raw;  // keep raw digits for unsigned reads
        return v;
    }
    errno = 0;
    char* end = nullptr;
    const double d = std::strtod(raw.c_str(), &end);
    if (end != raw.c_str() + raw.size() || end == raw.c_str())
        fail(origin, line, "invalid value '" + raw + "'");
    if (!std::isfinite(d)) fail(origin, line, "non-finite number '" + raw + "'");
    v.kind = TomlDoc::Value::Kind::real;
    v.real = d;
    return v;
}

}  // namespace

TomlDoc TomlDoc::parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_string(ss.str(), path);
}

TomlDoc TomlDoc::parse_string(const std::string& text, const std::string& origin) {
    TomlDoc doc;
    doc.origin_ = origin;

    std::istringstream in(text);
    std::string line;
    std::string prefix;
    std::map<std::string, int> array_counts;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::string s = trim(strip_comment(line));
        if (s.empty()) continue;

        if (s.size() >= 4 && s.substr(0, 2) == "[[") {
            if (s.substr(s.size() - 2) != "]]") fail(origin, lineno, "malformed table-array header");
            const std::string name = trim(s.substr(2, s.size() - 4));
            check_key_path(name, origin, lineno);
            prefix = name + "." + std::to_string(array_counts[name]++);
            continue;
        }
        if (s.front() == '[') {
            if (s.back() != ']') fail(origin, lineno, "malformed table header");
            const std::string name = trim(s.substr(1, s.size() - 2));
            check_key_path(name, origin, lineno);
            prefix = name;
            continue;
        }

        const size_t eq = s.find('=');
        if (eq == std::string::npos) fail(origin, lineno, "expected 'key = value'");
        const std::string key = trim(s.substr(0, eq));
        check_key_path(key, origin, lineno);
        std::string value_text = trim(s.substr(eq + 1));

        // multi-line arrays: keep consuming lines until brackets balance
        int balance = bracket_balance(value_text);
        while (balance > 0 && std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            const std::string cont = strip_comment(line);
            value_text += " " + trim(cont);
            balance = bracket_balance(value_text);
        }
        if (balance != 0) fail(origin, lineno, "unbalanced brackets in value");

        const std::string full = prefix.empty() ? key : prefix + "." + key;
        if (doc.values_.count(full)) fail(origin, lineno, "duplicate key '" + full + "'");
        doc.values_[full] = parse_value(value_text, origin, lineno);
    }
    return doc;
}

const TomlDoc::Value* TomlDoc::find(const std::string& key) const {
    const auto it = values_.find(key);
    return it == values_.end() ? nullptr : &it->second;
}

void TomlDoc::missing(const std::string& key) const {
    throw Error(ErrorCode::ParseError, origin_ + ": missing required key '" + key + "'");
}

double TomlDoc::get_real(const std::string& key, double fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind == Value::Kind::real) return v->real;
    if (v->kind == Value::Kind::integer) return static_cast<double>(v->integer);
    throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" + key +
                                           "' must be a number");
}

long long TomlDoc::get_int(const std::string& key, long long fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind == Value::Kind::integer) return v->integer;
    throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" + key +
                                           "' must be an integer");
}

std::uint64_t TomlDoc::get_uint(const std::string& key, std::uint64_t fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind != Value::Kind::integer || (!v->str.empty() && v->str.front() == '-'))
        throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" +
                                               key + "' must be a non-negative integer");
    return std::strtoull(v->str.c_str(), nullptr, 10);
}

std::string TomlDoc::get_string(const std::string& key, const std::string& fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind == Value::Kind::string) return v->str;
    throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" + key +
                                           "' must be a string");
}

bool TomlDoc::get_bool(const std::string& key, bool fallback) const {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->kind == Value::Kind::boolean) return v->boolean;
    throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" + key +
                                           "' must be a boolean");
}

std::vector<double> TomlDoc::get_real_array(const std::string& key) const {
    const Value* v = find(key);
    if (!v) return {};
    if (v->kind != Value::Kind::array)
        throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" +
                                               key + "' must be an array");
    std::vector<double> out;
    out.reserve(v->array.size());
    for (const auto& e : v->array) {
        if (e.kind == Value::Kind::real)
            out.push_back(e.real);
        else if (e.kind == Value::Kind::integer)
            out.push_back(static_cast<double>(e.integer));
        else
            throw Error(ErrorCode::ParseError, origin_ + ":" + std::to_string(v->line) + ": key '" +
                                                   key + "' must contain only numbers");
    }
    return out;
}

double TomlDoc::require_real(const std::string& key) const {
    if (!has(key)) missing(key);
    return get_real(key, 0.0);
}

std::string TomlDoc::require_string(const std::string& key) const {
    if (!has(key)) missing(key);
    return get_string(key, "");
}

size_t TomlDoc::table_array_size(const std::string& prefix) const {
    size_t count = 0;
    const std::string p = prefix + ".";
    for (const auto& [key, value] : values_) {
        (void)value;
        if (key.size() <= p.size() || key.compare(0, p.size(), p) != 0) continue;
        const size_t dot = key.find('.', p.size());
        if (dot == std::string::npos) continue;
        const std::string idx = key.substr(p.size(), dot - p.size());
        if (idx.empty() || idx.find_first_not_of("0123456789") != std::string::npos) continue;
        count = std::max(count, static_cast<size_t>(std::strtoull(idx.c_str(), nullptr, 10)) + 1);
    }
    return count;
}

std::vector<std::string> TomlDoc::keys() const {
    std::vector<std::string> out;
    out.reserve(values_.size());
    for (const auto& [key, value] : values_) {
        (void)value;
        out.push_back(key);
    }
    return out;
}

int TomlDoc::line_of(const std::string& key) const {
    const Value* v = find(key);
    return v ? v->line : 0;
}

// ---------------------------------------------------------------------------

void TomlWriter::comment(const std::string& text) { out_ += "# " + text + "\n"; }

void TomlWriter::blank() { out_ += "\n"; }

void TomlWriter::section(const std::string& name) {
    if (!out_.empty()) out_ += "\n";
    out_ += "[" + name + "]\n";
}

void TomlWriter::array_section(const std::string& name) {
    if (!out_.empty()) out_ += "\n";
    out_ += "[[" + name + "]]\n";
}

void TomlWriter::kv(const std::string& key, const std::string& value) {
    std::string esc;
    for (char c : value) {
        switch (c) {
            case '"': esc += "\\\""; break;
            case '\\': esc += "\\\\"; break;
            case '\n': esc += "\\n"; break;
            case '\t': esc += "\\t"; break;
            case '\r': esc += "\\r"; break;
            default: esc += c;
        }
    }
    out_ += key + " = \"" + esc + "\"\n";
}

void TomlWriter::kv(const std::string& key, const char* value) { kv(key, std::string(value)); }

void TomlWriter::kv(const std::string& key, double value) {
    out_ += key + " = " + format_real(value) + "\n";
}

void TomlWriter::kv(const std::string& key, long long value) {
    out_ += key + " = " + std::to_string(value) + "\n";
}

void TomlWriter::kv(const std::string& key, std::uint64_t value) {
    out_ += key + " = " + std::to_string(value) + "\n";
}

void TomlWriter::kv(const std::string& key, int value) { kv(key, static_cast<long long>(value)); }

void TomlWriter::kv(const std::string& key, bool value) {
    out_ += key + " = " + (value ? "true" : "false") + "\n";
}

void TomlWriter::kv(const std::string& key, const std::vector<double>& values) {
    out_ += key + " = [";
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out_ += ", ";
        out_ += format_real(values[i]);
    }
    out_ += "]\n";
}

void TomlWriter::raw(const std::string& line) { out_ += line + "\n"; }

std::string TomlWriter::format_real(double value) {
    if (!std::isfinite(value))
        throw Error(ErrorCode::ValidationError, "cannot serialize a non-finite number");
    char buf[48];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, value);
        if (std::strtod(buf, nullptr) == value) break;
    }
    std::string s = buf;
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

}  // namespace botdr::io
