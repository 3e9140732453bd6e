#include "botdr/csv.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "botdr/toml.hpp"

namespace botdr::io {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // count columns are usually whole numbers; keep them easy on the eye
    if (v == std::floor(v) && std::fabs(v) < 1.0e15) {
        std::ostringstream os;
        os << static_cast<long long>(v);
        return os.str();
    }
    return TomlWriter::format_real(v);
}

double parse_num(const std::string& tok, const std::string& path, size_t line_no) {
    if (tok == "nan") return std::nan("");
    if (tok == "inf") return HUGE_VAL;
    if (tok == "-inf") return -HUGE_VAL;
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw Error(ErrorCode::ParseError,
                    path + ":" + std::to_string(line_no) + ": bad number '" + tok + "'");
    return v;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

/// Parsed '#' metadata: space-separated key=value tokens accumulated over all
/// comment lines, plus the data rows that follow the header.
struct CsvFile {
    std::map<std::string, std::string> meta;
    std::string header;
    std::vector<std::vector<std::string>> rows;
    std::vector<size_t> row_lines;
    std::string path;
};

CsvFile read_csv(const std::string& path, const char* expected_schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    CsvFile file;
    file.path = path;
    std::string line;
    size_t line_no = 0;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream toks(line.substr(1));
            std::string tok;
            while (toks >> tok) {
                const size_t eq = tok.find('=');
                if (eq != std::string::npos)
                    file.meta[tok.substr(0, eq)] = tok.substr(eq + 1);
            }
            continue;
        }
        if (!saw_header) {
            file.header = line;
            saw_header = true;
            continue;
        }
        file.rows.push_back(split(line, ','));
        file.row_lines.push_back(line_no);
    }
    const auto it = file.meta.find("schema");
    if (it == file.meta.end())
        throw Error(ErrorCode::ParseError, path + ": missing '# schema=...' line");
    if (it->second != expected_schema)
        throw Error(ErrorCode::ParseError, path + ": schema '" + it->second + "' where '" +
                                               expected_schema + "' was expected");
    if (!saw_header) throw Error(ErrorCode::ParseError, path + ": missing header row");
    return file;
}

std::string meta_str(const CsvFile& f, const std::string& key) {
    const auto it = f.meta.find(key);
    if (it == f.meta.end())
        throw Error(ErrorCode::ParseError, f.path + ": missing metadata '" + key + "'");
    return it->second;
}

double meta_real(const CsvFile& f, const std::string& key) {
    return parse_num(meta_str(f, key), f.path, 0);
}

std::vector<double> meta_list(const CsvFile& f, const std::string& key) {
    std::vector<double> out;
    for (const auto& tok : split(meta_str(f, key), ';'))
        if (!tok.empty()) out.push_back(parse_num(tok, f.path, 0));
    return out;
}

void expect_columns(const CsvFile& f, const std::vector<std::string>& row, size_t n, size_t line_no) {
    if (row.size() != n)
        throw Error(ErrorCode::ParseError, f.path + ":" + std::to_string(line_no) + ": expected " +
                                               std::to_string(n) + " columns, got " +
                                               std::to_string(row.size()));
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path + "'");
    out << content;
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for '" + path + "'");
}

std::string join_list(const std::vector<double>& values) {
    std::string out;
    for (size_t i = 0; i < values.size(); ++i) {
        if (i) out += ';';
        out += fmt(values[i]);
    }
    return out;
}

}  // namespace

std::string histogram_to_csv(const scan::ScanHistogram& hist) {
    scan::validate(hist);
    std::ostringstream os;
    os << "# schema=" << kHistogramSchema << " config=" << hist.config_hash
       << " seed=" << hist.seed << "\n";
    os << "# branch=" << calib::to_string(hist.branch)
       << " sampling=" << (hist.sampling == scan::Sampling::poisson ? "poisson" : "expected")
       << " n_steps=" << hist.n_steps << " n_bins=" << hist.n_bins << "\n";
    os << "# dwell_s=" << fmt(hist.dwell_s) << " bin_width_ns=" << fmt(hist.bin_width_ns)
       << " rep_period_ns=" << fmt(hist.rep_period_ns)
       << " group_velocity_mps=" << fmt(hist.group_velocity_mps)
       << " pulse_duration_ns=" << fmt(hist.pulse_duration_ns)
       << " dead_time_ns=" << fmt(hist.dead_time_ns) << "\n";
    os << "# voltages=" << join_list(hist.voltages) << "\n";
    os << "step_index,frequency_mhz,bin_index,range_m,counts\n";
    for (int s = 0; s < hist.n_steps; ++s)
        for (int b = 0; b < hist.n_bins; ++b)
            os << s << ',' << fmt(hist.step_frequency_mhz[s]) << ',' << b << ','
               << fmt(hist.range_m(b)) << ',' << fmt(hist.at(s, b)) << "\n";
    return os.str();
}

void write_histogram(const scan::ScanHistogram& hist, const std::string& path) {
    write_file(path, histogram_to_csv(hist));
}

scan::ScanHistogram read_histogram(const std::string& path) {
    const CsvFile f = read_csv(path, kHistogramSchema);
    scan::ScanHistogram hist;
    hist.config_hash = meta_str(f, "config");
    {
        const std::string seed = meta_str(f, "seed");
        char* end = nullptr;
        hist.seed = std::strtoull(seed.c_str(), &end, 10);
        if (end == seed.c_str() || *end != '\0')
            throw Error(ErrorCode::ParseError, path + ": bad seed '" + seed + "'");
    }
    hist.branch = calib::branch_from_string(meta_str(f, "branch"));
    {
        const std::string s = meta_str(f, "sampling");
        if (s == "poisson")
            hist.sampling = scan::Sampling::poisson;
        else if (s == "expected")
            hist.sampling = scan::Sampling::expected;
        else
            throw Error(ErrorCode::ParseError, path + ": bad sampling '" + s + "'");
    }
    hist.n_steps = static_cast<int>(meta_real(f, "n_steps"));
    hist.n_bins = static_cast<int>(meta_real(f, "n_bins"));
    hist.dwell_s = meta_real(f, "dwell_s");
    hist.bin_width_ns = meta_real(f, "bin_width_ns");
    hist.rep_period_ns = meta_real(f, "rep_period_ns");
    hist.group_velocity_mps = meta_real(f, "group_velocity_mps");
    hist.pulse_duration_ns = meta_real(f, "pulse_duration_ns");
    hist.dead_time_ns = meta_real(f, "dead_time_ns");
    hist.voltages = meta_list(f, "voltages");
    if (hist.n_steps <= 0 || hist.n_bins <= 0)
        throw Error(ErrorCode::ParseError, path + ": non-positive n_steps or n_bins");
    hist.step_frequency_mhz.assign(hist.n_steps, std::nan(""));
    hist.counts.assign(static_cast<size_t>(hist.n_steps) * hist.n_bins, std::nan(""));
    if (f.rows.size() != hist.counts.size())
        throw Error(ErrorCode::ParseError, path + ": expected " + std::to_string(hist.counts.size()) +
                                               " data rows, got " + std::to_string(f.rows.size()));
    for (size_t i = 0; i < f.rows.size(); ++i) {
        const auto& row = f.rows[i];
        const size_t ln = f.row_lines[i];
        expect_columns(f, row, 5, ln);
        const int s = static_cast<int>(parse_num(row[0], path, ln));
        const int b = static_cast<int>(parse_num(row[2], path, ln));
        if (s < 0 || s >= hist.n_steps || b < 0 || b >= hist.n_bins)
            throw Error(ErrorCode::ParseError,
                        path + ":" + std::to_string(ln) + ": step/bin index out of range");
        hist.step_frequency_mhz[s] = parse_num(row[1], path, ln);
        hist.at(s, b) = parse_num(row[4], path, ln);
    }
    scan::validate(hist);
    return hist;
}

std::string profile_to_csv(const retrieval::RetrievedProfile& profile) {
    std::ostringstream os;
    os << "# schema=" << kProfileSchema << " config=" << profile.config_hash
       << " seed=" << profile.seed << "\n";
    os << "# background=" << join_list(profile.background_per_step) << "\n";
    os << "bin_index,range_m,amplitude,nu_b_mhz,sigma_nu_mhz,omega_b_mhz,sigma_omega_mhz,"
          "temperature_c,sigma_t_c,strain_ue,sigma_strain_ue,n_iter,flags\n";
    for (const auto& r : profile.bins)
        os << r.bin << ',' << fmt(r.range_m) << ',' << fmt(r.amplitude) << ',' << fmt(r.nu_b_mhz)
           << ',' << fmt(r.sigma_nu_mhz) << ',' << fmt(r.omega_b_mhz) << ','
           << fmt(r.sigma_omega_mhz) << ',' << fmt(r.temperature_c) << ',' << fmt(r.sigma_t_c)
           << ',' << fmt(r.strain_ue) << ',' << fmt(r.sigma_strain_ue) << ',' << r.n_iter << ','
           << retrieval::flags_to_string(r.flags) << "\n";
    return os.str();
}

void write_profile(const retrieval::RetrievedProfile& profile, const std::string& path) {
    write_file(path, profile_to_csv(profile));
}

retrieval::RetrievedProfile read_profile(const std::string& path) {
    const CsvFile f = read_csv(path, kProfileSchema);
    retrieval::RetrievedProfile profile;
    profile.config_hash = meta_str(f, "config");
    {
        const std::string seed = meta_str(f, "seed");
        char* end = nullptr;
        profile.seed = std::strtoull(seed.c_str(), &end, 10);
        if (end == seed.c_str() || *end != '\0')
            throw Error(ErrorCode::ParseError, path + ": bad seed '" + seed + "'");
    }
    profile.background_per_step = meta_list(f, "background");
    for (size_t i = 0; i < f.rows.size(); ++i) {
        const auto& row = f.rows[i];
        const size_t ln = f.row_lines[i];
        expect_columns(f, row, 13, ln);
        retrieval::BinResult r;
        r.bin = static_cast<int>(parse_num(row[0], path, ln));
        r.range_m = parse_num(row[1], path, ln);
        r.amplitude = parse_num(row[2], path, ln);
        r.nu_b_mhz = parse_num(row[3], path, ln);
        r.sigma_nu_mhz = parse_num(row[4], path, ln);
        r.omega_b_mhz = parse_num(row[5], path, ln);
        r.sigma_omega_mhz = parse_num(row[6], path, ln);
        r.temperature_c = parse_num(row[7], path, ln);
        r.sigma_t_c = parse_num(row[8], path, ln);
        r.strain_ue = parse_num(row[9], path, ln);
        r.sigma_strain_ue = parse_num(row[10], path, ln);
        r.n_iter = static_cast<int>(parse_num(row[11], path, ln));
        try {
            r.flags = retrieval::flags_from_string(row[12]);
        } catch (const Error& e) {
            throw Error(ErrorCode::ParseError, path + ":" + std::to_string(ln) + ": " + e.what());
        }
        profile.bins.push_back(r);
    }
    return profile;
}

std::string trace_to_csv(const calib::CalibrationTrace& trace) {
    calib::validate(trace);
    std::ostringstream os;
    os << "# schema=" << kTraceSchema << " branch=" << calib::to_string(trace.branch) << "\n";
    os << "voltage_v,power\n";
    for (size_t i = 0; i < trace.voltage_v.size(); ++i)
        os << fmt(trace.voltage_v[i]) << ',' << fmt(trace.power[i]) << "\n";
    return os.str();
}

void write_trace(const calib::CalibrationTrace& trace, const std::string& path) {
    write_file(path, trace_to_csv(trace));
}

calib::CalibrationTrace read_trace(const std::string& path) {
    const CsvFile f = read_csv(path, kTraceSchema);
    calib::CalibrationTrace trace;
    trace.branch = calib::branch_from_string(meta_str(f, "branch"));
    for (size_t i = 0; i < f.rows.size(); ++i) {
        const auto& row = f.rows[i];
        const size_t ln = f.row_lines[i];
        expect_columns(f, row, 2, ln);
        trace.voltage_v.push_back(parse_num(row[0], path, ln));
        trace.power.push_back(parse_num(row[1], path, ln));
    }
    calib::validate(trace);
    return trace;
}

}  // namespace botdr::io
