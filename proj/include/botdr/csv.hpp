#pragma once

// CSV on disk: one schema line, '#' metadata lines, a header row, then data.
// Writers emit shortest round-trip numbers; readers reject files whose schema
// token does not match what they expect.

#include <string>

#include "botdr/calibration.hpp"
#include "botdr/retrieval.hpp"
#include "botdr/scan_engine.hpp"

namespace botdr::io {

inline constexpr const char* kHistogramSchema = "botdr-histogram-v1";
inline constexpr const char* kProfileSchema = "botdr-profile-v1";
inline constexpr const char* kTraceSchema = "botdr-trace-v1";

std::string histogram_to_csv(const scan::ScanHistogram& hist);
void write_histogram(const scan::ScanHistogram& hist, const std::string& path);
scan::ScanHistogram read_histogram(const std::string& path);

std::string profile_to_csv(const retrieval::RetrievedProfile& profile);
void write_profile(const retrieval::RetrievedProfile& profile, const std::string& path);
retrieval::RetrievedProfile read_profile(const std::string& path);

std::string trace_to_csv(const calib::CalibrationTrace& trace);
void write_trace(const calib::CalibrationTrace& trace, const std::string& path);
calib::CalibrationTrace read_trace(const std::string& path);

}  // namespace botdr::io
