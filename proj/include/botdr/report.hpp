#pragma once

// Plot rendering: retrieved-profile line plots and per-bin spectrum overlays
// as self-contained SVG files.  Output is deterministic for fixed inputs.

#include <string>
#include <vector>

#include "botdr/retrieval.hpp"
#include "botdr/scan_engine.hpp"

namespace botdr::report {

/// One curve on a plot: x/y pairs plus a draw style.
struct Series {
    std::vector<double> x;
    std::vector<double> y;
    std::string label;
    std::string color = "#1f6fb2";
    bool points = false;  ///< markers instead of a line
};

/// Minimal line plot.  The comment string (config hash, provenance) is
/// embedded as an XML comment at the top of the file.
std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          const std::string& comment);

/// 2x2 panel figure: measured spectra of up to four clean bins with their
/// fitted Lorentzians.  Points are dead-time corrected and background
/// subtracted, matching what the fitter saw; curves come from the stored fit
/// parameters re-convolved to the measured width.
std::string spectra_svg(const retrieval::RetrievedProfile& profile,
                        const scan::ScanHistogram& hist, double omega_fpi_mhz,
                        const std::string& comment);

/// Write temperature.svg / strain.svg / frequency.svg (and spectra.svg when a
/// histogram is supplied) into out_dir.  Returns the file names written.
std::vector<std::string> render_report(const retrieval::RetrievedProfile& profile,
                                       const scan::ScanHistogram* hist, double omega_fpi_mhz,
                                       const std::string& out_dir);

void cli_report(const std::string& profile_path, const std::string& out_dir,
                const std::string& hist_path, const std::string& config_path);

}  // namespace botdr::report
