#include "botdr/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "botdr/config.hpp"
#include "botdr/csv.hpp"
#include "botdr/toml.hpp"

namespace botdr::report {

namespace {

namespace fs = std::filesystem;

constexpr double kWidth = 860.0;
constexpr double kHeight = 420.0;
constexpr double kMarginL = 72.0;
constexpr double kMarginR = 24.0;
constexpr double kMarginT = 44.0;
constexpr double kMarginB = 56.0;

std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo = 0.0, hi = 1.0;
};

Range data_range(const std::vector<Series>& series, bool use_x) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (const auto& s : series) {
        const auto& v = use_x ? s.x : s.y;
        for (double d : v) {
            if (!std::isfinite(d)) continue;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    if (!(lo <= hi)) return {0.0, 1.0};
    if (lo == hi) {
        const double pad = lo == 0.0 ? 1.0 : std::fabs(lo) * 0.1;
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

/// Round tick spacing to 1/2/5 x 10^k covering roughly five intervals.
double nice_step(double span) {
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double m = raw / mag;
    if (m < 1.5) return mag;
    if (m < 3.5) return 2.0 * mag;
    if (m < 7.5) return 5.0 * mag;
    return 10.0 * mag;
}

std::string tick_label(double v, double step) {
    // print with just enough digits for the step size
    int digits = 0;
    if (step < 1.0) digits = std::min(6, static_cast<int>(std::ceil(-std::log10(step))));
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(digits);
    if (std::fabs(v) >= 1.0e6 || (v != 0.0 && std::fabs(v) < 1.0e-4)) {
        os.unsetf(std::ios::fixed);
        os.precision(3);
    }
    os << v;
    return os.str();
}

struct Frame {
    double x0, y0, x1, y1;  ///< plot area in SVG coordinates
    Range rx, ry;

    double px(double x) const { return x0 + (x - rx.lo) / (rx.hi - rx.lo) * (x1 - x0); }
    double py(double y) const { return y1 - (y - ry.lo) / (ry.hi - ry.lo) * (y1 - y0); }
};

void draw_axes(std::ostringstream& os, const Frame& f, const std::string& x_label,
               const std::string& y_label, double font) {
    os << "<rect x='" << num(f.x0) << "' y='" << num(f.y0) << "' width='" << num(f.x1 - f.x0)
       << "' height='" << num(f.y1 - f.y0) << "' fill='none' stroke='#444' stroke-width='1'/>\n";
    const double sx = nice_step(f.rx.hi - f.rx.lo);
    for (double t = std::ceil(f.rx.lo / sx) * sx; t <= f.rx.hi + 1e-9 * sx; t += sx) {
        const double x = f.px(t);
        os << "<line x1='" << num(x) << "' y1='" << num(f.y1) << "' x2='" << num(x) << "' y2='"
           << num(f.y1 + 5) << "' stroke='#444'/>\n";
        os << "<line x1='" << num(x) << "' y1='" << num(f.y0) << "' x2='" << num(x) << "' y2='"
           << num(f.y1) << "' stroke='#ddd' stroke-width='0.5'/>\n";
        os << "<text x='" << num(x) << "' y='" << num(f.y1 + 18) << "' font-size='" << num(font)
           << "' text-anchor='middle' fill='#222'>" << xml_escape(tick_label(t, sx))
           << "</text>\n";
    }
    const double sy = nice_step(f.ry.hi - f.ry.lo);
    for (double t = std::ceil(f.ry.lo / sy) * sy; t <= f.ry.hi + 1e-9 * sy; t += sy) {
        const double y = f.py(t);
        os << "<line x1='" << num(f.x0 - 5) << "' y1='" << num(y) << "' x2='" << num(f.x0)
           << "' y2='" << num(y) << "' stroke='#444'/>\n";
        os << "<line x1='" << num(f.x0) << "' y1='" << num(y) << "' x2='" << num(f.x1) << "' y2='"
           << num(y) << "' stroke='#ddd' stroke-width='0.5'/>\n";
        os << "<text x='" << num(f.x0 - 8) << "' y='" << num(y + font * 0.35) << "' font-size='"
           << num(font) << "' text-anchor='end' fill='#222'>" << xml_escape(tick_label(t, sy))
           << "</text>\n";
    }
    os << "<text x='" << num(0.5 * (f.x0 + f.x1)) << "' y='" << num(f.y1 + 38) << "' font-size='"
       << num(font + 1) << "' text-anchor='middle' fill='#111'>" << xml_escape(x_label)
       << "</text>\n";
    os << "<text x='" << num(f.x0 - 52) << "' y='" << num(0.5 * (f.y0 + f.y1))
       << "' font-size='" << num(font + 1) << "' text-anchor='middle' fill='#111' transform='rotate(-90 "
       << num(f.x0 - 52) << " " << num(0.5 * (f.y0 + f.y1)) << ")'>" << xml_escape(y_label)
       << "</text>\n";
}

void draw_series(std::ostringstream& os, const Frame& f, const Series& s) {
    if (s.points) {
        for (size_t i = 0; i < s.x.size(); ++i) {
            if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
            os << "<circle cx='" << num(f.px(s.x[i])) << "' cy='" << num(f.py(s.y[i]))
               << "' r='2.5' fill='" << s.color << "'/>\n";
        }
        return;
    }
    os << "<polyline fill='none' stroke='" << s.color << "' stroke-width='1.5' points='";
    bool open = false;
    for (size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        if (open) os << ' ';
        os << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i]));
        open = true;
    }
    os << "'/>\n";
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::ConfigError, "cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw Error(ErrorCode::ConfigError, "write failed for '" + path.string() + "'");
}

/// De-censor a stored count the same way retrieval does, but forgiving:
/// unrecoverable saturation just passes the raw value through to the plot.
double decensor_for_plot(double counts, double pulses, double bin_dt_s, double tau_s) {
    if (tau_s <= 0.0 || counts <= 0.0 || pulses <= 0.0) return counts;
    const double rate = counts / (pulses * bin_dt_s);
    const double loss = rate * tau_s;
    if (loss >= 0.95) return counts;
    return counts / (1.0 - loss);
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          const std::string& comment) {
    std::ostringstream os;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << num(kWidth) << "' height='"
       << num(kHeight) << "' viewBox='0 0 " << num(kWidth) << " " << num(kHeight) << "'>\n";
    if (!comment.empty()) os << "<!-- " << xml_escape(comment) << " -->\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    Frame f{kMarginL, kMarginT, kWidth - kMarginR, kHeight - kMarginB,
            data_range(series, true), data_range(series, false)};
    os << "<text x='" << num(0.5 * kWidth) << "' y='26' font-size='15' text-anchor='middle' "
          "font-family='sans-serif' fill='#111'>"
       << xml_escape(title) << "</text>\n";
    os << "<g font-family='sans-serif'>\n";
    draw_axes(os, f, x_label, y_label, 11.0);
    os << "</g>\n";
    for (const auto& s : series) draw_series(os, f, s);
    // legend, top right inside the frame
    double ly = f.y0 + 16.0;
    for (const auto& s : series) {
        if (s.label.empty()) continue;
        os << "<line x1='" << num(f.x1 - 150) << "' y1='" << num(ly) << "' x2='" << num(f.x1 - 126)
           << "' y2='" << num(ly) << "' stroke='" << s.color << "' stroke-width='2'/>\n";
        os << "<text x='" << num(f.x1 - 120) << "' y='" << num(ly + 4)
           << "' font-size='11' font-family='sans-serif' fill='#222'>" << xml_escape(s.label)
           << "</text>\n";
        ly += 16.0;
    }
    os << "</svg>\n";
    return os.str();
}

std::string spectra_svg(const retrieval::RetrievedProfile& profile,
                        const scan::ScanHistogram& hist, double omega_fpi_mhz,
                        const std::string& comment) {
    scan::validate(hist);
    std::vector<const retrieval::BinResult*> clean;
    for (const auto& r : profile.bins)
        if (r.flags == 0 && r.bin >= 0 && r.bin < hist.n_bins) clean.push_back(&r);
    if (clean.empty())
        throw Error(ErrorCode::InsufficientPoints, "no clean bins to draw spectra for");
    std::vector<const retrieval::BinResult*> picks;
    const size_t n_panels = std::min<size_t>(4, clean.size());
    for (size_t i = 0; i < n_panels; ++i)
        picks.push_back(clean[i * (clean.size() - 1) / std::max<size_t>(1, n_panels - 1)]);

    const double pulses = hist.pulses();
    const double bin_dt_s = hist.bin_width_ns * 1.0e-9;
    const double tau_s = hist.dead_time_ns * 1.0e-9;

    std::ostringstream os;
    const double w = 880.0, h = 640.0;
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << num(w) << "' height='" << num(h)
       << "' viewBox='0 0 " << num(w) << " " << num(h) << "'>\n";
    if (!comment.empty()) os << "<!-- " << xml_escape(comment) << " -->\n";
    os << "<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << num(0.5 * w)
       << "' y='24' font-size='15' text-anchor='middle' font-family='sans-serif' fill='#111'>"
          "Per-bin spectra with fitted lines</text>\n";

    for (size_t p = 0; p < picks.size(); ++p) {
        const auto& r = *picks[p];
        const double px0 = 64.0 + (p % 2) * 430.0;
        const double py0 = 52.0 + (p / 2) * 300.0;
        Frame f{px0, py0, px0 + 360.0, py0 + 220.0, {}, {}};

        Series data;
        data.points = true;
        data.color = "#1f6fb2";
        for (int s = 0; s < hist.n_steps; ++s) {
            const double bkg = s < static_cast<int>(profile.background_per_step.size())
                                   ? profile.background_per_step[s]
                                   : 0.0;
            data.x.push_back(hist.step_frequency_mhz[s]);
            data.y.push_back(decensor_for_plot(hist.at(s, r.bin), pulses, bin_dt_s, tau_s) - bkg);
        }
        Series curve;
        curve.color = "#c23d1f";
        const double wm = r.omega_b_mhz + omega_fpi_mhz;  // back to the measured width
        const double lo = hist.step_frequency_mhz.front();
        const double hi = hist.step_frequency_mhz.back();
        for (int i = 0; i <= 240; ++i) {
            const double nu = lo + (hi - lo) * i / 240.0;
            const double d = (nu - r.nu_b_mhz) / wm;
            curve.x.push_back(nu);
            curve.y.push_back(r.amplitude / (1.0 + d * d));
        }
        const std::vector<Series> panel{data, curve};
        f.rx = data_range(panel, true);
        f.ry = data_range(panel, false);
        os << "<g font-family='sans-serif'>\n";
        draw_axes(os, f, "frequency (MHz)", "counts", 9.0);
        os << "</g>\n";
        for (const auto& s : panel) draw_series(os, f, s);
        std::ostringstream cap;
        cap.precision(1);
        cap.setf(std::ios::fixed);
        cap << "bin " << r.bin << " @ " << r.range_m << " m";
        os << "<text x='" << num(0.5 * (f.x0 + f.x1)) << "' y='" << num(f.y0 - 6)
           << "' font-size='11' text-anchor='middle' font-family='sans-serif' fill='#333'>"
           << xml_escape(cap.str()) << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

std::vector<std::string> render_report(const retrieval::RetrievedProfile& profile,
                                       const scan::ScanHistogram* hist, double omega_fpi_mhz,
                                       const std::string& out_dir) {
    const fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::ConfigError, "cannot create '" + out_dir + "': " + ec.message());

    Series t, e, nu;
    t.label = "retrieved";
    e.label = "retrieved";
    nu.label = "retrieved";
    e.color = "#2f8c44";
    nu.color = "#7a3fb2";
    for (const auto& r : profile.bins) {
        if (r.flags != 0) continue;
        t.x.push_back(r.range_m);
        t.y.push_back(r.temperature_c);
        e.x.push_back(r.range_m);
        e.y.push_back(r.strain_ue);
        nu.x.push_back(r.range_m);
        nu.y.push_back(r.nu_b_mhz);
    }
    if (t.x.empty())
        throw Error(ErrorCode::InsufficientPoints, "profile holds no clean bins to plot");
    const std::string comment = "config=" + profile.config_hash + " seed=" + std::to_string(profile.seed);

    std::vector<std::string> written;
    write_text_file(dir / "temperature.svg",
                    line_plot_svg("Temperature along the fiber", "range (m)", "temperature (\302\260C)",
                                  {t}, comment));
    written.push_back("temperature.svg");
    write_text_file(dir / "strain.svg",
                    line_plot_svg("Strain along the fiber", "range (m)", "strain (\302\265\317\265)",
                                  {e}, comment));
    written.push_back("strain.svg");
    write_text_file(dir / "frequency.svg",
                    line_plot_svg("Peak frequency along the fiber", "range (m)", "frequency (MHz)",
                                  {nu}, comment));
    written.push_back("frequency.svg");
    if (hist != nullptr) {
        write_text_file(dir / "spectra.svg", spectra_svg(profile, *hist, omega_fpi_mhz, comment));
        written.push_back("spectra.svg");
    }
    return written;
}

void cli_report(const std::string& profile_path, const std::string& out_dir,
                const std::string& hist_path, const std::string& config_path) {
    const auto profile = io::read_profile(profile_path);
    double omega_fpi = model::FpiEtalon{}.omega_fpi_mhz;
    if (!config_path.empty()) omega_fpi = io::load_config(config_path).etalon.omega_fpi_mhz;
    if (!hist_path.empty()) {
        const auto hist = io::read_histogram(hist_path);
        render_report(profile, &hist, omega_fpi, out_dir);
    } else {
        render_report(profile, nullptr, omega_fpi, out_dir);
    }
}

}  // namespace botdr::report
