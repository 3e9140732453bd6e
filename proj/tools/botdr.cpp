// botdr: photon-counting Brillouin reflectometer twin.
// Exit codes: 0 ok, 2 bad config/usage, 3 runtime failure.  Failures leave a
// one-line JSON record on stderr so scripts never have to scrape prose.

#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "botdr/errors.hpp"
#include "botdr/report.hpp"
#include "botdr/run.hpp"

namespace {

void emit_error(const std::string& name, const std::string& message) {
    nlohmann::json record{{"error", name}, {"message", message}};
    std::cerr << record.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photon-counting Brillouin reflectometer twin"};
    app.set_version_flag("--version", "botdr 0.1.0");
    app.require_subcommand(1);

    std::string trace_path, branch_name, out_path;
    double fsr_mhz = 4020.0;
    double min_prominence = 0.5;
    auto* cal = app.add_subcommand("calibrate", "fit a sweep-to-frequency map from an etalon trace");
    cal->add_option("--trace", trace_path, "trace CSV (voltage_v,power)")->required();
    cal->add_option("--branch", branch_name, "sweep direction: up or down")->required();
    cal->add_option("--out", out_path, "output map TOML")->required();
    cal->add_option("--fsr", fsr_mhz, "etalon order spacing in MHz");
    cal->add_option("--min-prominence", min_prominence, "peak threshold as a fraction of the max");
    cal->callback([&] { botdr::run::cli_calibrate(trace_path, branch_name, out_path, fsr_mhz,
                                                  min_prominence); });

    std::string config_path, cal_out_path, cal_in_path;
    auto* sim = app.add_subcommand("simulate", "run the forward model into a histogram CSV");
    sim->add_option("--config", config_path, "experiment TOML")->required();
    sim->add_option("--out", out_path, "output histogram CSV")->required();
    sim->add_option("--cal-out", cal_out_path, "where to save the map the scan used "
                                               "(default <out>.cal.toml)");
    sim->add_option("--cal", cal_in_path, "use this map instead of self-calibrating");
    sim->callback(
        [&] { botdr::run::cli_simulate(config_path, out_path, cal_out_path, cal_in_path); });

    std::string hist_path, cal_path;
    auto* ret = app.add_subcommand("retrieve", "invert a histogram into a temperature/strain profile");
    ret->add_option("--hist", hist_path, "histogram CSV")->required();
    ret->add_option("--cal", cal_path, "calibration map TOML")->required();
    ret->add_option("--config", config_path, "experiment TOML")->required();
    ret->add_option("--out", out_path, "output profile CSV")->required();
    ret->callback([&] { botdr::run::cli_retrieve(hist_path, cal_path, config_path, out_path); });

    std::string out_dir;
    auto* rt = app.add_subcommand("roundtrip", "simulate, retrieve, and score against the truth");
    rt->add_option("--config", config_path, "experiment TOML")->required();
    rt->add_option("--out-dir", out_dir, "directory for all artifacts")->required();
    rt->callback([&] { botdr::run::cli_roundtrip(config_path, out_dir); });

    std::string profile_path;
    auto* rep = app.add_subcommand("report", "render SVG plots from a profile CSV");
    rep->add_option("--profile", profile_path, "profile CSV")->required();
    rep->add_option("--out", out_dir, "directory for the SVG files")->required();
    rep->add_option("--hist", hist_path, "histogram CSV for spectrum panels");
    rep->add_option("--config", config_path, "experiment TOML (for the etalon line width)");
    rep->callback(
        [&] { botdr::report::cli_report(profile_path, out_dir, hist_path, config_path); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        if (rc == 0) return 0;  // --help / --version
        emit_error("ConfigError", e.what());
        return 2;
    } catch (const botdr::Error& e) {
        emit_error(botdr::error_code_name(e.code()), e.what());
        return botdr::is_usage_error(e.code()) ? 2 : 3;
    } catch (const std::exception& e) {
        emit_error("RuntimeError", e.what());
        return 3;
    }
    return 0;
}
