// _botdr: python face of the reflectometer twin.  Thin wrappers; all physics
// stays in the C++ core so both front ends agree bit for bit.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "botdr/config.hpp"
#include "botdr/csv.hpp"
#include "botdr/report.hpp"
#include "botdr/run.hpp"

namespace py = pybind11;
using namespace botdr;

namespace {

py::array_t<double> counts_array(const scan::ScanHistogram& h) {
    py::array_t<double> out({h.n_steps, h.n_bins});
    std::copy(h.counts.begin(), h.counts.end(), out.mutable_data());
    return out;
}

retrieval::FitResult fit_arrays(const std::vector<double>& freqs, const std::vector<double>& counts,
                                bool weighted) {
    retrieval::BinSpectrum spec;
    spec.bin = 0;
    spec.range_m = 0.0;
    spec.frequency_mhz = freqs;
    spec.counts = counts;
    spec.background.assign(counts.size(), 0.0);
    retrieval::validate(spec);
    retrieval::FitOptions options;
    options.weighted = weighted;
    return retrieval::fit_lorentzian(spec, options);
}

}  // namespace

PYBIND11_MODULE(_botdr, m) {
    m.doc() = "photon-counting Brillouin reflectometer twin";

    py::register_exception<Error>(m, "BotdrError");

    py::enum_<calib::Branch>(m, "Branch")
        .value("up", calib::Branch::up)
        .value("down", calib::Branch::down);
    py::enum_<scan::Sampling>(m, "Sampling")
        .value("poisson", scan::Sampling::poisson)
        .value("expected", scan::Sampling::expected);

    py::class_<model::BrillouinLine>(m, "BrillouinLine")
        .def(py::init<>())
        .def_readwrite("nu_b_mhz", &model::BrillouinLine::nu_b_mhz)
        .def_readwrite("omega_b_mhz", &model::BrillouinLine::omega_b_mhz)
        .def_readwrite("g0", &model::BrillouinLine::g0);

    py::class_<model::FpiEtalon>(m, "FpiEtalon")
        .def(py::init<>())
        .def_readwrite("omega_fpi_mhz", &model::FpiEtalon::omega_fpi_mhz)
        .def_readwrite("fsr_mhz", &model::FpiEtalon::fsr_mhz)
        .def_readwrite("comb_orders", &model::FpiEtalon::comb_orders);

    py::class_<model::Environment>(m, "Environment")
        .def(py::init<>())
        .def(py::init([](double t, double s) {
                 model::Environment e;
                 e.temperature_c = t;
                 e.strain_ue = s;
                 return e;
             }),
             py::arg("temperature_c"), py::arg("strain_ue"))
        .def_readwrite("temperature_c", &model::Environment::temperature_c)
        .def_readwrite("strain_ue", &model::Environment::strain_ue);

    py::class_<model::SensitivityModel>(m, "SensitivityModel")
        .def(py::init<>())
        .def_readwrite("nu_ref_mhz", &model::SensitivityModel::nu_ref_mhz)
        .def_readwrite("omega_ref_mhz", &model::SensitivityModel::omega_ref_mhz)
        .def_readwrite("t_ref_c", &model::SensitivityModel::t_ref_c)
        .def_readwrite("c_nu_t_mhz_per_c", &model::SensitivityModel::c_nu_t_mhz_per_c)
        .def_readwrite("c_nu_e_mhz_per_ue", &model::SensitivityModel::c_nu_e_mhz_per_ue)
        .def_readwrite("c_w_t_mhz_per_c", &model::SensitivityModel::c_w_t_mhz_per_c)
        .def_readwrite("c_w_e_mhz_per_ue", &model::SensitivityModel::c_w_e_mhz_per_ue)
        .def_readwrite("cond_limit", &model::SensitivityModel::cond_limit);

    m.def("eval_brillouin", &model::eval_brillouin, py::arg("line"), py::arg("nu_mhz"));
    m.def("eval_fpi", &model::eval_fpi, py::arg("etalon"), py::arg("nu_mhz"));
    m.def("eval_transmission", &model::eval_transmission, py::arg("line"), py::arg("etalon"),
          py::arg("nu_mhz"));
    m.def("line_from_environment", &model::line_from_environment, py::arg("sensitivity"),
          py::arg("environment"), py::arg("g0") = 1.0);
    m.def("environment_from_line", &model::environment_from_line, py::arg("sensitivity"),
          py::arg("line"));
    m.def(
        "environment_sigma",
        [](const model::SensitivityModel& sm, double var_nu, double cov, double var_omega) {
            double st = 0.0, se = 0.0;
            model::environment_sigma(sm, var_nu, cov, var_omega, st, se);
            return py::make_tuple(st, se);
        },
        py::arg("sensitivity"), py::arg("var_nu"), py::arg("cov_nu_omega"), py::arg("var_omega"));
    m.def(
        "transmission_curve",
        [](const model::BrillouinLine& line, const model::FpiEtalon& et,
           py::array_t<double, py::array::c_style | py::array::forcecast> nus) {
            // the ssize_t ctor in this pybind11 leaves strides empty -> 0; force
            // the shape-container overload so the usual C strides get computed
            py::array_t<double> out(py::array::ShapeContainer{nus.size()});
            const double* in = nus.data();
            double* o = out.mutable_data();
            for (py::ssize_t i = 0; i < nus.size(); ++i) o[i] = model::eval_transmission(line, et, in[i]);
            return out;
        },
        py::arg("line"), py::arg("etalon"), py::arg("nu_mhz"));

    py::class_<calib::PztModel>(m, "PztModel")
        .def(py::init<>())
        .def_readwrite("up_coeffs_mhz", &calib::PztModel::up_coeffs_mhz)
        .def_readwrite("hysteresis_depth_mhz", &calib::PztModel::hysteresis_depth_mhz)
        .def_readwrite("v_min", &calib::PztModel::v_min)
        .def_readwrite("v_max", &calib::PztModel::v_max)
        .def("eval", &calib::PztModel::eval, py::arg("branch"), py::arg("voltage_v"));

    py::class_<calib::CalibrationTrace>(m, "CalibrationTrace")
        .def(py::init<>())
        .def_readwrite("branch", &calib::CalibrationTrace::branch)
        .def_readwrite("voltage_v", &calib::CalibrationTrace::voltage_v)
        .def_readwrite("power", &calib::CalibrationTrace::power);

    py::class_<calib::BranchFit>(m, "BranchFit")
        .def_readonly("coeffs_mhz", &calib::BranchFit::coeffs_mhz)
        .def_readonly("v_min", &calib::BranchFit::v_min)
        .def_readonly("v_max", &calib::BranchFit::v_max)
        .def_readonly("max_residual_mhz", &calib::BranchFit::max_residual_mhz)
        .def_readonly("n_peaks", &calib::BranchFit::n_peaks)
        .def("eval", &calib::BranchFit::eval, py::arg("voltage_v"));

    py::class_<calib::HysteresisMap>(m, "HysteresisMap")
        .def(py::init<>())
        .def_readwrite("fsr_mhz", &calib::HysteresisMap::fsr_mhz)
        .def_readonly("up", &calib::HysteresisMap::up)
        .def_readonly("down", &calib::HysteresisMap::down)
        .def("has", &calib::HysteresisMap::has, py::arg("branch"))
        .def("voltage_to_frequency", &calib::HysteresisMap::voltage_to_frequency, py::arg("branch"),
             py::arg("voltage_v"))
        .def("frequency_to_voltage", &calib::HysteresisMap::frequency_to_voltage, py::arg("branch"),
             py::arg("frequency_mhz"));

    py::class_<calib::TraceNoise>(m, "TraceNoise")
        .def(py::init<>())
        .def_readwrite("multiplicative", &calib::TraceNoise::multiplicative)
        .def_readwrite("additive", &calib::TraceNoise::additive);

    m.def("simulate_calibration_trace", &calib::simulate_calibration_trace, py::arg("pzt"),
          py::arg("etalon"), py::arg("branch"), py::arg("n_samples"), py::arg("noise"),
          py::arg("seed"));
    m.def("calibrate_branch", &calib::calibrate_branch, py::arg("trace"), py::arg("fsr_mhz"),
          py::arg("min_prominence") = 0.5);

    py::class_<scan::FiberSegment>(m, "FiberSegment")
        .def(py::init<>())
        .def_readwrite("length_m", &scan::FiberSegment::length_m)
        .def_readwrite("environment", &scan::FiberSegment::environment)
        .def_readwrite("attenuation_db_per_km", &scan::FiberSegment::attenuation_db_per_km)
        .def_readwrite("amplitude", &scan::FiberSegment::amplitude);

    py::class_<scan::FiberProfile>(m, "FiberProfile")
        .def(py::init<>())
        .def_readwrite("segments", &scan::FiberProfile::segments)
        .def("total_length_m", &scan::FiberProfile::total_length_m);

    py::class_<scan::InstrumentConfig>(m, "InstrumentConfig")
        .def(py::init<>())
        .def_readwrite("pulse_duration_ns", &scan::InstrumentConfig::pulse_duration_ns)
        .def_readwrite("peak_power_w", &scan::InstrumentConfig::peak_power_w)
        .def_readwrite("rep_rate_khz", &scan::InstrumentConfig::rep_rate_khz)
        .def_readwrite("group_velocity_mps", &scan::InstrumentConfig::group_velocity_mps)
        .def_readwrite("detector_efficiency", &scan::InstrumentConfig::detector_efficiency)
        .def_readwrite("noise_rate_cps", &scan::InstrumentConfig::noise_rate_cps)
        .def_readwrite("dead_time_ns", &scan::InstrumentConfig::dead_time_ns)
        .def_readwrite("fbg_suppression_db", &scan::InstrumentConfig::fbg_suppression_db)
        .def_readwrite("rayleigh_to_brillouin", &scan::InstrumentConfig::rayleigh_to_brillouin)
        .def_readwrite("bin_width_ns", &scan::InstrumentConfig::bin_width_ns)
        .def_readwrite("capture_coefficient", &scan::InstrumentConfig::capture_coefficient)
        .def("rep_period_ns", &scan::InstrumentConfig::rep_period_ns)
        .def("pulse_energy_j", &scan::InstrumentConfig::pulse_energy_j)
        .def("n_bins", &scan::InstrumentConfig::n_bins)
        .def("unambiguous_range_m", &scan::InstrumentConfig::unambiguous_range_m)
        .def("smear_width_m", &scan::InstrumentConfig::smear_width_m);

    m.def("capture_for_entry_rate", &scan::capture_for_entry_rate, py::arg("instrument"),
          py::arg("entry_rate_cps"));

    py::class_<scan::ScanSchedule>(m, "ScanSchedule")
        .def(py::init<>())
        .def_readwrite("n_steps", &scan::ScanSchedule::n_steps)
        .def_readwrite("freq_step_mhz", &scan::ScanSchedule::freq_step_mhz)
        .def_readwrite("center_mhz", &scan::ScanSchedule::center_mhz)
        .def_readwrite("dwell_s", &scan::ScanSchedule::dwell_s)
        .def_readwrite("branch", &scan::ScanSchedule::branch)
        .def_readwrite("anchor_mhz", &scan::ScanSchedule::anchor_mhz)
        .def_readwrite("voltages", &scan::ScanSchedule::voltages)
        .def("target_frequency", &scan::ScanSchedule::target_frequency, py::arg("step"));

    m.def("build_voltages", &scan::build_voltages, py::arg("schedule"), py::arg("map"));

    py::class_<scan::ScanHistogram>(m, "ScanHistogram")
        .def(py::init<>())
        .def_readonly("n_steps", &scan::ScanHistogram::n_steps)
        .def_readonly("n_bins", &scan::ScanHistogram::n_bins)
        .def_property_readonly("counts", &counts_array)
        .def_readonly("step_frequency_mhz", &scan::ScanHistogram::step_frequency_mhz)
        .def_readonly("voltages", &scan::ScanHistogram::voltages)
        .def_readonly("branch", &scan::ScanHistogram::branch)
        .def_readonly("sampling", &scan::ScanHistogram::sampling)
        .def_readonly("dwell_s", &scan::ScanHistogram::dwell_s)
        .def_readonly("bin_width_ns", &scan::ScanHistogram::bin_width_ns)
        .def_readonly("rep_period_ns", &scan::ScanHistogram::rep_period_ns)
        .def_readonly("seed", &scan::ScanHistogram::seed)
        .def_readonly("config_hash", &scan::ScanHistogram::config_hash)
        .def("range_m", &scan::ScanHistogram::range_m, py::arg("bin"))
        .def("pulses", &scan::ScanHistogram::pulses);

    m.def("expected_rate", &scan::expected_rate, py::arg("fiber"), py::arg("instrument"),
          py::arg("sensitivity"), py::arg("etalon"), py::arg("nu_center_mhz"), py::arg("bin"));
    m.def("apply_dead_time", &scan::apply_dead_time, py::arg("rate_cps"), py::arg("dead_time_ns"));
    m.def("invert_dead_time", &scan::invert_dead_time, py::arg("rate_cps"), py::arg("dead_time_ns"));

    py::class_<retrieval::FitResult>(m, "FitResult")
        .def_readonly("amplitude", &retrieval::FitResult::amplitude)
        .def_readonly("center_mhz", &retrieval::FitResult::center_mhz)
        .def_readonly("width_mhz", &retrieval::FitResult::width_mhz)
        .def_readonly("offset", &retrieval::FitResult::offset)
        .def_readonly("var_center", &retrieval::FitResult::var_center)
        .def_readonly("var_width", &retrieval::FitResult::var_width)
        .def_readonly("cov_center_width", &retrieval::FitResult::cov_center_width)
        .def_readonly("rss", &retrieval::FitResult::rss)
        .def_readonly("n_iter", &retrieval::FitResult::n_iter)
        .def_readonly("converged", &retrieval::FitResult::converged);

    m.def("fit_lorentzian", &fit_arrays, py::arg("frequency_mhz"), py::arg("counts"),
          py::arg("weighted") = false);
    m.def("deconvolve_width",
          [](double width_mhz, double omega_fpi_mhz) {
              model::FpiEtalon et;
              et.omega_fpi_mhz = omega_fpi_mhz;
              return retrieval::deconvolve_width(width_mhz, et);
          },
          py::arg("width_mhz"), py::arg("omega_fpi_mhz"));

    py::class_<retrieval::BinResult>(m, "BinResult")
        .def_readonly("bin", &retrieval::BinResult::bin)
        .def_readonly("range_m", &retrieval::BinResult::range_m)
        .def_readonly("amplitude", &retrieval::BinResult::amplitude)
        .def_readonly("nu_b_mhz", &retrieval::BinResult::nu_b_mhz)
        .def_readonly("sigma_nu_mhz", &retrieval::BinResult::sigma_nu_mhz)
        .def_readonly("omega_b_mhz", &retrieval::BinResult::omega_b_mhz)
        .def_readonly("sigma_omega_mhz", &retrieval::BinResult::sigma_omega_mhz)
        .def_readonly("temperature_c", &retrieval::BinResult::temperature_c)
        .def_readonly("sigma_t_c", &retrieval::BinResult::sigma_t_c)
        .def_readonly("strain_ue", &retrieval::BinResult::strain_ue)
        .def_readonly("sigma_strain_ue", &retrieval::BinResult::sigma_strain_ue)
        .def_readonly("flags", &retrieval::BinResult::flags)
        .def_readonly("n_iter", &retrieval::BinResult::n_iter);

    m.def("flags_to_string", &retrieval::flags_to_string, py::arg("flags"));

    py::class_<retrieval::RetrievedProfile>(m, "RetrievedProfile")
        .def_readonly("bins", &retrieval::RetrievedProfile::bins)
        .def_readonly("background_per_step", &retrieval::RetrievedProfile::background_per_step)
        .def_readonly("config_hash", &retrieval::RetrievedProfile::config_hash)
        .def_readonly("seed", &retrieval::RetrievedProfile::seed);

    py::class_<io::CalibrationSettings>(m, "CalibrationSettings")
        .def(py::init<>())
        .def_readwrite("n_samples", &io::CalibrationSettings::n_samples)
        .def_readwrite("noise_multiplicative", &io::CalibrationSettings::noise_multiplicative)
        .def_readwrite("noise_additive", &io::CalibrationSettings::noise_additive)
        .def_readwrite("min_prominence", &io::CalibrationSettings::min_prominence);

    py::class_<io::RetrievalSettings>(m, "RetrievalSettings")
        .def(py::init<>())
        .def_readwrite("dead_time_correction", &io::RetrievalSettings::dead_time_correction)
        .def_readwrite("weighted_fit", &io::RetrievalSettings::weighted_fit)
        .def_readwrite("noise_floor_sigma", &io::RetrievalSettings::noise_floor_sigma)
        .def_readwrite("threads", &io::RetrievalSettings::threads);

    py::class_<io::ExperimentConfig>(m, "ExperimentConfig")
        .def(py::init(&io::default_config))
        .def_readwrite("seed", &io::ExperimentConfig::seed)
        .def_readwrite("sampling", &io::ExperimentConfig::sampling)
        .def_readwrite("sim_threads", &io::ExperimentConfig::sim_threads)
        .def_readwrite("instrument", &io::ExperimentConfig::instrument)
        .def_readwrite("sensitivity", &io::ExperimentConfig::sensitivity)
        .def_readwrite("etalon", &io::ExperimentConfig::etalon)
        .def_readwrite("pzt", &io::ExperimentConfig::pzt)
        .def_readwrite("fiber", &io::ExperimentConfig::fiber)
        .def_readwrite("schedule", &io::ExperimentConfig::schedule)
        .def_readwrite("calibration", &io::ExperimentConfig::calibration)
        .def_readwrite("retrieval", &io::ExperimentConfig::retrieval);

    m.def("default_config", &io::default_config);
    m.def("load_config", &io::load_config, py::arg("path"));
    m.def("config_from_string", [](const std::string& text) {
        return io::config_from_toml(io::TomlDoc::parse_string(text, "<string>"));
    });
    m.def("save_config", &io::save_config, py::arg("config"));
    m.def("config_hash", &io::config_hash, py::arg("config"));
    m.def("validate_config", [](const io::ExperimentConfig& cfg) { io::validate(cfg); });
    m.def("load_map", &io::load_map, py::arg("path"));
    m.def("save_map", &io::save_map, py::arg("map"));
    m.def("write_map", &io::write_map, py::arg("map"), py::arg("path"));

    m.def("write_histogram", &io::write_histogram, py::arg("histogram"), py::arg("path"));
    m.def("read_histogram", &io::read_histogram, py::arg("path"));
    m.def("write_profile", &io::write_profile, py::arg("profile"), py::arg("path"));
    m.def("read_profile", &io::read_profile, py::arg("path"));
    m.def("write_trace", &io::write_trace, py::arg("trace"), py::arg("path"));
    m.def("read_trace", &io::read_trace, py::arg("path"));

    py::class_<run::SimulationResult>(m, "SimulationResult")
        .def_readonly("hist", &run::SimulationResult::hist)
        .def_readonly("map", &run::SimulationResult::map)
        .def_readonly("schedule", &run::SimulationResult::schedule)
        .def_readonly("trace_up", &run::SimulationResult::trace_up)
        .def_readonly("trace_down", &run::SimulationResult::trace_down);

    m.def("simulate_experiment",
          py::overload_cast<const io::ExperimentConfig&>(&run::simulate_experiment),
          py::arg("config"));
    m.def("simulate_experiment",
          py::overload_cast<const io::ExperimentConfig&, const calib::HysteresisMap&>(
              &run::simulate_experiment),
          py::arg("config"), py::arg("map"));
    m.def("retrieve_experiment", &run::retrieve_experiment, py::arg("histogram"), py::arg("map"),
          py::arg("config"));
    m.def("render_report",
          [](const retrieval::RetrievedProfile& profile, const scan::ScanHistogram* hist,
             double omega_fpi_mhz, const std::string& out_dir) {
              return report::render_report(profile, hist, omega_fpi_mhz, out_dir);
          },
          py::arg("profile"), py::arg("histogram") = nullptr,
          py::arg("omega_fpi_mhz") = model::FpiEtalon{}.omega_fpi_mhz, py::arg("out_dir") = ".");

    m.attr("__version__") = "0.1.0";
}
