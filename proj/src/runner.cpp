#include <cmath>
#include <cstdio>
#include <limits>
#include <fstream>
#include <random>

#include "json.hpp"

#include "biascav/constants.hpp"
#include "biascav/csv.hpp"
#include "biascav/error.hpp"
#include "biascav/scenario.hpp"
#include "biascav/txn.hpp"

namespace biascav {

namespace {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string numbered(const char* stem, std::size_t i, const char* ext = ".csv") {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%02zu%s", stem, i, ext);
    return buf;
}

Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

struct Outputs {
    fs::path dir;
    std::vector<fs::path> files;

    fs::path add(const std::string& name) {
        files.push_back(dir / name);
        return files.back();
    }
};

Json field_stats_json(const FieldStats& st) {
    Json j;
    j["center"] = st.center_value;
    j["mean_abs_deviation"] = st.mean_abs_deviation;
    j["max_abs_deviation"] = st.max_abs_deviation;
    j["region_nodes"] = st.region_nodes;
    j["cloud_mean"] = st.cloud_mean;
    j["cloud_std"] = st.cloud_std;
    j["cloud_relative_std"] = st.cloud_std / st.cloud_mean;
    return j;
}

Json run_modes(const Scenario& sc, Outputs& out) {
    CsvTable t;
    t.comments.push_back("ideal-box TE_m0l modes; frequencies in Hz, geometry factor in ohm");
    t.header = {"m", "n", "l", "frequency_Hz", "geometry_factor_ohm", "measured_Hz", "relative_error"};
    Json rows = Json::array();
    for (std::size_t i = 0; i < sc.modes.modes.size(); ++i) {
        const auto m = sc.modes.modes[i];
        const double f = resonance_frequency(sc.geometry, m);
        const double g = geometry_factor(sc.geometry, m);
        const auto meas = sc.modes.measured[i];
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double rel = meas ? (f - *meas) / *meas : nan;
        t.rows.push_back({double(m.m), double(m.n), double(m.l), f, g, meas.value_or(nan), rel});
        Json r;
        r["mode"] = m.label();
        r["frequency_Hz"] = f;
        r["geometry_factor_ohm"] = g;
        if (meas) {
            r["measured_Hz"] = *meas;
            r["relative_error"] = rel;
        }
        rows.push_back(r);
    }
    write_csv(out.add("modes.csv"), t);
    return Json{{"modes", rows}};
}

Json run_fields(const Scenario& sc, Outputs& out) {
    const auto& p = sc.fields;
    Json j;
    if (p.electrode_voltages) {
        const auto [v1, v2] = *p.electrode_voltages;
        const auto sol = solve_electrostatic(sc.geometry, sc.grid, v1, v2);
        const auto region = Region::centered(sol.field.center(), p.region_size);
        const auto st = field_statistics(sol.field, region, p.cloud);
        Json e = field_stats_json(st);
        e["units"] = "V/m";
        e["grid"] = sc.grid.cells;
        e["iterations"] = sol.iterations;
        e["residual"] = sol.residual;
        if (v2 != v1) e["beta_per_m"] = st.cloud_mean / std::abs(v2 - v1);
        j["electrostatic"] = e;
        if (p.export_maps) write_field_map_csv(out.add("electric_map.csv"), sol.field);
    }
    if (p.b_ext) {
        const auto sol = solve_magnetostatic(sc.geometry, sc.magnetic_grid, *p.b_ext, p.direction);
        const auto region = Region::centered(sol.field.center(), p.region_size);
        const auto st = field_statistics(sol.field, region, p.cloud);
        Json b = field_stats_json(st);
        b["units"] = "T";
        b["grid"] = sc.magnetic_grid.cells;
        b["iterations"] = sol.iterations;
        b["residual"] = sol.residual;
        b["center_over_external"] = st.center_value / *p.b_ext;
        j["magnetostatic"] = b;
        if (p.export_maps) write_field_map_csv(out.add("magnetic_map.csv"), sol.field);
    }
    j["region_size_m"] = vec_json(p.region_size);
    j["cloud"] = {{"offset_m", vec_json(p.cloud.offset)}, {"diameter_m", p.cloud.diameter}};
    return j;
}

Json run_losses(const Scenario& sc, Outputs& out) {
    const auto& p = sc.losses;
    const auto b = loss_budget(sc.geometry, p.mode, p.base_linewidth, p.electrodes,
                               p.trapped_field, p.amplitude);
    CsvTable t;
    t.comments.push_back("loss budget for " + p.mode.label() + "; linewidths kappa/2pi in Hz");
    t.header = {"frequency_Hz", "base_Hz", "electrode_Hz", "trapped_flux_Hz", "coupling_Hz",
                "total_Hz", "loaded_q", "internal_q"};
    t.rows.push_back({b.frequency, b.base, b.electrode, b.trapped_flux, b.coupling, b.total,
                      b.loaded_q, b.internal_q});
    write_csv(out.add("losses.csv"), t);

    Json j;
    j["mode"] = p.mode.label();
    j["budget"] = {{"frequency_Hz", b.frequency}, {"base_Hz", b.base},
                   {"electrode_Hz", b.electrode}, {"trapped_flux_Hz", b.trapped_flux},
                   {"coupling_Hz", b.coupling},   {"total_Hz", b.total},
                   {"loaded_q", b.loaded_q},      {"internal_q", b.internal_q}};
    j["electrode_material"] = p.electrodes.name;
    if (auto q = trapped_flux_q_limit(sc.geometry, p.mode, p.trapped_field)) {
        j["trapped_flux_q_limit"] = *q;
    } else {
        j["trapped_flux_q_limit"] = nullptr;
    }

    if (!p.measured.empty()) {
        CsvTable c;
        c.comments.push_back("conductivity inferred from the electrode linewidth increase");
        c.header = {"linewidth_Hz", "increase_Hz", "conductivity_S_per_m"};
        Json rows = Json::array();
        for (const auto& m : p.measured) {
            const double inc = m.linewidth - p.base_linewidth;
            const double sigma = conductivity_from_linewidth(inc, p.mode);
            c.rows.push_back({m.linewidth, inc, sigma});
            rows.push_back({{"name", m.name},
                            {"linewidth_Hz", m.linewidth},
                            {"increase_Hz", inc},
                            {"conductivity_S_per_m", sigma}});
        }
        write_csv(out.add("conductivities.csv"), c);
        j["conductivities"] = rows;
    }
    return j;
}

Json run_tuning(const Scenario& sc, Outputs& out) {
    TuningOptions opt;
    opt.local_field = sc.tuning.local_field;
    Json rods = Json::array();
    for (std::size_t i = 0; i < sc.tuning.rods.size(); ++i) {
        const auto& r = sc.tuning.rods[i];
        const auto curve = tuning_curve(sc.geometry, sc.tuning.mode, r.rod, r.depths, opt);
        const bool dielectric = r.rod.material == RodMaterial::Dielectric;
        write_tuning_csv(out.add(numbered(dielectric ? "tuning_dielectric" : "tuning_conductor", i)),
                         curve);
        bool flagged = false;
        for (const auto& s : curve) flagged = flagged || s.nonperturbative;
        Json jr;
        jr["material"] = dielectric ? "dielectric" : "conductor";
        if (dielectric) jr["permittivity"] = r.rod.permittivity;
        jr["diameter_m"] = r.rod.diameter;
        jr["max_depth_m"] = curve.back().depth;
        jr["shift_at_max_depth_Hz"] = curve.back().shift;
        jr["nonperturbative"] = flagged;
        rods.push_back(jr);
    }
    return Json{{"mode", sc.tuning.mode.label()},
                {"local_field",
                 sc.tuning.local_field == LocalField::QuasiStatic ? "quasi_static" : "unperturbed"},
                {"rods", rods}};
}

Json run_spectrum(const Scenario& sc, Outputs& out) {
    const auto& p = sc.spectrum;
    const std::uint64_t seed = *sc.seed;

    // Electric map per unit of the drive: either imported or solved at the given voltages.
    double per_volt = 1.0;
    std::optional<FieldMap> map;
    if (p.field_map) {
        map = read_field_map_csv(*p.field_map);
    } else {
        const auto [v1, v2] = p.electrode_voltages;
        map = solve_electrostatic(sc.geometry, sc.grid, v1, v2).field;
        if (v2 != v1) per_volt = 1.0 / (v2 - v1);
    }
    double residual_scale = 1.0;
    if (p.residual_field) residual_scale = *p.residual_field / cloud_moments(*map, p.cloud).mean;

    FrequencyGrid grid{p.system.field_free_frequency + p.detuning_start,
                       p.system.field_free_frequency + p.detuning_stop, p.points};
    Json j;
    j["residual_scale"] = residual_scale;
    std::size_t index = 0;

    if (!p.currents.empty()) {
        CsvTable t;
        t.comments.push_back("Zeeman calibration sweep; B in T, frequencies in Hz");
        t.header = {"current_A", "B_applied_T", "nu_plus_Hz", "nu_minus_Hz", "fwhm_Hz", "resolved"};
        std::vector<CalibrationPoint> points;
        for (double current : p.currents) {
            SpectrumRequest rq;
            rq.cloud = p.cloud;
            rq.b_field = p.gauss_per_ampere * current * constants::gauss;
            rq.e_scale = residual_scale;
            rq.grid = grid;
            rq.samples = p.samples;
            rq.seed = seed + index;
            const auto line = synthesize_spectrum(p.system, *map, rq);
            write_spectrum_csv(out.add(numbered("spectrum", index)), line);
            ++index;
            const auto fit = fit_spectrum(line);
            t.rows.push_back({current, rq.b_field, fit.center_high, fit.center_low, fit.fwhm(),
                              fit.resolved ? 1.0 : 0.0});
            if (fit.resolved && rq.b_field >= kPaschenBackThreshold) {
                points.push_back({current, fit.center_high, fit.center_low, 1.0});
            }
        }
        write_csv(out.add("calibration.csv"), t);
        Json cal;
        cal["injected_gauss_per_ampere"] = p.gauss_per_ampere;
        cal["resolved_points"] = points.size();
        if (points.size() >= 3) {
            const auto c = linear_calibration_fit(p.system, points);
            cal["fitted_gauss_per_ampere"] = c.gauss_per_ampere;
            cal["intercept_plus_Hz"] = c.intercept_plus;
            cal["intercept_minus_Hz"] = c.intercept_minus;
        }
        j["calibration"] = cal;
    }

    if (p.stark) {
        CsvTable t;
        t.comments.push_back("Stark scan; v2 in V, shifts and widths in Hz");
        t.header = {"v2_V", "mean_shift_Hz", "center_Hz", "width_Hz", "sigma_E_over_E"};
        double width0 = 0.0;
        const auto zero_field = transition_frequencies(p.system, 0.0, p.stark->b_field);
        const double splitting = zero_field.plus - zero_field.minus;
        if (!(splitting > 0.0)) {
            throw ValidationError("stark_scan b_field must put the +1 line above the -1 line");
        }
        Json rows = Json::array();
        for (double v : p.stark->voltages) {
            SpectrumRequest rq;
            rq.cloud = p.cloud;
            rq.b_field = p.stark->b_field;
            rq.e_scale = v * per_volt;
            rq.grid = grid;
            rq.samples = p.samples;
            rq.seed = seed + index;
            const auto line = synthesize_spectrum(p.system, *map, rq);
            write_spectrum_csv(out.add(numbered("spectrum", index)), line);
            ++index;
            const auto fit = fit_zeeman_doublet(line, splitting);
            if (width0 == 0.0) width0 = fit.width;
            double rel = std::numeric_limits<double>::quiet_NaN();
            if (line.mean_stark_shift != 0.0 && fit.width >= width0) {
                rel = broadening_analysis(fit.width, width0, line.mean_stark_shift)
                          .relative_inhomogeneity;
            }
            const double center = 0.5 * (fit.center_high + fit.center_low);
            t.rows.push_back({v, line.mean_stark_shift, center, fit.width, rel});
            Json r{{"v2_V", v}, {"mean_shift_Hz", line.mean_stark_shift}, {"width_Hz", fit.width}};
            if (std::isfinite(rel)) r["sigma_E_over_E"] = rel;
            rows.push_back(r);
        }
        write_csv(out.add("stark.csv"), t);
        j["stark_scan"] = rows;
        if (rows.size() >= 2 && width0 > 0.0) {
            j["width_ratio_at_max"] = rows.back()["width_Hz"].get<double>() / width0;
        }
    }
    return j;
}

Json run_transmission(const Scenario& sc, Outputs& out) {
    const auto& p = sc.transmission;
    std::mt19937_64 rng(sc.seed.value_or(0));
    std::normal_distribution<double> normal(0.0, 1.0);
    CsvTable t;
    t.comments.push_back("transmission vs drive power; rates kappa/2pi in Hz");
    t.header = {"power_W", "photon_number", "fitted_linewidth_Hz", "fitted_peak"};
    Json rows = Json::array();
    for (std::size_t i = 0; i < p.powers.size(); ++i) {
        TransmissionTrace trace;
        trace.drive_power = p.powers[i];
        trace.temperature = p.temperature;
        const double half_span = 0.5 * p.span_linewidths * p.linewidth;
        const double peak = s21_amplitude(p.linewidth, p.port_coupling, 0.0);
        for (int k = 0; k < p.points; ++k) {
            const double d = -half_span + 2.0 * half_span * k / (p.points - 1);
            double a = s21_amplitude(p.linewidth, p.port_coupling, d);
            if (p.noise > 0.0) a += p.noise * peak * normal(rng);
            trace.detuning.push_back(d);
            trace.amplitude.push_back(a);
        }
        const auto fit = fit_lorentzian(trace);
        const auto norm = normalized(trace, fit);
        write_trace_csv(out.add(numbered("trace", i)), norm);
        const double n = photon_number(p.powers[i], p.frequency, p.linewidth, p.port_coupling, 0.0);
        t.rows.push_back({p.powers[i], n, fit.linewidth, fit.peak});
        rows.push_back({{"power_W", p.powers[i]},
                        {"photon_number", n},
                        {"fitted_linewidth_Hz", fit.linewidth}});
    }
    write_csv(out.add("transmission.csv"), t);
    return Json{{"thermal_occupation", thermal_occupation(p.temperature, p.frequency)},
                {"points", rows}};
}

}  // namespace

RunResult run_scenario(const Scenario& sc, const std::filesystem::path& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir)) {
        throw IoError("cannot create output directory '" + out_dir.string() + "'");
    }
    Outputs out{out_dir, {}};

    Json results;
    switch (sc.kind) {
        case ScenarioKind::Modes: results = run_modes(sc, out); break;
        case ScenarioKind::Fields: results = run_fields(sc, out); break;
        case ScenarioKind::Losses: results = run_losses(sc, out); break;
        case ScenarioKind::Tuning: results = run_tuning(sc, out); break;
        case ScenarioKind::Spectrum: results = run_spectrum(sc, out); break;
        case ScenarioKind::Transmission: results = run_transmission(sc, out); break;
    }

    Json summary;
    summary["tool"] = "biascav";
    summary["version"] = version();
    summary["schema_version"] = sc.schema_version;
    summary["kind"] = to_string(sc.kind);
    summary["config_hash"] = sc.config_hash;
    summary["seed"] = sc.seed ? Json(*sc.seed) : Json(nullptr);
    summary["results"] = results;
    Json files = Json::array();
    for (const auto& f : out.files) files.push_back(f.filename().string());
    summary["files"] = files;

    RunResult r;
    r.summary = summary.dump(2) + "\n";
    const auto path = out.add("summary.json");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
    os << r.summary;
    os.flush();
    if (!os) throw IoError("failed writing '" + path.string() + "'");
    r.files = out.files;
    return r;
}

}  // namespace biascav
