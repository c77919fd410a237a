#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "biascav/error.hpp"
#include "biascav/fieldsolve.hpp"
#include "biascav/geometry.hpp"
#include "biascav/lossmodel.hpp"
#include "biascav/scenario.hpp"
#include "biascav/spectro.hpp"
#include "biascav/tuning.hpp"
#include "biascav/txn.hpp"

namespace py = pybind11;
using namespace biascav;

namespace {

Eigen::MatrixXd values_array(const FieldMap& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.values().size()), 3);
    for (std::size_t i = 0; i < m.values().size(); ++i) out.row(Eigen::Index(i)) = m.values()[i];
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "biascav core bindings";
    m.attr("__version__") = version();

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<UnsupportedError>(m, "UnsupportedError", base.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", base.ptr());
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    py::class_<ModeIndex>(m, "ModeIndex")
        .def(py::init<int, int, int>(), py::arg("m"), py::arg("n"), py::arg("l"))
        .def_readwrite("m", &ModeIndex::m)
        .def_readwrite("n", &ModeIndex::n)
        .def_readwrite("l", &ModeIndex::l)
        .def("label", &ModeIndex::label)
        .def("__repr__", &ModeIndex::label);
    m.def("parse_mode", &parse_mode);

    py::class_<CavityGeometry>(m, "CavityGeometry")
        .def_static("reference", &CavityGeometry::reference)
        .def_static("box", &CavityGeometry::box, py::arg("lx"), py::arg("ly"), py::arg("lz"))
        .def_readwrite("lx", &CavityGeometry::lx)
        .def_readwrite("ly", &CavityGeometry::ly)
        .def_readwrite("lz", &CavityGeometry::lz)
        .def("volume", &CavityGeometry::volume)
        .def("center", &CavityGeometry::center)
        .def("extent", &CavityGeometry::extent)
        .def("validate", &CavityGeometry::validate);

    m.def("resonance_frequency", &resonance_frequency, py::arg("geometry"), py::arg("mode"));
    m.def("geometry_factor", &geometry_factor, py::arg("geometry"), py::arg("mode"),
          py::arg("samples") = 256);

    py::class_<GridSpec>(m, "GridSpec")
        .def(py::init<>())
        .def_readwrite("cells", &GridSpec::cells)
        .def_readwrite("tolerance", &GridSpec::tolerance)
        .def_readwrite("max_iterations", &GridSpec::max_iterations)
        .def_static("electrostatic_default", &GridSpec::electrostatic_default)
        .def_static("magnetostatic_default", &GridSpec::magnetostatic_default);

    py::class_<FieldMap>(m, "FieldMap")
        .def_property_readonly("shape", [](const FieldMap& f) {
            return std::array<int, 3>{f.shape().nx, f.shape().ny, f.shape().nz};
        })
        .def_property_readonly("spacing", [](const FieldMap& f) { return Vec3(f.spacing()); })
        .def_property_readonly("values", &values_array)
        .def("center", &FieldMap::center)
        .def("sample", &FieldMap::sample)
        .def("save_csv", [](const FieldMap& f, const std::filesystem::path& p) { write_field_map_csv(p, f); })
        .def_static("load_csv", [](const std::filesystem::path& p) { return read_field_map_csv(p); })
        .def("__eq__", [](const FieldMap& a, const FieldMap& b) { return a == b; });

    py::class_<Cloud>(m, "Cloud")
        .def(py::init([](const Vec3& offset, double diameter) { return Cloud{offset, diameter}; }),
             py::arg("offset") = Vec3(Vec3::Zero()), py::arg("diameter") = 1.1e-3)
        .def_readwrite("offset", &Cloud::offset)
        .def_readwrite("diameter", &Cloud::diameter);

    m.def("solve_electrostatic",
          [](const CavityGeometry& g, const GridSpec& grid, double v1, double v2) {
              py::gil_scoped_release release;
              return solve_electrostatic(g, grid, v1, v2).field;
          },
          py::arg("geometry"), py::arg("grid"), py::arg("v1"), py::arg("v2"));
    m.def("solve_magnetostatic",
          [](const CavityGeometry& g, const GridSpec& grid, double b, const Vec3& dir) {
              py::gil_scoped_release release;
              return solve_magnetostatic(g, grid, b, dir).field;
          },
          py::arg("geometry"), py::arg("grid"), py::arg("b_ext"), py::arg("direction"));
    m.def("field_statistics",
          [](const FieldMap& f, const Vec3& region_size, const Cloud& cloud) {
              const auto st = field_statistics(f, Region::centered(f.center(), region_size), cloud);
              py::dict d;
              d["center"] = st.center_value;
              d["mean_abs_deviation"] = st.mean_abs_deviation;
              d["max_abs_deviation"] = st.max_abs_deviation;
              d["cloud_mean"] = st.cloud_mean;
              d["cloud_std"] = st.cloud_std;
              return d;
          },
          py::arg("field"), py::arg("region_size"), py::arg("cloud"));

    m.def("surface_resistivity", &surface_resistivity, py::arg("conductivity"), py::arg("frequency"));
    m.def("trapped_flux_resistance", &trapped_flux_resistance, py::arg("trapped_field"),
          py::arg("frequency"));
    m.def("electrode_linewidth", &electrode_linewidth, py::arg("conductivity"),
          py::arg("mode") = ModeIndex{3, 0, 1});
    m.def("conductivity_from_linewidth", &conductivity_from_linewidth, py::arg("linewidth"),
          py::arg("mode") = ModeIndex{3, 0, 1});
    m.def("quality_factors",
          [](double nu, double kappa, double amp) {
              const auto q = quality_factors(nu, kappa, amp);
              return std::make_pair(q.loaded, q.internal);
          },
          py::arg("frequency"), py::arg("linewidth"), py::arg("amplitude"));
    m.def("trapped_flux_q_limit", &trapped_flux_q_limit, py::arg("geometry"), py::arg("mode"),
          py::arg("trapped_field"));

    m.def("perturbation_shift",
          [](const CavityGeometry& g, const ModeIndex& mode, const std::string& material,
             double depth, double diameter, double permittivity, bool quasi_static) {
              RodInsertion rod;
              if (material == "dielectric") {
                  rod.material = RodMaterial::Dielectric;
              } else if (material == "conductor") {
                  rod.material = RodMaterial::Conductor;
              } else {
                  throw ValidationError("material must be 'dielectric' or 'conductor'");
              }
              rod.depth = depth;
              rod.diameter = diameter;
              rod.permittivity = permittivity;
              TuningOptions opt;
              opt.local_field = quasi_static ? LocalField::QuasiStatic : LocalField::Unperturbed;
              return perturbation_shift(g, mode, rod, opt).shift;
          },
          py::arg("geometry"), py::arg("mode"), py::arg("material"), py::arg("depth"),
          py::arg("diameter") = 1.9e-3, py::arg("permittivity") = 9.0,
          py::arg("quasi_static") = true);

    py::class_<RydbergSystem>(m, "RydbergSystem")
        .def(py::init<>())
        .def_readwrite("field_free_frequency", &RydbergSystem::field_free_frequency)
        .def_readwrite("offset_plus", &RydbergSystem::offset_plus)
        .def_readwrite("offset_minus", &RydbergSystem::offset_minus)
        .def_readwrite("polarizability", &RydbergSystem::polarizability)
        .def_readwrite("g_l", &RydbergSystem::g_l)
        .def_readwrite("homogeneous_width", &RydbergSystem::homogeneous_width);
    m.def("transition_frequencies",
          [](const RydbergSystem& s, double e, double b) {
              const auto t = transition_frequencies(s, e, b);
              return std::make_tuple(t.plus, t.minus, t.unresolved_regime);
          },
          py::arg("system"), py::arg("e_field"), py::arg("b_field"));

    py::class_<SpectralLine>(m, "SpectralLine")
        .def(py::init<>())
        .def_readwrite("frequency", &SpectralLine::frequency)
        .def_readwrite("signal", &SpectralLine::signal)
        .def_readonly("seed", &SpectralLine::seed)
        .def_readonly("mean_stark_shift", &SpectralLine::mean_stark_shift);
    m.def("synthesize_spectrum",
          [](const RydbergSystem& s, const FieldMap& e_map, double b_field, const Cloud& cloud,
             double start, double stop, int points, int samples, std::uint64_t seed,
             double e_scale) {
              SpectrumRequest rq;
              rq.cloud = cloud;
              rq.b_field = b_field;
              rq.e_scale = e_scale;
              rq.grid = FrequencyGrid{start, stop, points};
              rq.samples = samples;
              rq.seed = seed;
              py::gil_scoped_release release;
              return synthesize_spectrum(s, e_map, rq);
          },
          py::arg("system"), py::arg("electric_map"), py::arg("b_field"), py::arg("cloud"),
          py::arg("start"), py::arg("stop"), py::arg("points"), py::arg("samples") = 20000,
          py::arg("seed") = 1, py::arg("e_scale") = 1.0);

    py::class_<LineFit>(m, "LineFit")
        .def_readonly("center_high", &LineFit::center_high)
        .def_readonly("center_low", &LineFit::center_low)
        .def_readonly("width", &LineFit::width)
        .def_readonly("amplitude_high", &LineFit::amplitude_high)
        .def_readonly("amplitude_low", &LineFit::amplitude_low)
        .def_readonly("baseline", &LineFit::baseline)
        .def_readonly("resolved", &LineFit::resolved)
        .def("fwhm", &LineFit::fwhm);
    m.def("fit_spectrum", &fit_spectrum, py::arg("line"));
    m.def("fit_zeeman_doublet", &fit_zeeman_doublet, py::arg("line"), py::arg("splitting"));

    m.def("s21_amplitude", &s21_amplitude, py::arg("linewidth"), py::arg("port_coupling"),
          py::arg("detuning"));
    m.def("fit_lorentzian",
          [](std::vector<double> detuning, std::vector<double> amplitude) {
              TransmissionTrace t;
              t.detuning = std::move(detuning);
              t.amplitude = std::move(amplitude);
              const auto f = fit_lorentzian(t);
              py::dict d;
              d["center"] = f.center;
              d["linewidth"] = f.linewidth;
              d["peak"] = f.peak;
              return d;
          },
          py::arg("detuning"), py::arg("amplitude"));
    m.def("photon_number", &photon_number, py::arg("power"), py::arg("frequency"),
          py::arg("linewidth"), py::arg("port_coupling"), py::arg("detuning") = 0.0);
    m.def("thermal_occupation", &thermal_occupation, py::arg("temperature"), py::arg("frequency"));

    m.def("run_scenario",
          [](const std::filesystem::path& config, const std::filesystem::path& out_dir,
             std::optional<std::uint64_t> seed) {
              Overrides ov;
              ov.seed = seed;
              const auto sc = load_scenario(config, ov);
              const auto r = run_scenario(sc, out_dir);
              return r.summary;
          },
          py::arg("config"), py::arg("out_dir"), py::arg("seed") = std::nullopt,
          "Runs a YAML scenario and returns the summary JSON text.");
}
