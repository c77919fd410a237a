#include "biascav/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "biascav/csv.hpp"
#include "biascav/error.hpp"

namespace biascav {

std::string to_string(ScenarioKind kind) {
    switch (kind) {
        case ScenarioKind::Modes: return "modes";
        case ScenarioKind::Fields: return "fields";
        case ScenarioKind::Losses: return "losses";
        case ScenarioKind::Tuning: return "tuning";
        case ScenarioKind::Spectrum: return "spectrum";
        case ScenarioKind::Transmission: return "transmission";
    }
    return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
    for (auto k : {ScenarioKind::Modes, ScenarioKind::Fields, ScenarioKind::Losses,
                   ScenarioKind::Tuning, ScenarioKind::Spectrum, ScenarioKind::Transmission}) {
        if (to_string(k) == s) return k;
    }
    throw ValidationError("unknown scenario kind '" + s +
                          "' (expected modes, fields, losses, tuning, spectrum or transmission)");
}

std::array<int, 3> parse_grid(const std::string& text) {
    std::array<int, 3> cells{};
    char x1 = 0;
    char x2 = 0;
    std::istringstream is(text);
    if (!(is >> cells[0] >> x1 >> cells[1] >> x2 >> cells[2]) || (x1 != 'x' && x1 != 'X') ||
        (x2 != 'x' && x2 != 'X') || !is.eof()) {
        throw ValidationError("grid must look like 64x32x48, got '" + text + "'");
    }
    for (int c : cells) {
        if (c < 16) throw ValidationError("grid resolution must be at least 16 cells per axis");
    }
    return cells;
}

namespace {

std::string where(const YAML::Node& n) {
    const auto m = n.Mark();
    if (m.line < 0) return "config";
    return "config line " + std::to_string(m.line + 1) + ", column " + std::to_string(m.column + 1);
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& msg) {
    throw ValidationError(where(n) + ": " + msg);
}

void expect_map(const YAML::Node& n, const std::string& name) {
    if (!n.IsMap()) fail(n, "'" + name + "' must be a mapping");
}

void allow_keys(const YAML::Node& n, const std::string& name, std::initializer_list<const char*> keys) {
    expect_map(n, name);
    const std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& kv : n) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) fail(kv.first, "unknown key '" + key + "' in '" + name + "'");
    }
}

YAML::Node require_block(const YAML::Node& root, const char* key, ScenarioKind kind) {
    const YAML::Node n = root[key];
    if (!n) {
        fail(root, "missing required block '" + std::string(key) + "' for scenario kind '" +
                       to_string(kind) + "'");
    }
    return n;
}

template <class T>
T scalar(const YAML::Node& n, const std::string& name) {
    if (!n.IsScalar()) fail(n, "'" + name + "' must be a scalar");
    try {
        return n.as<T>();
    } catch (const YAML::Exception&) {
        fail(n, "'" + name + "' has an invalid value '" + n.Scalar() + "'");
    }
}

template <class T>
T get(const YAML::Node& parent, const char* key, T fallback) {
    const YAML::Node n = parent[key];
    return n ? scalar<T>(n, key) : fallback;
}

template <class T>
T need(const YAML::Node& parent, const char* key) {
    const YAML::Node n = parent[key];
    if (!n) fail(parent, "missing required key '" + std::string(key) + "'");
    return scalar<T>(n, key);
}

double positive(const YAML::Node& parent, const char* key, double fallback) {
    const double v = get<double>(parent, key, fallback);
    if (!(v > 0.0) || !std::isfinite(v)) fail(parent[key] ? parent[key] : parent, std::string(key) + " must be positive");
    return v;
}

std::vector<double> numbers(const YAML::Node& n, const std::string& name) {
    if (!n.IsSequence()) fail(n, "'" + name + "' must be a list of numbers");
    std::vector<double> v;
    for (const auto& e : n) v.push_back(scalar<double>(e, name));
    return v;
}

Vec3 vec3(const YAML::Node& n, const std::string& name) {
    const auto v = numbers(n, name);
    if (v.size() != 3) fail(n, "'" + name + "' needs three components");
    return Vec3(v[0], v[1], v[2]);
}

// Either a list, or {start, stop, points} expanded linearly.
std::vector<double> sweep(const YAML::Node& n, const std::string& name) {
    if (n.IsSequence()) return numbers(n, name);
    allow_keys(n, name, {"start", "stop", "points"});
    const double a = need<double>(n, "start");
    const double b = need<double>(n, "stop");
    const int k = need<int>(n, "points");
    if (k < 2) fail(n, "'" + name + "' needs at least 2 points");
    std::vector<double> v(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) v[static_cast<std::size_t>(i)] = a + (b - a) * i / (k - 1);
    return v;
}

ModeIndex mode(const YAML::Node& n) {
    try {
        return parse_mode(scalar<std::string>(n, "mode"));
    } catch (const Error& e) {
        fail(n, e.what());
    }
}

CavityGeometry parse_geometry(const YAML::Node& n) {
    allow_keys(n, "geometry", {"preset", "size", "electrodes", "holes", "rod_port"});
    CavityGeometry g;
    const auto preset = get<std::string>(n, "preset", "");
    if (preset == "reference") {
        g = CavityGeometry::reference();
    } else if (!preset.empty()) {
        fail(n["preset"], "unknown geometry preset '" + preset + "' (expected 'reference')");
    } else if (!n["size"]) {
        fail(n, "geometry needs 'size' or 'preset: reference'");
    }
    if (n["size"]) {
        const Vec3 s = vec3(n["size"], "size");
        g.lx = s.x();
        g.ly = s.y();
        g.lz = s.z();
        if (preset.empty()) g.rod_port = CavityGeometry::box(g.lx, g.ly, g.lz).rod_port;
    }
    if (const auto es = n["electrodes"]) {
        if (!es.IsSequence()) fail(es, "'electrodes' must be a list");
        g.electrodes.clear();
        for (const auto& e : es) {
            allow_keys(e, "electrode", {"axis", "anchor", "radius", "potential"});
            Electrode el;
            try {
                el.axis = axis_from_string(get<std::string>(e, "axis", "z"));
            } catch (const Error& err) {
                fail(e["axis"], err.what());
            }
            if (!e["anchor"]) fail(e, "electrode needs an 'anchor' point");
            el.anchor = vec3(e["anchor"], "anchor");
            el.radius = positive(e, "radius", el.radius);
            el.potential = get<double>(e, "potential", 0.0);
            g.electrodes.push_back(el);
        }
    }
    if (const auto hs = n["holes"]) {
        if (!hs.IsSequence()) fail(hs, "'holes' must be a list");
        g.holes.clear();
        for (const auto& h : hs) {
            allow_keys(h, "hole", {"center", "radius"});
            if (!h["center"]) fail(h, "hole needs a 'center'");
            g.holes.push_back(AccessHole{vec3(h["center"], "center"), get<double>(h, "radius", 1.5e-3)});
        }
    }
    if (const auto rp = n["rod_port"]) {
        allow_keys(rp, "rod_port", {"center", "diameter"});
        if (rp["center"]) g.rod_port.center = vec3(rp["center"], "center");
        g.rod_port.diameter = positive(rp, "diameter", g.rod_port.diameter);
    }
    try {
        g.validate();
    } catch (const ValidationError& e) {
        fail(n, e.what());
    }
    return g;
}

GridSpec parse_grid_block(const YAML::Node& n, GridSpec g, const char* name) {
    allow_keys(n, name, {"cells", "tolerance", "max_iterations", "relaxation"});
    if (n["cells"]) {
        const auto c = numbers(n["cells"], "cells");
        if (c.size() != 3) fail(n["cells"], "'cells' needs three integers");
        for (int a = 0; a < 3; ++a) g.cells[static_cast<std::size_t>(a)] = static_cast<int>(c[static_cast<std::size_t>(a)]);
    }
    g.tolerance = get<double>(n, "tolerance", g.tolerance);
    g.max_iterations = get<long>(n, "max_iterations", g.max_iterations);
    g.relaxation = get<double>(n, "relaxation", g.relaxation);
    try {
        g.validate();
    } catch (const ValidationError& e) {
        fail(n, e.what());
    }
    return g;
}

Cloud parse_cloud(const YAML::Node& n, Cloud c) {
    if (!n) return c;
    allow_keys(n, "cloud", {"offset", "diameter"});
    if (n["offset"]) c.offset = vec3(n["offset"], "offset");
    c.diameter = get<double>(n, "diameter", c.diameter);
    if (!(c.diameter >= 0.0)) fail(n, "cloud diameter must be >= 0");
    return c;
}

std::array<double, 2> voltages(const YAML::Node& n, const std::string& name) {
    const auto v = numbers(n, name);
    if (v.size() != 2) fail(n, "'" + name + "' needs two voltages [v1, v2]");
    return {v[0], v[1]};
}

void parse_modes(const YAML::Node& n, ModesParams& p) {
    allow_keys(n, "modes", {"list", "measured"});
    const auto list = n["list"];
    if (!list || !list.IsSequence() || list.size() == 0) fail(n, "'modes.list' must name at least one mode");
    for (const auto& m : list) p.modes.push_back(mode(m));
    p.measured.assign(p.modes.size(), std::nullopt);
    if (const auto meas = n["measured"]) {
        expect_map(meas, "measured");
        for (const auto& kv : meas) {
            const ModeIndex m = mode(kv.first);
            const auto it = std::find(p.modes.begin(), p.modes.end(), m);
            if (it == p.modes.end()) fail(kv.first, "measured frequency given for unlisted mode");
            p.measured[static_cast<std::size_t>(it - p.modes.begin())] = scalar<double>(kv.second, "measured");
        }
    }
}

void parse_fields(const YAML::Node& n, FieldsParams& p) {
    allow_keys(n, "fields", {"electrode_voltages", "b_ext", "direction", "region_size", "cloud", "export_maps"});
    if (n["electrode_voltages"]) p.electrode_voltages = voltages(n["electrode_voltages"], "electrode_voltages");
    if (n["b_ext"]) p.b_ext = scalar<double>(n["b_ext"], "b_ext");
    if (n["direction"]) p.direction = vec3(n["direction"], "direction");
    if (n["region_size"]) p.region_size = vec3(n["region_size"], "region_size");
    p.cloud = parse_cloud(n["cloud"], p.cloud);
    p.export_maps = get<bool>(n, "export_maps", true);
    if (!p.electrode_voltages && !p.b_ext) {
        fail(n, "'fields' needs 'electrode_voltages' and/or 'b_ext'");
    }
}

MaterialSpec parse_material(const YAML::Node& n) {
    allow_keys(n, "material", {"name", "conductivity", "superconducting", "trapped_field"});
    MaterialSpec m;
    m.name = get<std::string>(n, "name", m.name);
    m.superconducting = get<bool>(n, "superconducting", false);
    m.conductivity = get<double>(n, "conductivity", m.conductivity);
    m.trapped_field = get<double>(n, "trapped_field", 0.0);
    try {
        m.validate();
    } catch (const ValidationError& e) {
        fail(n, e.what());
    }
    return m;
}

void parse_losses(const YAML::Node& n, LossesParams& p) {
    allow_keys(n, "losses", {"mode", "base_linewidth", "amplitude", "electrodes", "trapped_field", "measured"});
    if (n["mode"]) p.mode = mode(n["mode"]);
    p.base_linewidth = need<double>(n, "base_linewidth");
    p.amplitude = get<double>(n, "amplitude", 0.0);
    if (!(p.amplitude >= 0.0 && p.amplitude < 1.0)) fail(n, "'amplitude' must lie in [0, 1)");
    if (n["electrodes"]) p.electrodes = parse_material(n["electrodes"]);
    p.trapped_field = get<double>(n, "trapped_field", 0.0);
    if (const auto ms = n["measured"]) {
        if (!ms.IsSequence()) fail(ms, "'measured' must be a list");
        for (const auto& m : ms) {
            allow_keys(m, "measured", {"name", "linewidth"});
            p.measured.push_back({get<std::string>(m, "name", "sample"), need<double>(m, "linewidth")});
        }
    }
}

void parse_tuning(const YAML::Node& n, TuningParams& p) {
    allow_keys(n, "tuning", {"mode", "local_field", "rods"});
    if (n["mode"]) p.mode = mode(n["mode"]);
    const auto lf = get<std::string>(n, "local_field", "quasi_static");
    if (lf == "quasi_static") {
        p.local_field = LocalField::QuasiStatic;
    } else if (lf == "unperturbed") {
        p.local_field = LocalField::Unperturbed;
    } else {
        fail(n["local_field"], "local_field must be 'quasi_static' or 'unperturbed'");
    }
    const auto rods = n["rods"];
    if (!rods || !rods.IsSequence() || rods.size() == 0) fail(n, "'tuning.rods' needs at least one rod");
    for (const auto& r : rods) {
        allow_keys(r, "rod", {"material", "permittivity", "diameter", "depths"});
        RodSweep s;
        const auto mat = get<std::string>(r, "material", "dielectric");
        if (mat == "dielectric") {
            s.rod.material = RodMaterial::Dielectric;
        } else if (mat == "conductor") {
            s.rod.material = RodMaterial::Conductor;
        } else {
            fail(r["material"], "rod material must be 'dielectric' or 'conductor'");
        }
        s.rod.permittivity = get<double>(r, "permittivity", s.rod.permittivity);
        s.rod.diameter = positive(r, "diameter", s.rod.diameter);
        if (!r["depths"]) fail(r, "rod needs 'depths'");
        s.depths = sweep(r["depths"], "depths");
        p.rods.push_back(std::move(s));
    }
}

void parse_spectrum(const YAML::Node& n, SpectrumParams& p, const std::filesystem::path& base) {
    allow_keys(n, "spectrum", {"system", "electrode_voltages", "field_map", "residual_field", "cloud",
                               "samples", "detuning", "gauss_per_ampere", "currents", "stark_scan"});
    if (const auto s = n["system"]) {
        allow_keys(s, "system", {"frequency", "offset_plus", "offset_minus", "polarizability", "g_l",
                                 "homogeneous_width"});
        auto& y = p.system;
        y.field_free_frequency = get<double>(s, "frequency", y.field_free_frequency);
        y.offset_plus = get<double>(s, "offset_plus", y.offset_plus);
        y.offset_minus = get<double>(s, "offset_minus", y.offset_minus);
        y.polarizability = get<double>(s, "polarizability", y.polarizability);
        y.g_l = get<double>(s, "g_l", y.g_l);
        y.homogeneous_width = get<double>(s, "homogeneous_width", y.homogeneous_width);
        try {
            y.validate();
        } catch (const ValidationError& e) {
            fail(s, e.what());
        }
    }
    if (n["electrode_voltages"]) p.electrode_voltages = voltages(n["electrode_voltages"], "electrode_voltages");
    if (n["field_map"]) {
        std::filesystem::path f = scalar<std::string>(n["field_map"], "field_map");
        p.field_map = f.is_absolute() ? f : base / f;
    }
    if (n["residual_field"]) p.residual_field = positive(n, "residual_field", 0.0);
    p.cloud = parse_cloud(n["cloud"], p.cloud);
    p.samples = get<int>(n, "samples", p.samples);
    if (p.samples < 1000) fail(n["samples"], "'samples' must be at least 1000");
    if (const auto d = n["detuning"]) {
        allow_keys(d, "detuning", {"start", "stop", "points"});
        p.detuning_start = get<double>(d, "start", p.detuning_start);
        p.detuning_stop = get<double>(d, "stop", p.detuning_stop);
        p.points = get<int>(d, "points", p.points);
        if (!(p.detuning_stop > p.detuning_start) || p.points < 20) {
            fail(d, "detuning needs stop > start and at least 20 points");
        }
    }
    p.gauss_per_ampere = positive(n, "gauss_per_ampere", p.gauss_per_ampere);
    if (n["currents"]) p.currents = sweep(n["currents"], "currents");
    if (const auto s = n["stark_scan"]) {
        allow_keys(s, "stark_scan", {"b_field", "voltages"});
        StarkScan scan;
        scan.b_field = get<double>(s, "b_field", 0.0);
        if (!s["voltages"]) fail(s, "stark_scan needs 'voltages'");
        scan.voltages = sweep(s["voltages"], "voltages");
        p.stark = scan;
    }
}

void parse_transmission(const YAML::Node& n, TransmissionParams& p) {
    allow_keys(n, "transmission", {"frequency", "linewidth", "port_coupling", "temperature", "powers",
                                   "points", "span_linewidths", "noise"});
    p.frequency = positive(n, "frequency", p.frequency);
    p.linewidth = positive(n, "linewidth", p.linewidth);
    p.port_coupling = get<double>(n, "port_coupling", p.linewidth / 20.0);
    if (!(p.port_coupling > 0.0 && 2.0 * p.port_coupling <= p.linewidth)) {
        fail(n, "port_coupling must be positive and at most half the linewidth");
    }
    p.temperature = get<double>(n, "temperature", 0.0);
    if (!n["powers"]) fail(n, "'transmission' needs 'powers'");
    p.powers = sweep(n["powers"], "powers");
    p.points = get<int>(n, "points", p.points);
    if (p.points < 15) fail(n, "'points' must be at least 15");
    p.span_linewidths = get<double>(n, "span_linewidths", p.span_linewidths);
    if (!(p.span_linewidths >= 3.0)) fail(n, "'span_linewidths' must be at least 3");
    p.noise = get<double>(n, "noise", 0.0);
    if (!(p.noise >= 0.0)) fail(n, "'noise' must be >= 0");
}

// Canonical text of a node: maps sorted by key, numeric scalars reformatted.
void canonical(const YAML::Node& n, std::string& out, bool top) {
    switch (n.Type()) {
        case YAML::NodeType::Map: {
            // Sort keys through an index; assigning YAML::Node writes through to the tree.
            std::vector<std::string> keys;
            std::vector<YAML::Node> values;
            for (const auto& kv : n) {
                const auto key = kv.first.as<std::string>();
                if (top && (key == "output" || key == "seed")) continue;
                keys.push_back(key);
                values.push_back(kv.second);
            }
            std::vector<std::size_t> order(keys.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
            out += '{';
            for (std::size_t i : order) {
                out += keys[i];
                out += ':';
                canonical(values[i], out, false);
                out += ';';
            }
            out += '}';
            break;
        }
        case YAML::NodeType::Sequence:
            out += '[';
            for (const auto& e : n) {
                canonical(e, out, false);
                out += ',';
            }
            out += ']';
            break;
        case YAML::NodeType::Scalar: {
            const std::string& s = n.Scalar();
            try {
                out += format_number(parse_number(s));
            } catch (const Error&) {
                out += '"' + s + '"';
            }
            break;
        }
        default:
            out += '~';
    }
}

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

}  // namespace

Scenario parse_scenario(const std::string& text, const Overrides& overrides,
                        const std::filesystem::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ValidationError("config line " + std::to_string(e.mark.line + 1) + ", column " +
                              std::to_string(e.mark.column + 1) + ": " + e.msg);
    }
    if (!root || !root.IsMap()) throw ValidationError("config: top level must be a mapping");
    std::string canon;
    canonical(root, canon, true);
    allow_keys(root, "config", {"schema_version", "kind", "seed", "output", "geometry", "grid",
                                "magnetic_grid", "modes", "fields", "losses", "tuning", "spectrum",
                                "transmission"});

    Scenario sc;
    if (!root["schema_version"]) fail(root, "missing required key 'schema_version'");
    sc.schema_version = scalar<int>(root["schema_version"], "schema_version");
    if (sc.schema_version != kSchemaVersion) {
        fail(root["schema_version"], "unsupported schema_version " + std::to_string(sc.schema_version) +
                                         " (this build reads " + std::to_string(kSchemaVersion) + ")");
    }
    if (!root["kind"]) fail(root, "missing required key 'kind'");
    try {
        sc.kind = scenario_kind_from_string(scalar<std::string>(root["kind"], "kind"));
    } catch (const ValidationError& e) {
        if (std::string(e.what()).rfind("config", 0) == 0) throw;
        fail(root["kind"], e.what());
    }
    if (const auto out = root["output"]) {
        allow_keys(out, "output", {"dir"});
        if (out["dir"]) {
            std::filesystem::path d = scalar<std::string>(out["dir"], "dir");
            sc.output_dir = d.is_absolute() ? d : base_dir / d;
        }
    }
    if (root["seed"]) sc.seed = scalar<std::uint64_t>(root["seed"], "seed");
    if (overrides.seed) sc.seed = overrides.seed;

    if (root["grid"]) sc.grid = parse_grid_block(root["grid"], sc.grid, "grid");
    if (root["magnetic_grid"]) {
        sc.magnetic_grid = parse_grid_block(root["magnetic_grid"], sc.magnetic_grid, "magnetic_grid");
    }
    if (overrides.grid) {
        sc.grid.cells = *overrides.grid;
        sc.magnetic_grid.cells = *overrides.grid;
    }

    const bool needs_geometry =
        sc.kind != ScenarioKind::Transmission &&
        !(sc.kind == ScenarioKind::Spectrum && root["spectrum"] && root["spectrum"]["field_map"]);
    if (needs_geometry) {
        sc.geometry = parse_geometry(require_block(root, "geometry", sc.kind));
    } else if (root["geometry"]) {
        sc.geometry = parse_geometry(root["geometry"]);
    }

    switch (sc.kind) {
        case ScenarioKind::Modes:
            parse_modes(require_block(root, "modes", sc.kind), sc.modes);
            break;
        case ScenarioKind::Fields:
            parse_fields(require_block(root, "fields", sc.kind), sc.fields);
            break;
        case ScenarioKind::Losses:
            parse_losses(require_block(root, "losses", sc.kind), sc.losses);
            break;
        case ScenarioKind::Tuning:
            parse_tuning(require_block(root, "tuning", sc.kind), sc.tuning);
            break;
        case ScenarioKind::Spectrum:
            parse_spectrum(require_block(root, "spectrum", sc.kind), sc.spectrum, base_dir);
            if (!sc.seed) fail(root, "scenario kind 'spectrum' needs a 'seed' (or --seed)");
            break;
        case ScenarioKind::Transmission:
            parse_transmission(require_block(root, "transmission", sc.kind), sc.transmission);
            if (sc.transmission.noise > 0.0 && !sc.seed) {
                fail(root, "transmission with noise needs a 'seed' (or --seed)");
            }
            break;
    }

    canon += "|seed=" + (sc.seed ? std::to_string(*sc.seed) : std::string("none"));
    if (overrides.grid) {
        canon += "|grid=" + std::to_string((*overrides.grid)[0]) + "x" +
                 std::to_string((*overrides.grid)[1]) + "x" + std::to_string((*overrides.grid)[2]);
    }
    sc.config_hash = fnv1a_hex(canon);
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path, const Overrides& overrides) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_scenario(ss.str(), overrides, path.parent_path());
}

std::string version() { return BIASCAV_VERSION; }

}  // namespace biascav
