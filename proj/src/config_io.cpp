#include "spindrift/config_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace spindrift {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_short(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void require_known_keys(const json& obj, std::initializer_list<const char*> allowed,
                        const char* where) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) {
            if (item.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) {
            std::ostringstream msg;
            msg << "config: unknown key \"" << item.key() << "\" in " << where;
            throw std::invalid_argument(msg.str());
        }
    }
}

template <typename T>
void load(const json& obj, const char* key, T& dst, const char* where) {
    if (!obj.contains(key)) return;
    try {
        dst = obj.at(key).get<T>();
    } catch (const json::exception&) {
        std::ostringstream msg;
        msg << "config: key \"" << key << "\" in " << where << " has the wrong type";
        throw std::invalid_argument(msg.str());
    }
}

Vec3 load_vec3(const json& arr, const char* where) {
    if (!arr.is_array() || arr.size() != 3) {
        std::ostringstream msg;
        msg << "config: " << where << " must be an array of 3 numbers";
        throw std::invalid_argument(msg.str());
    }
    Vec3 v;
    for (int k = 0; k < 3; ++k) v(k) = arr.at(k).get<double>();
    return v;
}

std::vector<Layer> load_layers(const json& arr) {
    if (!arr.is_array() || arr.empty()) {
        throw std::invalid_argument("config: \"layers\" must be a non-empty array");
    }
    std::vector<Layer> layers;
    for (const auto& item : arr) {
        require_known_keys(item, {"x_start", "x_end", "p", "m", "doping"}, "layers[]");
        Layer L;
        load(item, "x_start", L.x_start, "layers[]");
        load(item, "x_end", L.x_end, "layers[]");
        load(item, "p", L.p, "layers[]");
        load(item, "doping", L.doping, "layers[]");
        if (item.contains("m")) L.m = load_vec3(item.at("m"), "layers[].m");
        layers.push_back(L);
    }
    return layers;
}

void apply_device_section(const json& dev, DeviceConfig& cfg) {
    require_known_keys(dev,
                       {"D", "tau", "gamma", "precession_rate", "lambda_D2", "V_th",
                        "U", "n_bc", "grid_points", "dt", "length", "C_max", "C_min",
                        "epsilon_r", "layers", "polarization"},
                       "device section");
    load(dev, "D", cfg.D, "device");
    load(dev, "tau", cfg.tau, "device");
    load(dev, "gamma", cfg.gamma, "device");
    load(dev, "precession_rate", cfg.precession_rate, "device");
    load(dev, "lambda_D2", cfg.lambda_D2, "device");
    load(dev, "V_th", cfg.V_th, "device");
    load(dev, "U", cfg.U, "device");
    load(dev, "n_bc", cfg.n_bc, "device");
    load(dev, "grid_points", cfg.grid_points, "device");
    load(dev, "dt", cfg.dt, "device");
    load(dev, "length", cfg.length, "device");
    load(dev, "C_max", cfg.C_max, "device");
    load(dev, "C_min", cfg.C_min, "device");
    load(dev, "epsilon_r", cfg.epsilon_r, "device");
    if (dev.contains("layers")) cfg.layers = load_layers(dev.at("layers"));
    if (dev.contains("polarization")) {
        double p = 0.0;
        load(dev, "polarization", p, "device");
        if (p < 0.0 || p >= 1.0) {
            throw std::invalid_argument("config: \"polarization\" must lie in [0, 1)");
        }
        set_magnetic_polarization(cfg, p);
    }
}

void apply_solver_section(const json& sol, SolverSettings& s) {
    require_known_keys(sol,
                       {"gummel_tol", "gummel_max_iter", "newton_tol",
                        "newton_max_iter", "steady_tol", "max_time"},
                       "solver section");
    load(sol, "gummel_tol", s.gummel_tol, "solver");
    load(sol, "gummel_max_iter", s.gummel_max_iter, "solver");
    load(sol, "newton_tol", s.newton_tol, "solver");
    load(sol, "newton_max_iter", s.newton_max_iter, "solver");
    load(sol, "steady_tol", s.steady_tol, "solver");
    load(sol, "max_time", s.max_time, "solver");
    if (s.gummel_tol <= 0.0 || s.newton_tol <= 0.0 || s.steady_tol <= 0.0) {
        throw std::invalid_argument("config: solver tolerances must be positive");
    }
    if (s.gummel_max_iter < 1 || s.newton_max_iter < 1) {
        throw std::invalid_argument("config: solver iteration limits must be at least 1");
    }
    if (s.max_time <= 0.0) {
        throw std::invalid_argument("config: \"max_time\" must be positive");
    }
}

void apply_run_section(const json& run, RunSpec& spec) {
    require_known_keys(run, {"preset", "mode", "out", "p", "snapshot_every"},
                       "run section");
    if (run.contains("preset")) {
        std::string name;
        load(run, "preset", name, "run");
        spec.preset = preset_from_name(name);
    }
    if (run.contains("mode")) {
        std::string name;
        load(run, "mode", name, "run");
        spec.mode = mode_from_name(name);
    }
    load(run, "out", spec.out_dir, "run");
    load(run, "p", spec.p_sweep, "run");
    load(run, "snapshot_every", spec.snapshot_every, "run");
    for (double p : spec.p_sweep) {
        if (p < 0.0 || p >= 1.0) {
            throw std::invalid_argument("config: sweep values of \"p\" must lie in [0, 1)");
        }
    }
    if (spec.snapshot_every < 1) {
        throw std::invalid_argument("config: \"snapshot_every\" must be at least 1");
    }
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw std::runtime_error("failed writing " + path);
}

json device_json(const DeviceConfig& d) {
    json layers = json::array();
    for (const Layer& L : d.layers) {
        layers.push_back({{"x_start", L.x_start},
                          {"x_end", L.x_end},
                          {"p", L.p},
                          {"m", {L.m(0), L.m(1), L.m(2)}},
                          {"doping", L.doping}});
    }
    return {{"D", d.D},
            {"tau", d.tau},
            {"gamma", d.gamma},
            {"precession_rate", d.precession_rate},
            {"lambda_D2", d.lambda_D2},
            {"V_th", d.V_th},
            {"U", d.U},
            {"n_bc", d.n_bc},
            {"grid_points", d.grid_points},
            {"dt", d.dt},
            {"length", d.length},
            {"C_max", d.C_max},
            {"C_min", d.C_min},
            {"epsilon_r", d.epsilon_r},
            {"layers", layers}};
}

// Runs one device realization and writes its outputs into dir.
void run_single(const ParsedRun& pr, const DeviceConfig& dev, const std::string& dir) {
    fs::create_directories(dir);
    const SolverContext ctx = make_context(dev);
    std::vector<std::string> outputs;

    const StateField init = make_initial_state(ctx);
    {
        const PotentialField V0 = make_linear_potential(ctx);
        const std::string path = dir + "/profile_t0.csv";
        write_profile_csv(path, init, V0, ctx);
        outputs.push_back(path);
    }

    const int every = pr.spec.snapshot_every;
    double last_time = 0.0;
    const StepHook hook = [&](int step, const StateField& s, const PotentialField& V,
                              const StepStats& st) {
        last_time = st.time;
        if (step % every == 0) {
            const std::string path = dir + "/profile_t" + std::to_string(step) + ".csv";
            write_profile_csv(path, s, V, ctx);
            outputs.push_back(path);
        }
    };

    DiagnosedTransient res;
    try {
        res = run_with_diagnostics(dev, pr.settings, pr.spec.mode, 1, hook, &init);
    } catch (const std::exception& e) {
        std::ostringstream msg;
        msg << e.what() << " (last completed step at t = " << fmt_short(last_time)
            << " scaled)";
        throw std::runtime_error(msg.str());
    }

    const int total = static_cast<int>(res.transient.steps.size());
    if (total > 0 && total % every != 0) {
        const std::string path = dir + "/profile_t" + std::to_string(total) + ".csv";
        write_profile_csv(path, res.transient.state, res.transient.V, ctx);
        outputs.push_back(path);
    }
    const std::string series = dir + "/series.csv";
    write_series_csv(series, res.records, ctx.scal);
    outputs.push_back(series);

    ParsedRun resolved = pr;
    resolved.device = dev;
    write_manifest(dir + "/run_manifest.json", resolved, ctx.scal, outputs);

    std::cout << dir << ": " << total << " steps, "
              << (res.transient.reached_steady ? "steady state reached"
                                               : "time limit reached")
              << "\n";
}

}  // namespace

ParsedRun default_run() {
    ParsedRun pr;
    pr.device = default_device();
    pr.settings = settings_from(pr.device);
    return pr;
}

ParsedRun parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    if (!doc.is_object()) {
        throw std::invalid_argument("config: top level must be a JSON object");
    }
    require_known_keys(doc, {"device", "solver", "run"}, "top level");

    ParsedRun pr;
    if (doc.contains("run")) apply_run_section(doc.at("run"), pr.spec);

    pr.device = pr.spec.preset == Preset::SmallDevice ? small_device() : default_device();
    if (pr.spec.preset == Preset::TransientEntropy) pr.device.U = 0.0;
    if (doc.contains("device")) apply_device_section(doc.at("device"), pr.device);

    pr.settings = settings_from(pr.device);
    if (doc.contains("solver")) apply_solver_section(doc.at("solver"), pr.settings);

    validate_config(pr.device);
    return pr;
}

ParsedRun parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    ParsedRun pr = parse_config_text(buf.str());
    pr.spec.config_path = path;
    return pr;
}

std::string preset_name(Preset p) {
    switch (p) {
        case Preset::Steady: return "steady";
        case Preset::TransientEntropy: return "transient-entropy";
        case Preset::SmallDevice: return "small-device";
        case Preset::Sweep: return "sweep";
    }
    return "steady";
}

Preset preset_from_name(const std::string& name) {
    if (name == "steady") return Preset::Steady;
    if (name == "transient-entropy") return Preset::TransientEntropy;
    if (name == "small-device") return Preset::SmallDevice;
    if (name == "sweep") return Preset::Sweep;
    throw std::invalid_argument(
        "config: unknown preset \"" + name +
        "\" (expected steady, transient-entropy, small-device or sweep)");
}

std::string mode_name(PotentialMode m) {
    return m == PotentialMode::SelfConsistent ? "self-consistent" : "linear-potential";
}

PotentialMode mode_from_name(const std::string& name) {
    if (name == "self-consistent") return PotentialMode::SelfConsistent;
    if (name == "linear-potential") return PotentialMode::LinearPotential;
    throw std::invalid_argument("config: unknown mode \"" + name +
                                "\" (expected self-consistent or linear-potential)");
}

void write_profile_csv(const std::string& path, const StateField& s,
                       const PotentialField& V, const SolverContext& ctx) {
    const UpDownField ud = to_updown(s, ctx.axis);
    std::ostringstream out;
    out << "x_um,n0,n1,n2,n3,n_plus,n_minus,V_volts\n";
    const double xs = ctx.scal.length * 1e6;
    const double ns = ctx.scal.density;
    const double vs = ctx.scal.potential;
    for (int i = 0; i < ctx.grid.nodes(); ++i) {
        out << fmt(ctx.grid.node_x[i] * xs) << ',' << fmt(s.n0[i] * ns) << ','
            << fmt(s.n[i](0) * ns) << ',' << fmt(s.n[i](1) * ns) << ','
            << fmt(s.n[i](2) * ns) << ',' << fmt(ud.n_plus[i] * ns) << ','
            << fmt(ud.n_minus[i] * ns) << ',' << fmt(V.v[i] * vs) << '\n';
    }
    write_text_file(path, out.str());
}

void write_series_csv(const std::string& path,
                      const std::vector<DiagnosticsRecord>& records,
                      const ScalingSet& scal) {
    std::ostringstream out;
    out << "t_ps,H0,HQ,mass,min_nplus,min_nminus,max_nplus,max_nminus,perp_norm,"
           "gummel_iters\n";
    const double ts = scal.time * 1e12;
    for (const DiagnosticsRecord& r : records) {
        out << fmt(r.t * ts) << ',' << fmt(r.H0) << ',' << fmt(r.HQ) << ','
            << fmt(r.mass) << ',' << fmt(r.min_nplus) << ',' << fmt(r.min_nminus)
            << ',' << fmt(r.max_nplus) << ',' << fmt(r.max_nminus) << ','
            << fmt(r.perp_norm) << ',' << r.gummel_iters << '\n';
    }
    write_text_file(path, out.str());
}

void write_manifest(const std::string& path, const ParsedRun& run,
                    const ScalingSet& scal,
                    const std::vector<std::string>& outputs) {
    json doc = {
        {"config_path", run.spec.config_path},
        {"preset", preset_name(run.spec.preset)},
        {"mode", mode_name(run.spec.mode)},
        {"out_dir", run.spec.out_dir},
        {"snapshot_every", run.spec.snapshot_every},
        {"p_sweep", run.spec.p_sweep},
        {"device", device_json(run.device)},
        {"solver",
         {{"dt", run.settings.dt},
          {"gummel_tol", run.settings.gummel_tol},
          {"gummel_max_iter", run.settings.gummel_max_iter},
          {"newton_tol", run.settings.newton_tol},
          {"newton_max_iter", run.settings.newton_max_iter},
          {"steady_tol", run.settings.steady_tol},
          {"max_time", run.settings.max_time}}},
        {"scaling",
         {{"density_per_m3", scal.density},
          {"potential_V", scal.potential},
          {"length_m", scal.length},
          {"time_s", scal.time},
          {"D_hat", scal.D_hat},
          {"lambda_D2", scal.lambda_D2},
          {"bias", scal.bias},
          {"precession_rate", scal.precession_rate}}},
        {"outputs", outputs},
    };
    write_text_file(path, doc.dump(2) + "\n");
}

int run(const ParsedRun& pr) {
    try {
        std::vector<double> ps = pr.spec.p_sweep;
        if (pr.spec.preset == Preset::Sweep && ps.empty()) ps = {0.0, 0.4, 0.8};
        if (ps.empty()) {
            run_single(pr, pr.device, pr.spec.out_dir);
        } else {
            const bool multi = ps.size() > 1;
            for (double p : ps) {
                DeviceConfig dev = pr.device;
                set_magnetic_polarization(dev, p);
                const std::string dir =
                    multi ? pr.spec.out_dir + "/p_" + fmt_short(p) : pr.spec.out_dir;
                run_single(pr, dev, dir);
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace spindrift
