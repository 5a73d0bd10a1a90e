#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spindrift/config_io.hpp"

using nlohmann::json;

int main(int argc, char** argv) {
    CLI::App app{"1D spin drift-diffusion semiconductor device simulator"};

    std::string config_path;
    std::string preset;
    std::string mode;
    std::string out_dir;
    std::vector<double> p_values;
    int grid_points = 0;
    double dt_over_tau = 0.0;
    double max_time_ps = 0.0;
    int snapshot_every = 0;

    app.add_option("--config", config_path, "JSON configuration file");
    app.add_option("--preset", preset,
                   "Experiment preset: steady, transient-entropy, small-device, sweep");
    app.add_option("--mode", mode, "Potential mode: self-consistent or linear-potential");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--p", p_values, "Polarization sweep values (comma separated)")
        ->delimiter(',');
    app.add_option("--grid-points", grid_points, "Number of grid cells");
    app.add_option("--dt-over-tau", dt_over_tau, "Time step in units of tau");
    app.add_option("--max-time-ps", max_time_ps, "Simulated time limit in picoseconds");
    app.add_option("--snapshot-every", snapshot_every, "Steps between profile snapshots");

    CLI11_PARSE(app, argc, argv);

    try {
        json doc = json::object();
        if (!config_path.empty()) {
            std::ifstream in(config_path, std::ios::binary);
            if (!in) throw std::invalid_argument("config: cannot open " + config_path);
            std::ostringstream buf;
            buf << in.rdbuf();
            doc = json::parse(buf.str());
        }
        // Command-line flags take precedence over the file.
        if (!preset.empty()) doc["run"]["preset"] = preset;
        if (!mode.empty()) doc["run"]["mode"] = mode;
        if (!out_dir.empty()) doc["run"]["out"] = out_dir;
        if (!p_values.empty()) doc["run"]["p"] = p_values;
        if (snapshot_every > 0) doc["run"]["snapshot_every"] = snapshot_every;
        if (grid_points > 0) doc["device"]["grid_points"] = grid_points;
        if (dt_over_tau > 0.0) doc["device"]["dt"] = dt_over_tau;

        spindrift::ParsedRun pr = spindrift::parse_config_text(doc.dump());
        pr.spec.config_path = config_path;
        if (max_time_ps > 0.0) {
            pr.settings.max_time = max_time_ps * 1e-12 / pr.device.tau;
        }
        return spindrift::run(pr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
