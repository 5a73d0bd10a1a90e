#pragma once

#include <string>
#include <vector>

#include "spindrift/device.hpp"
#include "spindrift/diagnostics.hpp"
#include "spindrift/grid_solver.hpp"

namespace spindrift {

enum class Preset {
    Steady,           // bias transient run to its steady state
    TransientEntropy, // zero bias, uniform initial density, free-energy series
    SmallDevice,      // steady run on the short high-doping device
    Sweep,            // steady runs over a list of polarizations
};

// Everything the orchestrator needs besides the device and solver settings.
struct RunSpec {
    std::string config_path;
    Preset preset = Preset::Steady;
    PotentialMode mode = PotentialMode::SelfConsistent;
    std::vector<double> p_sweep;  // empty: run the device's own polarization
    std::string out_dir = "out";
    int snapshot_every = 100;     // steps between profile dumps
};

struct ParsedRun {
    DeviceConfig device;
    SolverSettings settings;
    RunSpec spec;
};

// Built-in defaults (steady preset on the default device).
ParsedRun default_run();

// Reads and validates a JSON config file. Unknown keys, out-of-range values
// and malformed JSON raise std::invalid_argument naming the key or location.
// An empty document gives default_run().
ParsedRun parse_config(const std::string& path);

// Same, from an already-parsed JSON text (exposed for tests).
ParsedRun parse_config_text(const std::string& text);

std::string preset_name(Preset p);
Preset preset_from_name(const std::string& name);
std::string mode_name(PotentialMode m);
PotentialMode mode_from_name(const std::string& name);

// Output writers. Profile columns are converted to physical units (um, 1/m^3,
// volts). The series keeps time in ps but leaves functionals and densities in
// solver units, since the free energies have no single physical scale factor.
// Formatting is locale-independent and deterministic.
void write_profile_csv(const std::string& path, const StateField& s,
                       const PotentialField& V, const SolverContext& ctx);
void write_series_csv(const std::string& path,
                      const std::vector<DiagnosticsRecord>& records,
                      const ScalingSet& scal);
void write_manifest(const std::string& path, const ParsedRun& run,
                    const ScalingSet& scal,
                    const std::vector<std::string>& outputs);

// Executes the configured experiment, writing profile snapshots, the
// diagnostics series and a manifest under spec.out_dir (sweep runs write into
// per-polarization subdirectories). Returns a process exit status.
int run(const ParsedRun& run);

}  // namespace spindrift
