#pragma once

#include <vector>

#include "spindrift/types.hpp"

namespace spindrift {

// One homogeneous slab of the device. Positions are fractions of the device
// length; doping is relative to the maximum doping level. A nonmagnetic layer
// has p = 0 and m = 0; a magnetic layer has 0 < p < 1 and unit m.
struct Layer {
    double x_start = 0.0;
    double x_end = 0.0;
    double p = 0.0;
    Vec3 m = Vec3::Zero();
    double doping = 1.0;
};

// Physical device parameters plus the solver-facing scaled knobs. lambda_D2 is
// the scaled squared Debye length; a non-positive value means "derive it from
// the permittivity". precession_rate is the scaled spin rotation rate
// 2*gamma*tau/hbar; a negative value means "derive it from gamma".
struct DeviceConfig {
    std::vector<Layer> layers;

    double D = 1e-3;           // diffusion coefficient [m^2/s]
    double tau = 1e-12;        // relaxation time [s]
    double gamma = -1.0;       // precession energy [J]; negative -> 2*hbar/tau
    double precession_rate = -1.0;  // scaled; negative -> derive from gamma
    double lambda_D2 = 0.0;    // scaled; non-positive -> derive
    double V_th = 0.0259;      // thermal voltage [V]
    double U = 1.0;            // applied bias [V]
    double n_bc = 1.0;         // contact density, scaled by C_max
    int grid_points = 180;     // number of cells; nodes = grid_points + 1
    double dt = 0.005;         // time step, scaled by tau

    double length = 1.2e-6;    // device length [m]
    double C_max = 1e21;       // contact doping [1/m^3]
    double C_min = 0.4e19;     // channel doping [1/m^3]
    double epsilon_r = 11.7;   // relative permittivity
};

// Uniform node-centered grid over the scaled domain [0, 1].
struct Grid {
    double dx = 0.0;
    std::vector<double> node_x;  // size cells + 1

    int cells() const { return static_cast<int>(node_x.size()) - 1; }
    int nodes() const { return static_cast<int>(node_x.size()); }
    double center(int c) const { return node_x[c] + 0.5 * dx; }
};

// Material data sampled on the grid: polarization, eta = sqrt(1 - p^2),
// magnetization and diffusion at cell midpoints; magnetization and doping at
// nodes. Nodes on a layer interface take the values of the layer to the left.
struct Profiles {
    std::vector<double> p_mid;
    std::vector<double> eta_mid;
    std::vector<Vec3> m_mid;
    std::vector<double> D_mid;   // scaled
    std::vector<double> p_node;
    std::vector<Vec3> m_node;
    std::vector<double> C_node;  // scaled
};

// Characteristic scales and the dimensionless groups built from them.
struct ScalingSet {
    double density = 1e21;     // C_max [1/m^3]
    double potential = 0.0259; // V_th [V]
    double length = 1.2e-6;    // device length [m]
    double time = 1e-12;       // tau [s]
    double D_hat = 0.0;        // D*tau/length^2
    double lambda_D2 = 0.0;    // scaled squared Debye length
    double bias = 0.0;         // U/V_th
    double precession_rate = 0.0;
};

// Checks layer contiguity, parameter ranges and magnetization normalization;
// throws std::invalid_argument with a description of the first violation.
void validate_config(const DeviceConfig& cfg);

// Builds the uniform grid and checks that every layer boundary coincides with
// a node (throws otherwise, since material jumps must sit on nodes).
Grid build_grid(const DeviceConfig& cfg);

Profiles build_profiles(const DeviceConfig& cfg, const Grid& grid);

ScalingSet scaling(const DeviceConfig& cfg);

// Scaled squared Debye length eps_r*eps0*V_th / (q*C_max*length^2).
double derived_lambda_D2(const DeviceConfig& cfg);

// Three-layer diode: magnetic low-doped channel between nonmagnetic contacts,
// interfaces at one third and two thirds of the length.
DeviceConfig default_device();

// Same geometry at 0.4 um length and 9e21 contact doping.
DeviceConfig small_device();

// Sets the polarization of every magnetic layer (those with nonzero m).
void set_magnetic_polarization(DeviceConfig& cfg, double p);

// Direction of the first magnetic layer, or +z when none exists. Used as the
// reference axis for up/down projections and diagnostics.
Vec3 magnetization_axis(const DeviceConfig& cfg);

}  // namespace spindrift
