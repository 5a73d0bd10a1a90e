#include "spindrift/device.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spindrift {

namespace {

constexpr double kEps0 = 8.8541878128e-12;  // vacuum permittivity [F/m]
constexpr double kElementaryCharge = 1.602e-19;  // [C]
constexpr double kHbar = 1.054571817e-34;   // [J*s]
constexpr double kBoundaryTol = 1e-12;

// Index of the layer owning position x; interface positions belong to the
// layer on the left.
int owning_layer(const std::vector<Layer>& layers, double x) {
    for (size_t j = 0; j < layers.size(); ++j) {
        if (x <= layers[j].x_end + kBoundaryTol) return static_cast<int>(j);
    }
    return static_cast<int>(layers.size()) - 1;
}

}  // namespace

void validate_config(const DeviceConfig& cfg) {
    std::ostringstream msg;
    if (cfg.layers.empty()) throw std::invalid_argument("config: no layers");
    if (std::abs(cfg.layers.front().x_start) > kBoundaryTol) {
        throw std::invalid_argument("config: first layer must start at 0");
    }
    if (std::abs(cfg.layers.back().x_end - 1.0) > kBoundaryTol) {
        throw std::invalid_argument("config: last layer must end at 1");
    }
    for (size_t j = 0; j < cfg.layers.size(); ++j) {
        const Layer& L = cfg.layers[j];
        if (L.x_end <= L.x_start) {
            msg << "config: layer " << j << " has non-positive width";
            throw std::invalid_argument(msg.str());
        }
        if (j > 0 && std::abs(L.x_start - cfg.layers[j - 1].x_end) > kBoundaryTol) {
            msg << "config: layer " << j << " does not start where layer " << j - 1 << " ends";
            throw std::invalid_argument(msg.str());
        }
        if (L.p < 0.0 || L.p >= 1.0) {
            msg << "config: layer " << j << " polarization " << L.p << " outside [0, 1)";
            throw std::invalid_argument(msg.str());
        }
        const double mn = L.m.norm();
        if (mn > kBoundaryTol && std::abs(mn - 1.0) > 1e-12) {
            msg << "config: layer " << j << " magnetization must be zero or unit, |m| = " << mn;
            throw std::invalid_argument(msg.str());
        }
        if (L.p > 0.0 && mn < 0.5) {
            msg << "config: layer " << j << " has p > 0 but no magnetization direction";
            throw std::invalid_argument(msg.str());
        }
        if (L.doping <= 0.0) {
            msg << "config: layer " << j << " doping must be positive";
            throw std::invalid_argument(msg.str());
        }
    }
    if (cfg.grid_points < 3) throw std::invalid_argument("config: need at least 3 cells");
    if (cfg.dt <= 0.0) throw std::invalid_argument("config: dt must be positive");
    if (cfg.D <= 0.0) throw std::invalid_argument("config: D must be positive");
    if (cfg.tau <= 0.0) throw std::invalid_argument("config: tau must be positive");
    if (cfg.V_th <= 0.0) throw std::invalid_argument("config: V_th must be positive");
    if (cfg.n_bc <= 0.0) throw std::invalid_argument("config: n_bc must be positive");
    if (cfg.length <= 0.0) throw std::invalid_argument("config: length must be positive");
    if (cfg.C_max <= 0.0) throw std::invalid_argument("config: C_max must be positive");
    if (cfg.C_min <= 0.0) throw std::invalid_argument("config: C_min must be positive");
    if (cfg.epsilon_r <= 0.0) throw std::invalid_argument("config: epsilon_r must be positive");
}

Grid build_grid(const DeviceConfig& cfg) {
    validate_config(cfg);
    Grid g;
    const int M = cfg.grid_points;
    g.dx = 1.0 / M;
    g.node_x.resize(M + 1);
    for (int i = 0; i <= M; ++i) g.node_x[i] = static_cast<double>(i) / M;
    // Material jumps must sit on nodes, otherwise a cell straddles two layers.
    for (size_t j = 0; j + 1 < cfg.layers.size(); ++j) {
        const double b = cfg.layers[j].x_end;
        const double scaled = b * M;
        if (std::abs(scaled - std::round(scaled)) > 1e-9) {
            std::ostringstream msg;
            msg << "grid: layer boundary at x = " << b << " does not align with "
                << M << " cells";
            throw std::invalid_argument(msg.str());
        }
    }
    return g;
}

Profiles build_profiles(const DeviceConfig& cfg, const Grid& grid) {
    Profiles prof;
    const int cells = grid.cells();
    const ScalingSet scal = scaling(cfg);
    prof.p_mid.resize(cells);
    prof.eta_mid.resize(cells);
    prof.m_mid.resize(cells);
    prof.D_mid.resize(cells);
    for (int c = 0; c < cells; ++c) {
        const Layer& L = cfg.layers[owning_layer(cfg.layers, grid.center(c))];
        prof.p_mid[c] = L.p;
        prof.eta_mid[c] = std::sqrt(1.0 - L.p * L.p);
        prof.m_mid[c] = L.m;
        prof.D_mid[c] = scal.D_hat;
    }
    prof.p_node.resize(grid.nodes());
    prof.m_node.resize(grid.nodes());
    prof.C_node.resize(grid.nodes());
    for (int i = 0; i < grid.nodes(); ++i) {
        const Layer& L = cfg.layers[owning_layer(cfg.layers, grid.node_x[i])];
        prof.p_node[i] = L.p;
        prof.m_node[i] = L.m;
        prof.C_node[i] = L.doping;
    }
    return prof;
}

double derived_lambda_D2(const DeviceConfig& cfg) {
    return cfg.epsilon_r * kEps0 * cfg.V_th /
           (kElementaryCharge * cfg.C_max * cfg.length * cfg.length);
}

ScalingSet scaling(const DeviceConfig& cfg) {
    ScalingSet s;
    s.density = cfg.C_max;
    s.potential = cfg.V_th;
    s.length = cfg.length;
    s.time = cfg.tau;
    s.D_hat = cfg.D * cfg.tau / (cfg.length * cfg.length);
    s.lambda_D2 = cfg.lambda_D2 > 0.0 ? cfg.lambda_D2 : derived_lambda_D2(cfg);
    s.bias = cfg.U / cfg.V_th;
    if (cfg.precession_rate >= 0.0) {
        s.precession_rate = cfg.precession_rate;
    } else {
        const double g = cfg.gamma >= 0.0 ? cfg.gamma : 2.0 * kHbar / cfg.tau;
        s.precession_rate = 2.0 * g * cfg.tau / kHbar;
    }
    return s;
}

DeviceConfig default_device() {
    DeviceConfig cfg;
    const double third = 1.0 / 3.0;
    const double channel_doping = cfg.C_min / cfg.C_max;
    cfg.layers = {
        {0.0, third, 0.0, Vec3::Zero(), 1.0},
        {third, 2.0 * third, 0.5, Vec3(0, 0, 1), channel_doping},
        {2.0 * third, 1.0, 0.0, Vec3::Zero(), 1.0},
    };
    return cfg;
}

DeviceConfig small_device() {
    DeviceConfig cfg = default_device();
    cfg.length = 0.4e-6;
    cfg.C_max = 9e21;
    const double channel_doping = cfg.C_min / cfg.C_max;
    cfg.layers[1].doping = channel_doping;
    return cfg;
}

void set_magnetic_polarization(DeviceConfig& cfg, double p) {
    for (Layer& L : cfg.layers) {
        if (L.m.norm() > 0.5) L.p = p;
    }
}

Vec3 magnetization_axis(const DeviceConfig& cfg) {
    for (const Layer& L : cfg.layers) {
        if (L.m.norm() > 0.5) return L.m;
    }
    return Vec3(0, 0, 1);
}

}  // namespace spindrift
