#pragma once

#include <functional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spindrift/device.hpp"
#include "spindrift/formulations.hpp"
#include "spindrift/types.hpp"

namespace spindrift {

// Everything the stepping routines need, derived once from a DeviceConfig.
struct SolverContext {
    Grid grid;
    Profiles prof;
    ScalingSet scal;
    double lambda_D2 = 0.0;      // scaled
    double v_left = 0.0;         // scaled contact potentials
    double v_right = 0.0;
    double n_bc = 1.0;           // scaled contact charge density; spin is zero
    double tau_hat = 1.0;        // relaxation time in scaled units
    double precession_rate = 0.0;
    Vec3 axis = Vec3(0, 0, 1);   // reference axis for up/down projections
};

SolverContext make_context(const DeviceConfig& cfg);

// Gradient combination J = (n_r - n_l)/dx + (n_r + n_l)/2 * (V_r - V_l)/dx on
// one edge (centered differences, midpoint density).
double edge_flux(double n_left, double n_right, double V_left, double V_right,
                 double dx);

// Per-edge gradient combinations (J0, J) and current densities (j0, j) for a
// full state. Edge c sits between nodes c and c+1; material values are taken
// at the cell midpoint.
struct EdgeFluxes {
    std::vector<double> J0;
    std::vector<Vec3> J;
    std::vector<double> j0;
    std::vector<Vec3> j;
};

EdgeFluxes compute_edge_fluxes(const StateField& state, const PotentialField& V,
                               const SolverContext& ctx);

// Block tridiagonal system with B x B blocks; row i couples unknown blocks
// i-1, i, i+1. sub/super have one entry fewer than diag.
template <int B>
struct BlockTridiag {
    std::vector<Eigen::Matrix<double, B, B>> sub;
    std::vector<Eigen::Matrix<double, B, B>> diag;
    std::vector<Eigen::Matrix<double, B, B>> super;
    std::vector<Eigen::Matrix<double, B, 1>> rhs;
};

// Unknown ordering for the full model: (n0, n1, n2, n3) per interior node.
using BlockTridiagonalSystem = BlockTridiag<4>;
// Reduced model: (n_plus, n_minus) per interior node.
using BlockTridiagonalSystem2 = BlockTridiag<2>;

// Block Thomas elimination with partial pivoting inside each block. Consumes
// the system. Throws std::runtime_error on a singular pivot block.
template <int B>
std::vector<Eigen::Matrix<double, B, 1>> block_thomas_solve(BlockTridiag<B> sys);

extern template std::vector<Eigen::Matrix<double, 1, 1>> block_thomas_solve<1>(BlockTridiag<1>);
extern template std::vector<Eigen::Matrix<double, 2, 1>> block_thomas_solve<2>(BlockTridiag<2>);
extern template std::vector<Eigen::Matrix<double, 4, 1>> block_thomas_solve<4>(BlockTridiag<4>);

struct SolverSettings {
    double dt = 0.005;           // scaled time step
    double gummel_tol = 1e-10;   // sup-norm of the potential update
    // The update contracts like 1/(1 + lambda_D2 k^2) per sweep; the slowest
    // mode needs ~220 sweeps for 1e-10 from a cold start, so 200 is too tight.
    int gummel_max_iter = 500;
    // The residual evaluation floor is ~|V| eps / dx^2; at 180 cells under a
    // 1 V bias that is a few 1e-12, so anything tighter than 1e-10 can stall.
    double newton_tol = 1e-10;   // sup-norm of the Poisson residual
    int newton_max_iter = 50;
    double steady_tol = 1e-10;   // sup-norm of the per-step state change
    double max_time = 500.0;     // scaled
};

SolverSettings settings_from(const DeviceConfig& cfg);

enum class PotentialMode {
    SelfConsistent,   // Poisson coupled through Gummel iterations
    LinearPotential,  // potential frozen at the linear contact-to-contact ramp
};

// Implicit Euler system for one time step of the full model, with the
// potential held fixed. Dirichlet rows are eliminated; the system covers
// interior nodes 1..nodes-2.
BlockTridiagonalSystem assemble_density_system(const StateField& prev,
                                               const PotentialField& V,
                                               const SolverContext& ctx,
                                               double dt);

// Same for the reduced up/down model with flux coefficients D/(1 +/- p).
BlockTridiagonalSystem2 assemble_reduced_system(const UpDownField& prev,
                                                const PotentialField& V,
                                                const SolverContext& ctx,
                                                double dt);

struct NewtonResult {
    std::vector<double> V;
    std::vector<double> residual_history;  // sup-norm, entry 0 is the initial residual
    int iterations = 0;
    bool converged = false;
};

// Damped Newton iteration for the nonlinear Poisson equation
//   -lambda_D2 * (V_{i+1} - 2 V_i + V_{i-1})/dx^2 = rho_i*exp(-V_i) - C_i
// with Dirichlet values (v_left, v_right). Updates are capped at sup-norm 2.
NewtonResult newton_poisson(const std::vector<double>& rho,
                            const std::vector<double>& V_init,
                            const std::vector<double>& C_node, double lambda_D2,
                            double v_left, double v_right, double dx, double tol,
                            int max_iter);

struct GummelResult {
    StateField state;
    PotentialField V;
    int iterations = 0;     // outer Gummel sweeps taken
    bool converged = false; // meaningful only in self-consistent mode
};

// Advances the full model by one implicit Euler step. In self-consistent mode
// the potential and density solves alternate until the potential update drops
// below gummel_tol; in linear-potential mode a single density solve is done
// with the given potential.
GummelResult gummel_step(const StateField& prev, const PotentialField& V_prev,
                         const SolverContext& ctx, const SolverSettings& settings,
                         PotentialMode mode);

struct ReducedGummelResult {
    UpDownField state;
    PotentialField V;
    int iterations = 0;
    bool converged = false;
};

ReducedGummelResult gummel_step_reduced(const UpDownField& prev,
                                        const PotentialField& V_prev,
                                        const SolverContext& ctx,
                                        const SolverSettings& settings,
                                        PotentialMode mode);

// Linear ramp between the scaled contact potentials; the initial guess in
// self-consistent mode and the frozen profile in linear-potential mode.
PotentialField make_linear_potential(const SolverContext& ctx);

// Default initial state: n0 = 1 everywhere, n = 0.
StateField make_initial_state(const SolverContext& ctx);

// Spatially uniform initial state: n0 = level, n = 0.
StateField make_uniform_state(const SolverContext& ctx, double level);

struct StepStats {
    double time = 0.0;
    int gummel_iters = 0;
    double state_change = 0.0;  // sup-norm change over the step
};

struct TransientResult {
    StateField state;
    PotentialField V;
    std::vector<StepStats> steps;
    bool reached_steady = false;
};

using StepHook =
    std::function<void(int step, const StateField&, const PotentialField&, const StepStats&)>;

// Implicit Euler time stepping until the per-step change drops below
// steady_tol or time reaches max_time. Starts from the contact-doping state
// unless `initial` is given. The hook, when set, runs after every accepted
// step.
TransientResult run_transient(const DeviceConfig& cfg, const SolverSettings& settings,
                              PotentialMode mode, const StepHook& hook = {},
                              const StateField* initial = nullptr);

struct ReducedTransientResult {
    UpDownField state;
    PotentialField V;
    std::vector<StepStats> steps;
    bool reached_steady = false;
};

using ReducedStepHook =
    std::function<void(int step, const UpDownField&, const PotentialField&, const StepStats&)>;

// Reduced-model counterpart of run_transient, stepping (n_plus, n_minus).
ReducedTransientResult run_reduced_updown(const DeviceConfig& cfg,
                                          const SolverSettings& settings,
                                          PotentialMode mode,
                                          const ReducedStepHook& hook = {});

}  // namespace spindrift
