#pragma once

#include <optional>
#include <vector>

#include "spindrift/device.hpp"
#include "spindrift/formulations.hpp"
#include "spindrift/grid_solver.hpp"
#include "spindrift/types.hpp"

namespace spindrift {

// Per-step diagnostics written to the time-series output. HQ and J1_min are
// NaN when undefined (spectral gap violated / no admissible sample node).
struct DiagnosticsRecord {
    double t = 0.0;
    double H0 = 0.0;
    double HQ = 0.0;
    bool HQ_defined = false;
    double mass = 0.0;
    double min_nplus = 0.0;
    double min_nminus = 0.0;
    double max_nplus = 0.0;
    double max_nminus = 0.0;
    double perp_norm = 0.0;
    int gummel_iters = 0;
    double J1_min = 0.0;
};

// Zero-bias steady state of the discrete system, used as the reference state
// in the free-energy functionals. Computed by running the solver itself so
// that the reference is the exact attractor of the zero-bias transient.
struct EquilibriumReference {
    std::vector<double> n_D;
    std::vector<double> V_D;
};

EquilibriumReference equilibrium_reference(const DeviceConfig& cfg);

struct EntropyResult {
    double value = 0.0;
    bool clipped = false;  // some n_plus/n_minus was negative and evaluated at 0
};

// Free energy relative to the reference:
//   H0 = int h(n_plus) + h(n_minus) dx + (lambda_D2/2) int |d(V - V_D)/dx|^2 dx
// with nodewise h(n) = n log(2n/n_D) - n + n_D/2 (limit n_D/2 at n = 0).
// Trapezoid quadrature over nodes; the field term is summed over edges.
EntropyResult entropy_H0(const UpDownField& f, const PotentialField& V,
                         const EquilibriumReference& ref, const Grid& grid,
                         double lambda_D2);

struct SpectralEntropy {
    std::optional<double> value;
    std::vector<int> bad_nodes;  // nodes where an eigenvalue is non-positive
};

// Spectral form of the free energy, evaluated through the density eigenvalues
// lam_pm = n0/2 +/- |n|:
//   int lam_p(log lam_p - 1) + lam_m(log lam_m - 1) + n_D - n0 log(n_D/2) dx
// plus the same field term as entropy_H0. Coincides with entropy_H0 nodewise
// when the spin density is aligned with the projection axis. Absent when
// lam_m <= 0 at any node.
SpectralEntropy entropy_HQ(const StateField& s, const PotentialField& V,
                           const EquilibriumReference& ref, const Grid& grid,
                           double lambda_D2);

// Coefficient split of the dissipation quadratic form Re tr[N (A P^{-1/2})^2]
// into a part J1 that is nonnegative on the physical cone (n0/2 > |n|) and a
// remainder J2 of indefinite sign. a1_vec/a2_vec are the real/imaginary parts
// of the vector coefficient of A; beta = 1/(n0^2/4 - |n|^2).
struct EntropyProductionTerms {
    double a0 = 0.0;
    Vec3 a1_vec = Vec3::Zero();
    Vec3 a2_vec = Vec3::Zero();
    double J1 = 0.0;
    double J1_completed_square = 0.0;  // same quantity via the completed square
    double J2 = 0.0;
    double beta = 0.0;
};

// Builds the split from freely chosen coefficients (a0, a1, a2) at a state
// (n0, n). Requires n0/2 > |n| (throws std::domain_error otherwise) and unit m.
EntropyProductionTerms entropy_production_from_coeffs(double n0, const Vec3& n,
                                                      double a0, const Vec3& a1,
                                                      const Vec3& a2, double p,
                                                      const Vec3& m);

// Derives the coefficients from the discrete state at an interior node using
// centered differences:
//   a0 = (beta/2) d(n0^2/4 - |n|^2) + dV
//   a1 = (beta/2) (n0 dn - dn0 n),   a2 = -beta (n x dn)
// then forms the split. Throws std::domain_error on a spectral-gap violation
// and std::invalid_argument for a boundary node.
EntropyProductionTerms entropy_production_terms(const StateField& s,
                                                const PotentialField& V,
                                                const Grid& grid, double p,
                                                const Vec3& m, int node_index);

// Integrand of the relaxation part of the free-energy dissipation:
//   |n| log((n0/2 + |n|)/(n0/2 - |n|)),
// nonnegative, zero iff n = 0. Throws std::domain_error unless n0/2 > |n|.
double dHQ_relaxation_integrand(double n0, const Vec3& n);

// Runtime bound checks. The solver is never clamped; violations are reported.
struct MonitorSettings {
    double M_bound = 1.0;       // a-priori sup bound for n_plus/n_minus
    double lower_tol = 1e-10;   // allowed undershoot below 0
    double upper_rel_tol = 1e-8;  // allowed relative overshoot above M_bound
    double envelope_K = 0.0;    // growth rate of the transverse-spin envelope
    double perp_reference = 0.0;  // max |n_perp| at t = 0
};

struct MonitorReport {
    bool bounds_ok = true;
    double min_nplus = 0.0;
    double min_nminus = 0.0;
    double max_nplus = 0.0;
    double max_nminus = 0.0;
    double perp_norm = 0.0;
    double envelope = 0.0;  // perp_reference * exp(2 K t); reported, not asserted
    std::vector<int> violating_nodes;
};

MonitorReport monitor(const StateField& state, const UpDownField& updown,
                      const ParallelPerpField& perp, const MonitorSettings& cfg);

// Largest of: contact density, sup of n0/2 + |n . m| at t = 0, sup doping.
// This bounds n_plus/n_minus for all later times.
double truncation_bound(const StateField& initial, const SolverContext& ctx);

// Growth rate K = D * sup|C| / (eta_min * lambda_D2) of the transverse-spin
// envelope exp(2 K t).
double envelope_growth_rate(const SolverContext& ctx);

// Transient driver that assembles a DiagnosticsRecord every record_every steps
// (and on the final step).
struct DiagnosedTransient {
    TransientResult transient;
    std::vector<DiagnosticsRecord> records;
    EquilibriumReference ref;
    MonitorSettings monitor_cfg;
};

DiagnosedTransient run_with_diagnostics(const DeviceConfig& cfg,
                                        const SolverSettings& settings,
                                        PotentialMode mode, int record_every = 1,
                                        const StepHook& extra_hook = {},
                                        const StateField* initial = nullptr);

}  // namespace spindrift
