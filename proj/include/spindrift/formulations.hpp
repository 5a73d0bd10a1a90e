#pragma once

#include <utility>
#include <vector>

#include "spindrift/types.hpp"

namespace spindrift {

// Node-centered spin density in Pauli coefficients: charge part n0 and spin
// part n, so the 2x2 density is (n0/2)*sigma_0 + n . sigma. time is scaled.
struct StateField {
    std::vector<double> n0;
    std::vector<Vec3> n;
    double time = 0.0;
};

// Node-centered electrostatic potential, scaled by the thermal voltage.
struct PotentialField {
    std::vector<double> v;
};

// Spin-up/spin-down densities along a fixed axis m:
//   n_plus = n0/2 + n . m,  n_minus = n0/2 - n . m.
struct UpDownField {
    std::vector<double> n_plus;
    std::vector<double> n_minus;
    double time = 0.0;
};

// Spin component split relative to a fixed axis m: n_par = (n . m) m and
// n_perp = n - n_par.
struct ParallelPerpField {
    std::vector<Vec3> n_par;
    std::vector<Vec3> n_perp;
};

// Projects onto a unit axis m; throws std::invalid_argument for non-unit m.
UpDownField to_updown(const StateField& state, const Vec3& m);

// Inverse of to_updown under the assumption that the spin density is aligned
// with m (the transverse part is dropped by to_updown and cannot be restored).
StateField from_updown(const UpDownField& field, const Vec3& m);

ParallelPerpField decompose(const StateField& state, const Vec3& m);

// Current densities from the gradient combinations J0 = grad n0 + n0 grad V
// and J = grad n + n grad V, mixed by the local material (p, eta, m) and
// scaled diffusion D:
//   j0 = -(D/eta^2) * (J0 - 2 p (J . m))
//   j  = -(D/eta^2) * (eta J + (1 - eta)(J . m) m - (p/2) J0 m)
std::pair<double, Vec3> physical_fluxes(double J0, const Vec3& J, double p,
                                        double eta, const Vec3& m, double D);

// Eigenvalues {lower, upper} of the quadratic-form matrix
//   [[1/4, -p/2], [-p/2, 1 - eta^2/2]],  p = sqrt(1 - eta^2),
// which controls the dissipation rate of the charge/aligned-spin pair. Both
// are positive for 0 < eta <= 1; closed form
//   (5 - 2 eta^2)/8 -/+ (1/8) sqrt((5 - 2 eta^2)^2 - 8 eta^2).
std::pair<double, double> coercivity_eigenvalues(double eta);

}  // namespace spindrift
