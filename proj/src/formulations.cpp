#include "spindrift/formulations.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace spindrift {

namespace {

void require_unit(const Vec3& m, const char* who) {
    if (std::abs(m.norm() - 1.0) > 1e-12) {
        std::ostringstream msg;
        msg << who << ": axis must be a unit vector, |m| = " << m.norm();
        throw std::invalid_argument(msg.str());
    }
}

}  // namespace

UpDownField to_updown(const StateField& state, const Vec3& m) {
    require_unit(m, "to_updown");
    UpDownField out;
    out.time = state.time;
    const size_t n = state.n0.size();
    out.n_plus.resize(n);
    out.n_minus.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const double aligned = state.n[i].dot(m);
        out.n_plus[i] = 0.5 * state.n0[i] + aligned;
        out.n_minus[i] = 0.5 * state.n0[i] - aligned;
    }
    return out;
}

StateField from_updown(const UpDownField& field, const Vec3& m) {
    require_unit(m, "from_updown");
    StateField out;
    out.time = field.time;
    const size_t n = field.n_plus.size();
    out.n0.resize(n);
    out.n.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.n0[i] = field.n_plus[i] + field.n_minus[i];
        out.n[i] = 0.5 * (field.n_plus[i] - field.n_minus[i]) * m;
    }
    return out;
}

ParallelPerpField decompose(const StateField& state, const Vec3& m) {
    require_unit(m, "decompose");
    ParallelPerpField out;
    const size_t n = state.n.size();
    out.n_par.resize(n);
    out.n_perp.resize(n);
    for (size_t i = 0; i < n; ++i) {
        out.n_par[i] = state.n[i].dot(m) * m;
        out.n_perp[i] = state.n[i] - out.n_par[i];
    }
    return out;
}

std::pair<double, Vec3> physical_fluxes(double J0, const Vec3& J, double p,
                                        double eta, const Vec3& m, double D) {
    if (eta <= 0.0 || eta > 1.0) {
        std::ostringstream msg;
        msg << "physical_fluxes: eta must lie in (0, 1], got " << eta;
        throw std::invalid_argument(msg.str());
    }
    const double scale = D / (eta * eta);
    const double Jm = J.dot(m);
    const double j0 = -scale * (J0 - 2.0 * p * Jm);
    const Vec3 j = -scale * (eta * J + (1.0 - eta) * Jm * m - 0.5 * p * J0 * m);
    return {j0, j};
}

std::pair<double, double> coercivity_eigenvalues(double eta) {
    if (eta <= 0.0 || eta > 1.0) {
        std::ostringstream msg;
        msg << "coercivity_eigenvalues: eta must lie in (0, 1], got " << eta;
        throw std::invalid_argument(msg.str());
    }
    const double t = 5.0 - 2.0 * eta * eta;
    const double disc = std::sqrt(t * t - 8.0 * eta * eta);
    return {(t - disc) / 8.0, (t + disc) / 8.0};
}

}  // namespace spindrift
