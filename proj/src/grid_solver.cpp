#include "spindrift/grid_solver.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <Eigen/LU>

namespace spindrift {

namespace {

// Matrix of v -> v x m.
Eigen::Matrix3d cross_matrix(const Vec3& m) {
    Eigen::Matrix3d K;
    K << 0.0, m(2), -m(1),
        -m(2), 0.0, m(0),
        m(1), -m(0), 0.0;
    return K;
}

// Mixing matrix G with j = -(D/eta^2) * G * J for the stacked (n0, n) flux:
// row 0 is the charge combination, rows 1..3 the spin combinations.
Mat4 mixing_matrix(double p, double eta, const Vec3& m) {
    Mat4 G = Mat4::Zero();
    G(0, 0) = 1.0;
    for (int k = 0; k < 3; ++k) {
        G(0, k + 1) = -2.0 * p * m(k);
        G(k + 1, 0) = -0.5 * p * m(k);
        for (int l = 0; l < 3; ++l) G(k + 1, l + 1) = (1.0 - eta) * m(k) * m(l);
        G(k + 1, k + 1) += eta;
    }
    return G;
}

Vec4 state_vec(const StateField& s, int i) {
    return Vec4(s.n0[i], s.n[i](0), s.n[i](1), s.n[i](2));
}

double sup_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

StateField solve_density(const StateField& prev, const PotentialField& V,
                         const SolverContext& ctx, double dt) {
    auto x = block_thomas_solve(assemble_density_system(prev, V, ctx, dt));
    const int nodes = ctx.grid.nodes();
    StateField out;
    out.time = prev.time;
    out.n0.assign(nodes, ctx.n_bc);
    out.n.assign(nodes, Vec3::Zero());
    for (int i = 1; i + 1 < nodes; ++i) {
        const Vec4& xi = x[i - 1];
        out.n0[i] = xi(0);
        out.n[i] = Vec3(xi(1), xi(2), xi(3));
    }
    return out;
}

UpDownField solve_density_reduced(const UpDownField& prev, const PotentialField& V,
                                  const SolverContext& ctx, double dt) {
    auto x = block_thomas_solve(assemble_reduced_system(prev, V, ctx, dt));
    const int nodes = ctx.grid.nodes();
    UpDownField out;
    out.time = prev.time;
    out.n_plus.assign(nodes, 0.5 * ctx.n_bc);
    out.n_minus.assign(nodes, 0.5 * ctx.n_bc);
    for (int i = 1; i + 1 < nodes; ++i) {
        out.n_plus[i] = x[i - 1](0);
        out.n_minus[i] = x[i - 1](1);
    }
    return out;
}

}  // namespace

SolverContext make_context(const DeviceConfig& cfg) {
    SolverContext ctx;
    ctx.grid = build_grid(cfg);
    ctx.prof = build_profiles(cfg, ctx.grid);
    ctx.scal = scaling(cfg);
    ctx.lambda_D2 = ctx.scal.lambda_D2;
    ctx.v_left = 0.0;
    ctx.v_right = ctx.scal.bias;
    ctx.n_bc = cfg.n_bc;
    ctx.tau_hat = 1.0;
    ctx.precession_rate = ctx.scal.precession_rate;
    ctx.axis = magnetization_axis(cfg);
    return ctx;
}

SolverSettings settings_from(const DeviceConfig& cfg) {
    SolverSettings s;
    s.dt = cfg.dt;
    return s;
}

double edge_flux(double n_left, double n_right, double V_left, double V_right,
                 double dx) {
    return ((n_right - n_left) + 0.5 * (n_right + n_left) * (V_right - V_left)) / dx;
}

EdgeFluxes compute_edge_fluxes(const StateField& state, const PotentialField& V,
                               const SolverContext& ctx) {
    const int cells = ctx.grid.cells();
    const double dx = ctx.grid.dx;
    EdgeFluxes out;
    out.J0.resize(cells);
    out.J.resize(cells);
    out.j0.resize(cells);
    out.j.resize(cells);
    for (int c = 0; c < cells; ++c) {
        out.J0[c] = edge_flux(state.n0[c], state.n0[c + 1], V.v[c], V.v[c + 1], dx);
        Vec3 J;
        for (int k = 0; k < 3; ++k) {
            J(k) = edge_flux(state.n[c](k), state.n[c + 1](k), V.v[c], V.v[c + 1], dx);
        }
        out.J[c] = J;
        auto [j0, j] = physical_fluxes(out.J0[c], J, ctx.prof.p_mid[c],
                                       ctx.prof.eta_mid[c], ctx.prof.m_mid[c],
                                       ctx.prof.D_mid[c]);
        out.j0[c] = j0;
        out.j[c] = j;
    }
    return out;
}

template <int B>
std::vector<Eigen::Matrix<double, B, 1>> block_thomas_solve(BlockTridiag<B> sys) {
    using MatB = Eigen::Matrix<double, B, B>;
    using VecB = Eigen::Matrix<double, B, 1>;
    const int n = static_cast<int>(sys.diag.size());
    if (n == 0) return {};
    if (sys.sub.size() + 1 != sys.diag.size() || sys.super.size() + 1 != sys.diag.size() ||
        sys.rhs.size() != sys.diag.size()) {
        throw std::invalid_argument("block_thomas_solve: inconsistent band sizes");
    }
    std::vector<Eigen::PartialPivLU<MatB>> lu;
    lu.reserve(n);
    auto factor = [&lu](const MatB& block, int row) {
        lu.emplace_back(block);
        const double piv = lu.back().matrixLU().diagonal().cwiseAbs().minCoeff();
        if (piv < 1e-300) {
            std::ostringstream msg;
            msg << "block_thomas_solve: singular pivot block at row " << row;
            throw std::runtime_error(msg.str());
        }
    };
    factor(sys.diag[0], 0);
    for (int i = 1; i < n; ++i) {
        const MatB W = sys.sub[i - 1] * lu.back().inverse();
        sys.diag[i] -= W * sys.super[i - 1];
        sys.rhs[i] -= W * sys.rhs[i - 1];
        factor(sys.diag[i], i);
    }
    std::vector<VecB> x(n);
    x[n - 1] = lu[n - 1].solve(sys.rhs[n - 1]);
    for (int i = n - 2; i >= 0; --i) {
        x[i] = lu[i].solve(sys.rhs[i] - sys.super[i] * x[i + 1]);
    }
    return x;
}

template std::vector<Eigen::Matrix<double, 1, 1>> block_thomas_solve<1>(BlockTridiag<1>);
template std::vector<Eigen::Matrix<double, 2, 1>> block_thomas_solve<2>(BlockTridiag<2>);
template std::vector<Eigen::Matrix<double, 4, 1>> block_thomas_solve<4>(BlockTridiag<4>);

BlockTridiagonalSystem assemble_density_system(const StateField& prev,
                                               const PotentialField& V,
                                               const SolverContext& ctx,
                                               double dt) {
    const Grid& g = ctx.grid;
    const int M = g.cells();
    const int nint = M - 1;
    const double dx = g.dx;
    if (dt <= 0.0) throw std::invalid_argument("assemble_density_system: dt must be positive");

    // Per-cell transport matrix and upwind-free edge weights: on edge c,
    // J_edge = ap[c]*n_{c+1} - am[c]*n_c and j_edge = -T[c]*J_edge.
    std::vector<Mat4> T(M);
    std::vector<double> ap(M), am(M);
    for (int c = 0; c < M; ++c) {
        const double eta = ctx.prof.eta_mid[c];
        T[c] = (ctx.prof.D_mid[c] / (eta * eta)) *
               mixing_matrix(ctx.prof.p_mid[c], eta, ctx.prof.m_mid[c]);
        const double dV = V.v[c + 1] - V.v[c];
        ap[c] = (1.0 + 0.5 * dV) / dx;
        am[c] = (1.0 - 0.5 * dV) / dx;
    }

    BlockTridiagonalSystem sys;
    sys.diag.resize(nint);
    sys.rhs.resize(nint);
    sys.sub.resize(nint - 1);
    sys.super.resize(nint - 1);
    const Vec4 bc(ctx.n_bc, 0.0, 0.0, 0.0);
    for (int r = 0; r < nint; ++r) {
        const int i = r + 1;  // node index; right edge is cell i, left edge cell i-1
        Mat4 diag = (1.0 / dt) * Mat4::Identity();
        diag += (1.0 / dx) * (T[i] * am[i] + T[i - 1] * ap[i - 1]);
        diag.block<3, 3>(1, 1) +=
            (1.0 / ctx.tau_hat) * Eigen::Matrix3d::Identity() -
            ctx.precession_rate * cross_matrix(ctx.prof.m_node[i]);
        sys.diag[r] = diag;

        const Mat4 left = -(1.0 / dx) * T[i - 1] * am[i - 1];
        const Mat4 right = -(1.0 / dx) * T[i] * ap[i];
        Vec4 rhs = (1.0 / dt) * state_vec(prev, i);
        if (r == 0) {
            rhs -= left * bc;
        } else {
            sys.sub[r - 1] = left;
        }
        if (r == nint - 1) {
            rhs -= right * bc;
        } else {
            sys.super[r] = right;
        }
        sys.rhs[r] = rhs;
    }
    return sys;
}

BlockTridiagonalSystem2 assemble_reduced_system(const UpDownField& prev,
                                                const PotentialField& V,
                                                const SolverContext& ctx,
                                                double dt) {
    const Grid& g = ctx.grid;
    const int M = g.cells();
    const int nint = M - 1;
    const double dx = g.dx;
    if (dt <= 0.0) throw std::invalid_argument("assemble_reduced_system: dt must be positive");

    // Species-wise diffusion D/(1 + p) for n_plus and D/(1 - p) for n_minus.
    std::vector<Mat2> T(M);
    std::vector<double> ap(M), am(M);
    for (int c = 0; c < M; ++c) {
        const double p = ctx.prof.p_mid[c];
        T[c] = Mat2::Zero();
        T[c](0, 0) = ctx.prof.D_mid[c] / (1.0 + p);
        T[c](1, 1) = ctx.prof.D_mid[c] / (1.0 - p);
        const double dV = V.v[c + 1] - V.v[c];
        ap[c] = (1.0 + 0.5 * dV) / dx;
        am[c] = (1.0 - 0.5 * dV) / dx;
    }

    // Relaxation exchanges the two species at rate 1/(2 tau).
    Mat2 R;
    R << 1.0, -1.0, -1.0, 1.0;
    R *= 0.5 / ctx.tau_hat;

    BlockTridiagonalSystem2 sys;
    sys.diag.resize(nint);
    sys.rhs.resize(nint);
    sys.sub.resize(nint - 1);
    sys.super.resize(nint - 1);
    const Vec2 bc(0.5 * ctx.n_bc, 0.5 * ctx.n_bc);
    for (int r = 0; r < nint; ++r) {
        const int i = r + 1;
        Mat2 diag = (1.0 / dt) * Mat2::Identity();
        diag += (1.0 / dx) * (T[i] * am[i] + T[i - 1] * ap[i - 1]);
        diag += R;
        sys.diag[r] = diag;

        const Mat2 left = -(1.0 / dx) * T[i - 1] * am[i - 1];
        const Mat2 right = -(1.0 / dx) * T[i] * ap[i];
        Vec2 rhs = (1.0 / dt) * Vec2(prev.n_plus[i], prev.n_minus[i]);
        if (r == 0) {
            rhs -= left * bc;
        } else {
            sys.sub[r - 1] = left;
        }
        if (r == nint - 1) {
            rhs -= right * bc;
        } else {
            sys.super[r] = right;
        }
        sys.rhs[r] = rhs;
    }
    return sys;
}

NewtonResult newton_poisson(const std::vector<double>& rho,
                            const std::vector<double>& V_init,
                            const std::vector<double>& C_node, double lambda_D2,
                            double v_left, double v_right, double dx, double tol,
                            int max_iter) {
    const int nodes = static_cast<int>(V_init.size());
    if (nodes < 3) throw std::invalid_argument("newton_poisson: need at least 3 nodes");
    if (rho.size() != V_init.size() || C_node.size() != V_init.size()) {
        throw std::invalid_argument("newton_poisson: inconsistent array sizes");
    }
    const int nint = nodes - 2;
    const double dx2 = dx * dx;
    NewtonResult res;
    res.V = V_init;
    res.V[0] = v_left;
    res.V[nodes - 1] = v_right;

    auto residual = [&](std::vector<double>& F) {
        double sup = 0.0;
        for (int i = 1; i <= nint; ++i) {
            const double lap = (res.V[i + 1] - 2.0 * res.V[i] + res.V[i - 1]) / dx2;
            F[i - 1] = -lambda_D2 * lap - rho[i] * std::exp(-res.V[i]) + C_node[i];
            sup = std::max(sup, std::abs(F[i - 1]));
        }
        return sup;
    };

    std::vector<double> F(nint);
    double sup = residual(F);
    res.residual_history.push_back(sup);
    for (int it = 0; it < max_iter; ++it) {
        if (sup <= tol) {
            res.converged = true;
            return res;
        }
        BlockTridiag<1> J;
        J.diag.resize(nint);
        J.rhs.resize(nint);
        J.sub.resize(nint - 1);
        J.super.resize(nint - 1);
        const double off = -lambda_D2 / dx2;
        for (int r = 0; r < nint; ++r) {
            J.diag[r](0, 0) = 2.0 * lambda_D2 / dx2 + rho[r + 1] * std::exp(-res.V[r + 1]);
            J.rhs[r](0, 0) = -F[r];
            if (r > 0) J.sub[r - 1](0, 0) = off;
            if (r + 1 < nint) J.super[r](0, 0) = off;
        }
        auto delta = block_thomas_solve(std::move(J));
        double max_step = 0.0;
        for (const auto& d : delta) max_step = std::max(max_step, std::abs(d(0)));
        // Cap the update so early iterations cannot overshoot the exponential.
        const double damp = max_step > 2.0 ? 2.0 / max_step : 1.0;
        for (int r = 0; r < nint; ++r) res.V[r + 1] += damp * delta[r](0);
        res.iterations = it + 1;
        sup = residual(F);
        res.residual_history.push_back(sup);
    }
    res.converged = sup <= tol;
    return res;
}

PotentialField make_linear_potential(const SolverContext& ctx) {
    PotentialField V;
    V.v.resize(ctx.grid.nodes());
    for (int i = 0; i < ctx.grid.nodes(); ++i) {
        V.v[i] = ctx.v_left + (ctx.v_right - ctx.v_left) * ctx.grid.node_x[i];
    }
    return V;
}

StateField make_initial_state(const SolverContext& ctx) {
    return make_uniform_state(ctx, 1.0);
}

StateField make_uniform_state(const SolverContext& ctx, double level) {
    StateField s;
    s.n0.assign(ctx.grid.nodes(), level);
    s.n.assign(ctx.grid.nodes(), Vec3::Zero());
    s.time = 0.0;
    return s;
}

GummelResult gummel_step(const StateField& prev, const PotentialField& V_prev,
                         const SolverContext& ctx, const SolverSettings& settings,
                         PotentialMode mode) {
    GummelResult out;
    if (mode == PotentialMode::LinearPotential) {
        out.V = V_prev;
        out.state = solve_density(prev, out.V, ctx, settings.dt);
        out.iterations = 1;
        out.converged = true;
        return out;
    }
    const int nodes = ctx.grid.nodes();
    PotentialField V = V_prev;
    StateField state = prev;
    std::vector<double> rho(nodes);
    for (int it = 1; it <= settings.gummel_max_iter; ++it) {
        for (int i = 0; i < nodes; ++i) rho[i] = state.n0[i] * std::exp(V.v[i]);
        NewtonResult nr = newton_poisson(rho, V.v, ctx.prof.C_node, ctx.lambda_D2,
                                         ctx.v_left, ctx.v_right, ctx.grid.dx,
                                         settings.newton_tol, settings.newton_max_iter);
        if (!nr.converged) {
            std::ostringstream msg;
            msg << "gummel_step: Poisson Newton stalled at residual "
                << nr.residual_history.back();
            throw std::runtime_error(msg.str());
        }
        const double dv = sup_diff(nr.V, V.v);
        V.v = nr.V;
        state = solve_density(prev, V, ctx, settings.dt);
        out.iterations = it;
        if (dv <= settings.gummel_tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        std::ostringstream msg;
        msg << "gummel_step: no convergence in " << settings.gummel_max_iter
            << " sweeps";
        throw std::runtime_error(msg.str());
    }
    out.state = std::move(state);
    out.V = std::move(V);
    return out;
}

ReducedGummelResult gummel_step_reduced(const UpDownField& prev,
                                        const PotentialField& V_prev,
                                        const SolverContext& ctx,
                                        const SolverSettings& settings,
                                        PotentialMode mode) {
    ReducedGummelResult out;
    if (mode == PotentialMode::LinearPotential) {
        out.V = V_prev;
        out.state = solve_density_reduced(prev, out.V, ctx, settings.dt);
        out.iterations = 1;
        out.converged = true;
        return out;
    }
    const int nodes = ctx.grid.nodes();
    PotentialField V = V_prev;
    UpDownField state = prev;
    std::vector<double> rho(nodes);
    for (int it = 1; it <= settings.gummel_max_iter; ++it) {
        for (int i = 0; i < nodes; ++i) {
            rho[i] = (state.n_plus[i] + state.n_minus[i]) * std::exp(V.v[i]);
        }
        NewtonResult nr = newton_poisson(rho, V.v, ctx.prof.C_node, ctx.lambda_D2,
                                         ctx.v_left, ctx.v_right, ctx.grid.dx,
                                         settings.newton_tol, settings.newton_max_iter);
        if (!nr.converged) {
            std::ostringstream msg;
            msg << "gummel_step_reduced: Poisson Newton stalled at residual "
                << nr.residual_history.back();
            throw std::runtime_error(msg.str());
        }
        const double dv = sup_diff(nr.V, V.v);
        V.v = nr.V;
        state = solve_density_reduced(prev, V, ctx, settings.dt);
        out.iterations = it;
        if (dv <= settings.gummel_tol) {
            out.converged = true;
            break;
        }
    }
    if (!out.converged) {
        std::ostringstream msg;
        msg << "gummel_step_reduced: no convergence in " << settings.gummel_max_iter
            << " sweeps";
        throw std::runtime_error(msg.str());
    }
    out.state = std::move(state);
    out.V = std::move(V);
    return out;
}

TransientResult run_transient(const DeviceConfig& cfg, const SolverSettings& settings,
                              PotentialMode mode, const StepHook& hook,
                              const StateField* initial) {
    const SolverContext ctx = make_context(cfg);
    TransientResult out;
    StateField state = initial ? *initial : make_initial_state(ctx);
    if (static_cast<int>(state.n0.size()) != ctx.grid.nodes()) {
        throw std::invalid_argument("run_transient: initial state does not match the grid");
    }
    PotentialField V = make_linear_potential(ctx);
    const long max_steps = std::lround(settings.max_time / settings.dt);
    for (long step = 1; step <= max_steps; ++step) {
        GummelResult g = gummel_step(state, V, ctx, settings, mode);
        double change = sup_diff(g.state.n0, state.n0);
        for (size_t i = 0; i < state.n.size(); ++i) {
            change = std::max(change, (g.state.n[i] - state.n[i]).cwiseAbs().maxCoeff());
        }
        state = std::move(g.state);
        V = std::move(g.V);
        state.time = static_cast<double>(step) * settings.dt;
        StepStats st{state.time, g.iterations, change};
        out.steps.push_back(st);
        if (hook) hook(static_cast<int>(step), state, V, st);
        if (change <= settings.steady_tol) {
            out.reached_steady = true;
            break;
        }
    }
    out.state = std::move(state);
    out.V = std::move(V);
    return out;
}

ReducedTransientResult run_reduced_updown(const DeviceConfig& cfg,
                                          const SolverSettings& settings,
                                          PotentialMode mode,
                                          const ReducedStepHook& hook) {
    const SolverContext ctx = make_context(cfg);
    ReducedTransientResult out;
    UpDownField state;
    {
        const StateField full0 = make_initial_state(ctx);
        state = to_updown(full0, ctx.axis);
    }
    PotentialField V = make_linear_potential(ctx);
    const long max_steps = std::lround(settings.max_time / settings.dt);
    for (long step = 1; step <= max_steps; ++step) {
        ReducedGummelResult g = gummel_step_reduced(state, V, ctx, settings, mode);
        double change = std::max(sup_diff(g.state.n_plus, state.n_plus),
                                 sup_diff(g.state.n_minus, state.n_minus));
        state = std::move(g.state);
        V = std::move(g.V);
        state.time = static_cast<double>(step) * settings.dt;
        StepStats st{state.time, g.iterations, change};
        out.steps.push_back(st);
        if (hook) hook(static_cast<int>(step), state, V, st);
        if (change <= settings.steady_tol) {
            out.reached_steady = true;
            break;
        }
    }
    out.state = std::move(state);
    out.V = std::move(V);
    return out;
}

}  // namespace spindrift
