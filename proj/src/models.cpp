#include "dynsample/models.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dynsample::models {

using signal::ConfigError;

Model::Model(std::string name, std::size_t n_states, std::size_t n_controls, std::size_t n_outputs,
             Vector default_x0, ControlBounds bounds, Vector nominal_u)
    : name_(std::move(name)), n_states_(n_states), n_controls_(n_controls), n_outputs_(n_outputs),
      default_x0_(std::move(default_x0)), bounds_(std::move(bounds)),
      nominal_u_(std::move(nominal_u)) {
    if (n_states_ == 0 || n_controls_ == 0 || n_outputs_ == 0) {
        throw std::invalid_argument("model " + name_ + ": dimensions must be positive");
    }
    if (default_x0_.size() != n_states_ || nominal_u_.size() != n_controls_ ||
        bounds_.channels() != n_controls_) {
        throw std::invalid_argument("model " + name_ + ": inconsistent dimensions");
    }
}

Vector Model::rhs(const Vector& x, const Vector& u, double t) const {
    Vector dxdt(n_states_);
    rhs(std::span<const double>(x), std::span<const double>(u), t, std::span<double>(dxdt));
    return dxdt;
}

Vector Model::output(const Vector& x, const Vector& u) const {
    Vector y(n_outputs_);
    output(std::span<const double>(x), std::span<const double>(u), std::span<double>(y));
    return y;
}

FunctionModel::FunctionModel(std::string name, std::size_t n_states, std::size_t n_controls,
                             std::size_t n_outputs, Vector default_x0, ControlBounds bounds,
                             Vector nominal_u, Rhs rhs, Output output)
    : Model(std::move(name), n_states, n_controls, n_outputs, std::move(default_x0),
            std::move(bounds), std::move(nominal_u)),
      rhs_(std::move(rhs)), output_(std::move(output)) {}

void FunctionModel::rhs(std::span<const double> x, std::span<const double> u, double t,
                        std::span<double> dxdt) const {
    rhs_(x, u, t, dxdt);
}

void FunctionModel::output(std::span<const double> x, std::span<const double> u,
                           std::span<double> y) const {
    output_(x, u, y);
}

bool is_multiple_of(double value, double step) {
    if (!(step > 0.0)) {
        return false;
    }
    const double ratio = value / step;
    return std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, std::abs(ratio));
}

namespace {

bool within_limits(const Vector& v, double limit) {
    return std::all_of(v.begin(), v.end(),
                       [limit](double c) { return std::isfinite(c) && std::abs(c) <= limit; });
}

bool all_finite(const Vector& v) {
    return std::all_of(v.begin(), v.end(), [](double c) { return std::isfinite(c); });
}

} // namespace

Trajectory simulate(const Model& model, const Vector& x0, const ControlSignal& signal, double dt,
                    double horizon, const SimulationOptions& options) {
    if (x0.size() != model.n_states()) {
        throw ConfigError(fmt::format("simulate: x0 has {} entries, model {} has {} states",
                                      x0.size(), model.name(), model.n_states()));
    }
    if (!(dt > 0.0) || !(horizon > 0.0)) {
        throw ConfigError("simulate: dt and horizon must be positive");
    }
    if (horizon > signal.total_duration * (1.0 + 1e-12)) {
        throw ConfigError(fmt::format("simulate: horizon {} exceeds signal duration {}", horizon,
                                      signal.total_duration));
    }
    if (!is_multiple_of(horizon, dt)) {
        throw ConfigError(fmt::format("simulate: dt {} does not divide horizon {}", dt, horizon));
    }
    for (double len : signal.plateau_lengths()) {
        if (!is_multiple_of(len, dt)) {
            throw ConfigError(fmt::format("simulate: dt {} does not divide hold duration {}", dt, len));
        }
    }
    if (!signal.levels.empty() && signal.levels.front().size() != model.n_controls()) {
        throw ConfigError("simulate: signal channel count does not match the model");
    }

    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt));
    const std::size_t n = model.n_states();

    Trajectory traj;
    traj.dt = dt;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    traj.outputs.reserve(steps + 1);
    traj.controls.reserve(steps + 1);

    auto record = [&](double t, const Vector& x) {
        const Vector& u = signal::sample_at(signal, t);
        Vector y = model.output(x, u);
        if (!all_finite(y)) {
            return false;
        }
        traj.times.push_back(t);
        traj.states.push_back(x);
        traj.outputs.push_back(std::move(y));
        traj.controls.push_back(u);
        return true;
    };

    Vector x = x0;
    if (!within_limits(x, options.divergence_limit) || !record(0.0, x)) {
        traj.status = RunStatus::diverged;
        traj.diverged_at = 0.0;
        return traj;
    }

    Vector k1(n), k2(n), k3(n), k4(n), stage(n);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Vector& u = traj.controls.back();
        model.rhs(x, u, t, k1);
        for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k1[i];
        model.rhs(stage, u, t + 0.5 * dt, k2);
        for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + 0.5 * dt * k2[i];
        model.rhs(stage, u, t + 0.5 * dt, k3);
        for (std::size_t i = 0; i < n; ++i) stage[i] = x[i] + dt * k3[i];
        model.rhs(stage, u, t + dt, k4);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        const double t_next = static_cast<double>(k + 1) * dt;
        if (!within_limits(x, options.divergence_limit) || !record(t_next, x)) {
            traj.status = RunStatus::diverged;
            traj.diverged_at = t_next;
            return traj;
        }
    }
    return traj;
}

namespace {

// Nonisothermal CSTR with an exothermic first-order reaction A -> B.
// States: concentration of A [mol/L], reactor temperature [K].
// Controls: feed flow [L/min], feed temperature [K], coolant temperature [K].
// Outputs: reactor temperature [K], conversion of A [-].
class Cstr3x2 final : public Model {
  public:
    Cstr3x2()
        : Model("cstr3x2", 2, 3, 2, {0.5, 350.0},
                ControlBounds{{80.0, 340.0, 290.0}, {120.0, 360.0, 310.0}, {3.0, 1.5, 1.5}},
                {100.0, 350.0, 300.0}) {}

    void rhs(std::span<const double> x, std::span<const double> u, double /*t*/,
             std::span<double> dxdt) const override {
        const double ca = x[0];
        const double temp = x[1];
        const double q = u[0];
        const double rate = kK0 * std::exp(-kEoverR / temp) * ca;
        dxdt[0] = q / kVolume * (kFeedConc - ca) - rate;
        dxdt[1] = q / kVolume * (u[1] - temp) + kHeatOfReaction / (kRho * kCp) * rate +
                  kUA / (kVolume * kRho * kCp) * (u[2] - temp);
    }

    void output(std::span<const double> x, std::span<const double> /*u*/,
                std::span<double> y) const override {
        y[0] = x[1];
        y[1] = 1.0 - x[0] / kFeedConc;
    }

  private:
    static constexpr double kVolume = 100.0;         // L
    static constexpr double kFeedConc = 1.0;         // mol/L
    static constexpr double kK0 = 7.2e10;            // 1/min
    static constexpr double kEoverR = 8750.0;        // K
    static constexpr double kHeatOfReaction = 5.0e4; // J/mol released
    static constexpr double kRho = 1000.0;           // g/L
    static constexpr double kCp = 0.239;             // J/(g K)
    static constexpr double kUA = 5.0e4;             // J/(min K)
};

// Van der Pol oscillator x'' - mu (1 - x^2) x' + x = b with a constant-bias
// forcing b and the damping mu both manipulated.
// Outputs: position, velocity, squared radius x^2 + v^2.
class VanDerPol final : public Model {
  public:
    VanDerPol()
        : Model("vanderpol", 2, 2, 3, {2.0, 0.0},
                ControlBounds{{-2.0, 0.5}, {2.0, 2.5}, {0.25, 0.15}}, {0.0, 1.0}) {}

    void rhs(std::span<const double> x, std::span<const double> u, double /*t*/,
             std::span<double> dxdt) const override {
        dxdt[0] = x[1];
        dxdt[1] = u[1] * (1.0 - x[0] * x[0]) * x[1] - x[0] + u[0];
    }

    void output(std::span<const double> x, std::span<const double> /*u*/,
                std::span<double> y) const override {
        y[0] = x[0];
        y[1] = x[1];
        y[2] = x[0] * x[0] + x[1] * x[1];
    }
};

// Lotka-Volterra predator-prey system with harvesting of both species.
// Equilibrium: prey = (c + u1) / d, predator = (a - u0) / b.
class Lotka final : public Model {
  public:
    Lotka()
        : Model("lotka", 2, 2, 2, {(kC + 0.2) / kD, (kA - 0.2) / kB},
                ControlBounds{{0.0, 0.0}, {0.4, 0.4}, {0.05, 0.05}}, {0.2, 0.2}) {}

    void rhs(std::span<const double> x, std::span<const double> u, double /*t*/,
             std::span<double> dxdt) const override {
        dxdt[0] = (kA - u[0]) * x[0] - kB * x[0] * x[1];
        dxdt[1] = -(kC + u[1]) * x[1] + kD * x[0] * x[1];
    }

    void output(std::span<const double> x, std::span<const double> /*u*/,
                std::span<double> y) const override {
        y[0] = x[0];
        y[1] = x[1];
    }

  private:
    static constexpr double kA = 1.0;
    static constexpr double kB = 0.5;
    static constexpr double kC = 0.75;
    static constexpr double kD = 0.25;
};

} // namespace

std::vector<std::string> builtin_model_names() { return {"cstr3x2", "vanderpol", "lotka"}; }

std::shared_ptr<const Model> builtin_model(const std::string& name) {
    if (name == "cstr3x2") {
        return std::make_shared<Cstr3x2>();
    }
    if (name == "vanderpol") {
        return std::make_shared<VanDerPol>();
    }
    if (name == "lotka") {
        return std::make_shared<Lotka>();
    }
    throw std::invalid_argument("unknown model '" + name + "'");
}

} // namespace dynsample::models
