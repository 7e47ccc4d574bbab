#pragma once

// Fixed-timestep dynamic model contract, classic RK4 integration with
// divergence detection, and the built-in benchmark systems.

#include "dynsample/signal.hpp"

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dynsample::models {

using Vector = std::vector<double>;
using signal::ControlBounds;
using signal::ControlSignal;

/// Explicit-ODE model x' = f(x, u, t), y = g(x, u). Immutable once built.
class Model {
  public:
    Model(std::string name, std::size_t n_states, std::size_t n_controls, std::size_t n_outputs,
          Vector default_x0, ControlBounds bounds, Vector nominal_u);
    virtual ~Model() = default;

    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;

    const std::string& name() const { return name_; }
    std::size_t n_states() const { return n_states_; }
    std::size_t n_controls() const { return n_controls_; }
    std::size_t n_outputs() const { return n_outputs_; }
    const Vector& default_x0() const { return default_x0_; }
    const ControlBounds& control_bounds() const { return bounds_; }
    const Vector& nominal_u() const { return nominal_u_; }

    virtual void rhs(std::span<const double> x, std::span<const double> u, double t,
                     std::span<double> dxdt) const = 0;
    virtual void output(std::span<const double> x, std::span<const double> u,
                        std::span<double> y) const = 0;

    Vector rhs(const Vector& x, const Vector& u, double t) const;
    Vector output(const Vector& x, const Vector& u) const;

  private:
    std::string name_;
    std::size_t n_states_;
    std::size_t n_controls_;
    std::size_t n_outputs_;
    Vector default_x0_;
    ControlBounds bounds_;
    Vector nominal_u_;
};

/// Adapter for models given as callables; used for custom and toy systems.
class FunctionModel final : public Model {
  public:
    using Rhs = std::function<void(std::span<const double>, std::span<const double>, double,
                                   std::span<double>)>;
    using Output = std::function<void(std::span<const double>, std::span<const double>,
                                      std::span<double>)>;

    FunctionModel(std::string name, std::size_t n_states, std::size_t n_controls,
                  std::size_t n_outputs, Vector default_x0, ControlBounds bounds,
                  Vector nominal_u, Rhs rhs, Output output);

    void rhs(std::span<const double> x, std::span<const double> u, double t,
             std::span<double> dxdt) const override;
    void output(std::span<const double> x, std::span<const double> u,
                std::span<double> y) const override;
    using Model::output;
    using Model::rhs;

  private:
    Rhs rhs_;
    Output output_;
};

enum class RunStatus { completed, diverged };

struct Trajectory {
    std::size_t run_id = 0;
    double dt = 0.0;
    Vector times;
    std::vector<Vector> states;
    std::vector<Vector> outputs;
    std::vector<Vector> controls;
    RunStatus status = RunStatus::completed;
    std::optional<double> diverged_at;

    std::size_t samples() const { return times.size(); }
    bool completed() const { return status == RunStatus::completed; }

    bool operator==(const Trajectory&) const = default;
};

struct SimulationOptions {
    double divergence_limit = 1e8; // on the infinity norm of the state
};

/// Classic fixed-step RK4 with the control held constant over each step
/// (zero-order hold at the left grid point). Records every grid time from 0
/// to horizon. A non-finite state or ‖x‖∞ above the limit truncates the run
/// and marks it diverged. Throws signal::ConfigError on bad grid settings.
Trajectory simulate(const Model& model, const Vector& x0, const ControlSignal& signal, double dt,
                    double horizon, const SimulationOptions& options = {});

/// True when `value` is an integer multiple of `step` up to a 1e-9 relative tolerance.
bool is_multiple_of(double value, double step);

std::vector<std::string> builtin_model_names();

/// cstr3x2, vanderpol or lotka. Throws std::invalid_argument for other names.
std::shared_ptr<const Model> builtin_model(const std::string& name);

} // namespace dynsample::models
