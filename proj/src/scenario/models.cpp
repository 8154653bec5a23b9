#include "strand/scenario/models.hpp"

#include "strand/core/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace strand::scenario {

const ScenarioConstants& constants() {
    static const ScenarioConstants c;
    return c;
}

double temperature_at(const WeatherParams& p, Tick t) {
    return p.baseline + p.amplitude * std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / constants().weather_period) +
           p.offset;
}

double temperature_response(double temperature) {
    const auto& k = constants();
    const double u = (temperature - k.neutral_temperature) / k.temperature_scale;
    return 1.0 + k.g_amplitude * std::cos(std::numbers::pi / 2.0 * (1.0 + u));
}

double infection_damping(double infected_fraction, int risk) {
    const auto& k = constants();
    const double strength = risk == 0 ? k.damping_averse : k.damping_tolerant;
    return 1.0 / (1.0 + strength * std::max(0.0, infected_fraction));
}

double effective_contact(const BehaviorParams& p, double temperature, double infected_fraction) {
    return std::max(0.0, p.contact * temperature_response(temperature) * infection_damping(infected_fraction, p.risk));
}

std::array<double, 4> mixing_matrix(double contact_a, double contact_b) {
    const auto& k = constants();
    const double na = std::max(0.0, contact_a) / k.contact_reference;
    const double nb = std::max(0.0, contact_b) / k.contact_reference;
    const double off = std::min(k.mix_cap, k.mix_gain * na * nb);
    const double row = 1.0 + off;
    return {1.0 / row, off / row, off / row, 1.0 / row};
}

namespace {

SeirState derivative(const SeirState& x, const SeirRates& r, const SeirForcing& f, double N) {
    const double lambda = f.transmission * (f.m_intra * x.I / N + f.m_inter * f.other_fraction);
    const double infection = lambda * x.S;
    const double onset = r.sigma * x.E;
    const double recovery = r.gamma * x.I;
    return {-infection, infection - onset, onset - recovery, recovery};
}

SeirState axpy(const SeirState& x, double a, const SeirState& d) {
    return {x.S + a * d.S, x.E + a * d.E, x.I + a * d.I, x.R + a * d.R};
}

SeirState rk4(const SeirState& x, const SeirRates& r, const SeirForcing& f, double N, double dt) {
    const auto k1 = derivative(x, r, f, N);
    const auto k2 = derivative(axpy(x, dt / 2, k1), r, f, N);
    const auto k3 = derivative(axpy(x, dt / 2, k2), r, f, N);
    const auto k4 = derivative(axpy(x, dt, k3), r, f, N);
    return {x.S + dt / 6 * (k1.S + 2 * k2.S + 2 * k3.S + k4.S), x.E + dt / 6 * (k1.E + 2 * k2.E + 2 * k3.E + k4.E),
            x.I + dt / 6 * (k1.I + 2 * k2.I + 2 * k3.I + k4.I), x.R + dt / 6 * (k1.R + 2 * k2.R + 2 * k3.R + k4.R)};
}

bool admissible(const SeirState& x) {
    return std::isfinite(x.total()) && x.S >= 0 && x.E >= 0 && x.I >= 0 && x.R >= 0;
}

SeirState advance(const SeirState& x, const SeirRates& r, const SeirForcing& f, double N, double dt, int depth) {
    const auto y = rk4(x, r, f, N, dt);
    if (admissible(y)) {
        return y;
    }
    if (depth >= constants().max_halvings) {
        throw Divergence("SEIR step went negative after " + std::to_string(depth) + " halvings (dt=" +
                         std::to_string(dt) + ")");
    }
    return advance(advance(x, r, f, N, dt / 2, depth + 1), r, f, N, dt / 2, depth + 1);
}

}  // namespace

SeirState seir_step(const SeirState& x, const SeirRates& rates, const SeirForcing& f, double N, double dt) {
    return advance(x, rates, f, N, dt, 0);
}

std::vector<SeirState> seir_trajectory(SeirState x0, const SeirRates& rates,
                                       const std::function<SeirForcing(std::size_t)>& forcing, std::size_t samples,
                                       double dt) {
    const double N = x0.total();
    std::vector<SeirState> out{x0};
    out.reserve(samples + 1);
    for (std::size_t k = 0; k < samples; ++k) {
        out.push_back(seir_step(out.back(), rates, forcing(k), N, dt));
    }
    return out;
}

namespace {

SeriesWindow blank(const std::string& variable, const TickRange& window, Tick resolution, int width = 1) {
    SeriesWindow w;
    w.variable = variable;
    w.t_start = window.lo;
    w.t_end = window.hi;
    w.resolution = resolution;
    w.width = width;
    w.values.assign(static_cast<std::size_t>(w.sample_count()) * static_cast<std::size_t>(width), 0.0);
    return w;
}

/// Input value at t, holding the nearest edge sample outside the window.
double held(const SeriesWindow& s, Tick t, int c = 0) {
    return s.at_tick(std::clamp(t, s.t_start, s.t_end - 1), c);
}

std::optional<double> find_param(const engine::ModelCall& call, const std::string& name) {
    auto it = call.params.find(name);
    return it == call.params.end() ? std::nullopt : std::optional<double>(it->second);
}

engine::ModelResult weather(const engine::ModelCall& call) {
    const WeatherParams p{call.param("baseline"), call.param("amplitude"), call.param("offset")};
    if (p.amplitude < 0) {
        throw ModelFailure("weather amplitude must be >= 0");
    }
    auto out = blank("temperature", call.output_window, call.model.output_scope.resolution);
    for (Tick k = 0; k < out.sample_count(); ++k) {
        out.values[static_cast<std::size_t>(k)] = temperature_at(p, out.t_start + k * out.resolution);
    }
    return {{std::move(out)}, std::nullopt};
}

engine::ModelResult behavior(const engine::ModelCall& call) {
    const BehaviorParams p{call.param("beta"), call.param("contact"), static_cast<int>(call.param("risk"))};
    if (p.beta < 0 || p.contact < 0) {
        throw ModelFailure("behavior rates must be >= 0");
    }
    const auto& temperature = call.input("temperature");
    const auto& infected = call.input("infected_fraction");
    const auto res = call.model.output_scope.resolution;
    auto contact = blank("contact", call.output_window, res);
    auto beta = blank("beta", call.output_window, res);
    auto risk = blank("risk", call.output_window, res);
    for (Tick k = 0; k < contact.sample_count(); ++k) {
        const Tick t = contact.t_start + k * res;
        const auto i = static_cast<std::size_t>(k);
        contact.values[i] = effective_contact(p, held(temperature, t), held(infected, t));
        beta.values[i] = p.beta;
        risk.values[i] = static_cast<double>(p.risk);
    }
    return {{std::move(contact), std::move(beta), std::move(risk)}, std::nullopt};
}

engine::ModelResult mixing(const engine::ModelCall& call) {
    const auto& a = call.input("contact_a");
    const auto& b = call.input("contact_b");
    const auto res = call.model.output_scope.resolution;
    auto out = blank("mixing", call.output_window, res, 4);
    for (Tick k = 0; k < out.sample_count(); ++k) {
        const Tick t = out.t_start + k * res;
        const auto m = mixing_matrix(held(a, t), held(b, t));
        std::copy(m.begin(), m.end(), out.values.begin() + k * 4);
    }
    return {{std::move(out)}, std::nullopt};
}

engine::ModelResult seir_city(const engine::ModelCall& call) {
    const double N = call.param("N");
    const SeirRates rates{call.param("sigma"), call.param("gamma")};
    const int row = static_cast<int>(call.param("row"));
    if (!(N > 0) || rates.sigma < 0 || rates.gamma < 0 || (row != 0 && row != 1)) {
        throw ModelFailure("seir_city needs N > 0, non-negative rates and row 0 or 1");
    }
    SeirState x0;
    if (call.state) {
        if (call.state->size() != 4) {
            throw ModelFailure("seir_city state must hold S, E, I, R");
        }
        x0 = {(*call.state)[0], (*call.state)[1], (*call.state)[2], (*call.state)[3]};
    } else {
        const double I0 = call.param("I0");
        const double E0 = find_param(call, "E0").value_or(0.0);
        x0 = {N - I0 - E0, E0, I0, 0.0};
    }
    if (!admissible(x0)) {
        throw ModelFailure("seir_city initial state has negative compartments");
    }

    const auto& contact = call.input("contact");
    const auto& beta = call.input("beta");
    const auto& mix = call.input("mixing");
    const auto& other = call.input("other_infected");
    const auto res = call.model.output_scope.resolution;
    const auto shift = call.model.shift;
    if (shift % res != 0) {
        throw ModelFailure("seir_city needs a shift that is a multiple of its output resolution");
    }
    const auto emitted = static_cast<std::size_t>(call.output_window.length() / res);
    const auto handoff = static_cast<std::size_t>(shift / res);
    const Tick lo = call.output_window.lo;
    auto forcing = [&](std::size_t k) {
        const Tick t = lo + static_cast<Tick>(k) * res;
        return SeirForcing{held(beta, t) * held(contact, t), held(mix, t, row * 2 + row),
                           held(mix, t, row * 2 + (1 - row)), held(other, t)};
    };
    const auto traj = seir_trajectory(x0, rates, forcing, std::max(emitted, handoff), static_cast<double>(res));

    std::array<SeriesWindow, 5> out{blank("S", call.output_window, res), blank("E", call.output_window, res),
                                    blank("I", call.output_window, res), blank("R", call.output_window, res),
                                    blank("infected_fraction", call.output_window, res)};
    for (std::size_t k = 0; k < emitted; ++k) {
        const auto& x = traj[k];
        out[0].values[k] = x.S;
        out[1].values[k] = x.E;
        out[2].values[k] = x.I;
        out[3].values[k] = x.R;
        out[4].values[k] = x.I / N;
    }
    const auto& next = traj[handoff];
    engine::ModelResult result;
    result.outputs.assign(std::make_move_iterator(out.begin()), std::make_move_iterator(out.end()));
    result.state = engine::ModelState{next.S, next.E, next.I, next.R};
    return result;
}

}  // namespace

void register_models(engine::ModelRegistry& registry) {
    registry.add("weather", weather);
    registry.add("behavior", behavior);
    registry.add("mixing", mixing);
    registry.add("seir_city", seir_city);
}

engine::ModelRegistry scenario_registry() {
    auto r = engine::ModelRegistry::with_builtins();
    register_models(r);
    return r;
}

}  // namespace strand::scenario
