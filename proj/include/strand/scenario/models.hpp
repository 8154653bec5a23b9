#pragma once

#include "strand/engine/registry.hpp"

#include <array>
#include <cstddef>
#include <functional>
#include <vector>

namespace strand::scenario {

/// Illustrative response shapes for the two-city pandemic scenario. None of
/// these are calibrated; they only give the dataflow something to carry.
struct ScenarioConstants {
    double weather_period = 365.0;
    /// g(T) = 1 + g_amplitude * cos(pi/2 * (1 + (T - neutral_temperature) / temperature_scale))
    double neutral_temperature = 22.0;
    double temperature_scale = 15.0;
    double g_amplitude = 0.2;
    /// h(i) = 1 / (1 + k * i), k by risk posture (0 = averse, 1 = tolerant).
    double damping_averse = 50.0;
    double damping_tolerant = 10.0;
    /// Off-diagonal mixing = min(cap, mix_gain * (c_a / reference) * (c_b / reference)).
    double contact_reference = 10.0;
    double mix_gain = 0.05;
    double mix_cap = 0.3;
    /// RK4 step halvings before Divergence.
    int max_halvings = 20;
};

const ScenarioConstants& constants();

struct WeatherParams {
    double baseline = 22.0;
    double amplitude = 8.0;
    double offset = 0.0;
};

double temperature_at(const WeatherParams& p, Tick t);

struct BehaviorParams {
    double beta = 0.03;
    double contact = 10.0;
    /// 0 = risk-averse, 1 = risk-tolerant.
    int risk = 0;
};

double temperature_response(double temperature);
double infection_damping(double infected_fraction, int risk);
double effective_contact(const BehaviorParams& p, double temperature, double infected_fraction);

/// Row-major 2x2 row-stochastic matrix.
std::array<double, 4> mixing_matrix(double contact_a, double contact_b);

struct SeirState {
    double S = 0.0;
    double E = 0.0;
    double I = 0.0;
    double R = 0.0;

    double total() const { return S + E + I + R; }
};

struct SeirRates {
    double sigma = 0.2;
    double gamma = 0.1;
};

/// Exogenous drivers held constant over one sample.
struct SeirForcing {
    /// beta * c_eff
    double transmission = 0.0;
    double m_intra = 1.0;
    double m_inter = 0.0;
    /// Other city's I/N.
    double other_fraction = 0.0;
};

/// One RK4 step of size dt; halves the step while any compartment would go
/// negative. Throws Divergence when the halvings run out.
SeirState seir_step(const SeirState& x, const SeirRates& rates, const SeirForcing& f, double N, double dt);

/// States at the start of each of `samples` samples of width `dt`, plus the
/// final state (samples + 1 entries). forcing(k) drives sample k.
std::vector<SeirState> seir_trajectory(SeirState x0, const SeirRates& rates,
                                       const std::function<SeirForcing(std::size_t)>& forcing, std::size_t samples,
                                       double dt);

/// Registers "weather", "behavior", "mixing" and "seir_city".
void register_models(engine::ModelRegistry& registry);

/// Builtins plus the scenario models.
engine::ModelRegistry scenario_registry();

}  // namespace strand::scenario
