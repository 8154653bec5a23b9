#include "fixtures.hpp"

#include "strand/core/errors.hpp"
#include "strand/core/flow_io.hpp"
#include "strand/engine/execute.hpp"
#include "strand/scenario/models.hpp"

#include <boost/numeric/odeint.hpp>
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

using namespace strand;
using namespace strand::scenario;

namespace {

ModelSpec city_spec(Tick window) {
    auto flow = load_flow(strand::testing::data_path("demo_flow.yaml").string());
    auto m = flow.model("city_phoenix");
    m.input_scope.window = window;
    m.output_scope.window = window;
    m.shift = window;
    return m;
}

std::vector<SeriesWindow> city_inputs(Tick window, double contact, double beta, double other) {
    auto mix = strand::testing::constant_series("mixing", {0, window}, 0.0);
    mix.width = 4;
    mix.values.clear();
    for (Tick t = 0; t < window; ++t) {
        const auto m = mixing_matrix(contact, 8.0);
        mix.values.insert(mix.values.end(), m.begin(), m.end());
    }
    return {strand::testing::constant_series("contact", {0, window}, contact),
            strand::testing::constant_series("beta", {0, window}, beta), mix,
            strand::testing::constant_series("other_infected", {0, window}, other)};
}

using State = std::array<double, 4>;

/// SEIR right-hand side written out independently of the model code.
struct Rhs {
    double transmission;
    double sigma;
    double gamma;
    double N;
    void operator()(const State& x, State& dx, double) const {
        const double inf = transmission * x[0] * x[2] / N;
        dx[0] = -inf;
        dx[1] = inf - sigma * x[1];
        dx[2] = sigma * x[1] - gamma * x[2];
        dx[3] = gamma * x[2];
    }
};

}  // namespace

TEST_CASE("SEIR conserves the population over a year") {
    const Tick days = 365;
    const auto spec = city_spec(days);
    const ParameterVector params{{"N", 1.6e6}, {"I0", 1600.0}, {"sigma", 0.2}, {"gamma", 0.1}, {"row", 0.0}};
    const auto inputs = city_inputs(days, 11.0, 0.035, 0.002);
    const auto r = engine::execute_instance(spec, scenario_registry(), 0, params, inputs, nullptr);
    REQUIRE(r.outputs.size() == 5);
    const double N = 1.6e6;
    for (Tick k = 0; k < days; ++k) {
        const auto i = static_cast<std::size_t>(k);
        const double total = r.outputs[0].values[i] + r.outputs[1].values[i] + r.outputs[2].values[i] + r.outputs[3].values[i];
        REQUIRE(std::abs(total - N) <= 1e-9 * N);
        CHECK(r.outputs[4].values[i] == r.outputs[2].values[i] / N);
    }
    REQUIRE(r.state.has_value());
    CHECK(std::abs((*r.state)[0] + (*r.state)[1] + (*r.state)[2] + (*r.state)[3] - N) <= 1e-9 * N);
}

TEST_CASE("SEIR without transmission keeps S constant") {
    const SeirState x0{9990.0, 0.0, 10.0, 0.0};
    const auto traj = seir_trajectory(x0, {0.2, 0.1}, [](std::size_t) { return SeirForcing{0.0, 1.0, 0.0, 0.0}; }, 365, 1.0);
    for (const auto& x : traj) {
        CHECK(x.S == 9990.0);
    }
    CHECK(traj.back().I < 10.0);
}

TEST_CASE("SEIR peak matches a 100x finer reference integration") {
    const double N = 10000.0;
    const SeirState x0{N - 10.0, 0.0, 10.0, 0.0};
    const std::size_t days = 365;
    const auto traj = seir_trajectory(x0, {0.2, 0.1}, [](std::size_t) { return SeirForcing{0.3, 1.0, 0.0, 0.0}; }, days, 1.0);

    State x{N - 10.0, 0.0, 10.0, 0.0};
    const Rhs rhs{0.3, 0.2, 0.1, N};
    boost::numeric::odeint::runge_kutta4<State> stepper;
    std::vector<double> ref_i{x[2]};
    for (std::size_t d = 0; d < days; ++d) {
        for (int k = 0; k < 100; ++k) {
            stepper.do_step(rhs, x, static_cast<double>(d) + k * 0.01, 0.01);
        }
        ref_i.push_back(x[2]);
    }
    auto peak = [](const std::vector<double>& v) { return std::max_element(v.begin(), v.end()) - v.begin(); };
    std::vector<double> got_i;
    for (const auto& s : traj) {
        got_i.push_back(s.I);
    }
    const auto t_ref = peak(ref_i);
    const auto t_got = peak(got_i);
    INFO("reference peak " << ref_i[t_ref] << " at " << t_ref << ", model " << got_i[t_got] << " at " << t_got);
    CHECK(std::abs(t_ref - t_got) <= 1);
    CHECK(std::abs(got_i[t_got] - ref_i[t_ref]) <= 0.005 * ref_i[t_ref]);
}

TEST_CASE("consecutive SEIR steps join without a seam") {
    const auto whole = city_spec(14);
    const auto half = city_spec(7);
    const ParameterVector params{{"N", 75000.0}, {"I0", 75.0}, {"sigma", 0.2}, {"gamma", 0.1}, {"row", 1.0}};
    const auto reg = scenario_registry();
    const auto long_run = engine::execute_instance(whole, reg, 0, params, city_inputs(14, 9.0, 0.03, 0.001), nullptr);
    auto second_inputs = city_inputs(7, 9.0, 0.03, 0.001);
    for (auto& s : second_inputs) {
        s.t_start += 7;
        s.t_end += 7;
    }
    const auto first = engine::execute_instance(half, reg, 0, params, city_inputs(7, 9.0, 0.03, 0.001), nullptr);
    const auto second = engine::execute_instance(half, reg, 1, params, second_inputs, &*first.state);
    for (std::size_t k = 0; k < 7; ++k) {
        CHECK(first.outputs[2].values[k] == Catch::Approx(long_run.outputs[2].values[k]).epsilon(1e-12));
        CHECK(second.outputs[2].values[k] == Catch::Approx(long_run.outputs[2].values[k + 7]).epsilon(1e-12));
    }
}

TEST_CASE("SEIR step reports divergence when halving cannot recover") {
    const SeirState x{100.0, 0.0, 1.0, 0.0};
    CHECK_THROWS_AS(seir_step(x, {0.2, 1e30}, {0.3, 1.0, 0.0, 0.0}, 101.0, 1.0), Divergence);
}

TEST_CASE("weather averages to baseline plus offset over a period") {
    const WeatherParams p{22.0, 8.0, -1.5};
    // Simpson's rule on the closed form over one period.
    const int n = 3650;
    const double h = 365.0 / n;
    auto f = [&](double t) { return p.baseline + p.amplitude * std::sin(2.0 * std::numbers::pi * t / 365.0) + p.offset; };
    double sum = f(0.0) + f(365.0);
    for (int i = 1; i < n; ++i) {
        sum += (i % 2 ? 4.0 : 2.0) * f(i * h);
    }
    const double integral_mean = sum * h / 3.0 / 365.0;
    CHECK(integral_mean == Catch::Approx(20.5).epsilon(1e-12));

    double tick_mean = 0.0;
    for (Tick t = 0; t < 365; ++t) {
        tick_mean += temperature_at(p, t);
    }
    tick_mean /= 365.0;
    CHECK(tick_mean == Catch::Approx(integral_mean).epsilon(1e-12));
}

TEST_CASE("behavior contact follows the closed form") {
    const BehaviorParams p{0.03, 10.0, 0};
    for (double temp : {5.0, 22.0, 37.0}) {
        for (double inf : {0.0, 0.01, 0.2}) {
            const double g = 1.0 + 0.2 * std::cos(std::numbers::pi / 2.0 * (1.0 + (temp - 22.0) / 15.0));
            CHECK(effective_contact(p, temp, inf) == Catch::Approx(10.0 * g / (1.0 + 50.0 * inf)));
            const BehaviorParams tolerant{0.03, 10.0, 1};
            CHECK(effective_contact(tolerant, temp, inf) == Catch::Approx(10.0 * g / (1.0 + 10.0 * inf)));
        }
    }
    CHECK(temperature_response(22.0) == Catch::Approx(1.0).margin(1e-15));
    CHECK(infection_damping(0.1, 0) < infection_damping(0.1, 1));
}

TEST_CASE("mixing matrix is row-stochastic and capped") {
    for (double a : {0.0, 5.0, 10.0, 40.0}) {
        for (double b : {0.0, 7.0, 30.0}) {
            const auto m = mixing_matrix(a, b);
            CHECK(m[0] + m[1] == Catch::Approx(1.0));
            CHECK(m[2] + m[3] == Catch::Approx(1.0));
            CHECK(m[1] == m[2]);
            const double off = std::min(0.3, 0.05 * (a / 10.0) * (b / 10.0));
            CHECK(m[1] == Catch::Approx(off / (1.0 + off)));
        }
    }
}

TEST_CASE("scenario models reject bad parameters as model failures") {
    auto flow = load_flow(strand::testing::data_path("demo_flow.yaml").string());
    const auto reg = scenario_registry();
    const ParameterVector bad{{"baseline", 22.0}, {"amplitude", -1.0}, {"offset", 0.0}};
    CHECK_THROWS_AS(engine::execute_instance(flow.model("weather"), reg, 0, bad, {}, nullptr), ModelFailure);
    const ParameterVector good{{"baseline", 22.0}, {"amplitude", 8.0}, {"offset", 0.0}};
    const auto r = engine::execute_instance(flow.model("weather"), reg, 2, good, {}, nullptr);
    REQUIRE(r.outputs.size() == 1);
    CHECK(r.outputs[0].t_start == 14);
    CHECK(r.outputs[0].values[0] == temperature_at({22.0, 8.0, 0.0}, 14));
}
