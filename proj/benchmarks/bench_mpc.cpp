#include <benchmark/benchmark.h>

#include <memory>
#include <vector>

#include "fcev/common/rng.hpp"
#include "fcev/learning/explicit_table.hpp"
#include "fcev/learning/polynomial.hpp"
#include "fcev/mpc/controller.hpp"

using namespace fcev;

namespace {

std::shared_ptr<const powertrain::Powertrain> plant() {
    static auto p = std::make_shared<const powertrain::Powertrain>(powertrain::default_powertrain());
    return p;
}

// Table of the exact SOC change given the terminal voltage.
std::shared_ptr<const learning::ExplicitTable> table() {
    static auto t = [] {
        const double cap = plant()->battery.capacity_coulombs();
        auto exact = [cap](std::span<const double> x) { return -x[0] / x[2] * 0.05 / cap; };
        return std::make_shared<const learning::ExplicitTable>(
            learning::build_explicit_table(exact, learning::default_table_axes(), 0.05));
    }();
    return t;
}

std::vector<mpc::ControllerInput> inputs(std::size_t horizon, std::size_t count) {
    Rng rng(17);
    std::vector<mpc::ControllerInput> out;
    for (std::size_t k = 0; k < count; ++k) {
        const double soc = rng.uniform(0.5, 0.6);
        std::vector<double> loads(horizon);
        double l = rng.uniform(5000, 35000);
        for (auto& x : loads) {
            x = l;
            l = std::clamp(l + rng.uniform(-600, 600), 1000.0, 39000.0);
        }
        const double pfc = 25000 + rng.uniform(-2000, 2000);
        const auto st = powertrain::battery_state(plant()->battery, soc, loads[0] - pfc);
        out.push_back({soc, {st.terminal_voltage, plant()->battery.resistance(soc, loads[0] - pfc), pfc}, loads});
    }
    return out;
}

template <class Make>
void run_controller(benchmark::State& state, Make make) {
    mpc::MpcConfig cfg;
    cfg.horizon = static_cast<std::size_t>(state.range(0));
    auto ctl = make(cfg);
    const auto in = inputs(cfg.horizon, 64);
    std::size_t k = 0;
    for (auto _ : state) {
        ctl->reset();
        benchmark::DoNotOptimize(ctl->decide(in[k++ % in.size()]));
    }
}

void BM_TmpcStep(benchmark::State& state) {
    run_controller(state, [](const mpc::MpcConfig& c) { return std::make_unique<mpc::TmpcController>(plant(), c); });
}

void BM_LrmpcStep(benchmark::State& state) {
    table();
    run_controller(state,
                   [](const mpc::MpcConfig& c) { return std::make_unique<mpc::LrmpcController>(plant(), c, table()); });
}

void BM_PolynomialFit(benchmark::State& state) {
    const auto xs = learning::default_table_axes()[0].coords();
    std::vector<double> ys;
    for (double x : xs) ys.push_back(-x / 350.0 * 0.05 / 144000.0 + 1e-15 * x * x);
    for (auto _ : state) benchmark::DoNotOptimize(learning::fit_soc_polynomial(xs, ys));
}

}  // namespace

BENCHMARK(BM_TmpcStep)->DenseRange(5, 30, 5)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_LrmpcStep)->DenseRange(5, 30, 5)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PolynomialFit)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
