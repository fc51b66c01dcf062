// fcev: train observers, build tables, train velocity predictors, simulate and sweep.

#include <CLI11.hpp>
#include <fmt/core.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fcev/common/csv.hpp"
#include "fcev/common/error.hpp"
#include "fcev/harness/report.hpp"
#include "fcev/learning/explicit_table.hpp"
#include "fcev/learning/observer_data.hpp"
#include "fcev/learning/regressor.hpp"
#include "fcev/velocity/predictor.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fcev;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;

class UsageError : public Error {
public:
    using Error::Error;
};

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    int verbose = 0;
};

int g_verbose = 0;

template <class... Args>
void info(fmt::format_string<Args...> f, Args&&... args) {
    if (g_verbose > 0) fmt::print(stderr, "{}\n", fmt::format(f, std::forward<Args>(args)...));
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw UsageError("missing " + what);
    if (!fs::is_regular_file(path)) throw UsageError(what + " not found: " + path);
}

json load_config(const Options& o) {
    if (o.config.empty()) return json::object();
    require_file(o.config, "config file");
    try {
        return json::parse(csv::read_text(o.config));
    } catch (const json::exception& e) {
        throw ParseError(o.config + ": " + e.what());
    }
}

fs::path config_dir(const Options& o) { return o.config.empty() ? fs::current_path() : fs::path(o.config).parent_path(); }

json section(const json& cfg, const char* key) { return cfg.contains(key) ? cfg.at(key) : json::object(); }

std::shared_ptr<const powertrain::Powertrain> make_plant(const json& cfg, const Options& o) {
    return std::make_shared<const powertrain::Powertrain>(powertrain::load_powertrain(cfg, config_dir(o)));
}

harness::SimConfig make_sim(const json& cfg, const Options& o) {
    auto sim = harness::SimConfig::from_json(section(cfg, "sim"));
    if (o.seed) sim.seed = *o.seed;
    return sim;
}

// A CSV path, or "urban" / "mixed" for the seeded generator.
harness::DrivingCycle resolve_cycle(const std::string& spec, const json& cfg, double dt,
                                    const powertrain::Powertrain& plant) {
    if (fs::is_regular_file(spec)) return harness::load_cycle(spec, dt);
    if (spec == "urban" || spec == "mixed") {
        const auto c = section(cfg, "cycle");
        harness::CycleGenConfig g;
        g.kind = harness::cycle_kind_from_string(spec);
        g.duration = c.value("duration", g.duration);
        g.seed = c.value("seed", g.seed);
        g.dt = dt;
        return harness::generate_cycle(g, plant);
    }
    throw UsageError("cycle not found: " + spec + " (give a CSV path, urban or mixed)");
}

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw UsageError("missing --out");
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError(dir + ": " + ec.message());
}

struct ControllerInputs {
    std::string table;
    std::string velocity;
};

harness::ControllerContext make_context(const json& cfg, const Options& o,
                                        std::shared_ptr<const powertrain::Powertrain> plant,
                                        const ControllerInputs& in, bool need_table) {
    harness::ControllerContext ctx;
    ctx.plant = std::move(plant);
    ctx.mpc = mpc::MpcConfig::from_json(section(cfg, "mpc"));
    ctx.seed = o.seed.value_or(1);
    if (need_table) {
        require_file(in.table, "--table (required by lrmpc)");
        ctx.table = std::make_shared<const learning::ExplicitTable>(learning::load_table(in.table));
        info("table: {}", in.table);
    }
    return ctx;
}

std::unique_ptr<velocity::VelocityModel> maybe_velocity(const harness::SimConfig& sim, const ControllerInputs& in) {
    if (sim.preview != harness::Preview::predictor) return nullptr;
    require_file(in.velocity, "--velocity (required by the predictor preview)");
    return std::make_unique<velocity::VelocityModel>(velocity::VelocityModel::load(in.velocity));
}

void print_summary(const harness::StrategyResult& r) {
    const auto& s = r.summary;
    fmt::print("{:<11} n={:<3} h2_equiv={:.4f} g  h2_fc={:.4f} g  final_soc={:.4f}  optimality={:.3f}%  "
               "mean_solve={:.3e} s  sim={:.2f} s\n",
               r.spec.strategy, r.spec.horizon, s.h2_equiv_g, s.h2_fc_g, s.final_soc, r.optimality_pct,
               s.mean_solve_time, s.sim_wall_time);
}

// ---- commands ---------------------------------------------------------------

struct TrainObserverArgs {
    std::vector<std::string> logs;
    std::string training_csv;
    double holdout = -1.0;
};

void train_observer(const Options& o, const TrainObserverArgs& a) {
    if (a.logs.empty()) throw UsageError("missing --log");
    for (const auto& l : a.logs) require_file(l, "step log");
    if (o.out.empty()) throw UsageError("missing --out");
    if (!o.seed) throw UsageError("--seed is required for training");
    const auto cfg = load_config(o);

    std::vector<learning::ObserverSample> samples;
    for (const auto& l : a.logs) {
        const auto records = harness::read_step_log(l);
        const auto s = learning::generate_training_set(records);
        samples.insert(samples.end(), s.begin(), s.end());
        info("{}: {} samples", l, s.size());
    }
    const double holdout = a.holdout > 0.0 ? a.holdout : cfg.value("holdout", 0.2);
    auto [train, test] = learning::split_holdout(samples, holdout, *o.seed);
    if (!a.training_csv.empty()) learning::write_training_csv(a.training_csv, samples);

    auto spec = learning::RegressorSpec::from_json(section(cfg, "regressor"));
    spec.seed = *o.seed;
    const auto model = learning::train_regressor(spec, learning::to_dataset(train));
    const double test_rmse = test.empty() ? 0.0 : learning::rmse(model, learning::to_dataset(test));
    learning::save_regressor(o.out, model);
    fmt::print("{}: {} train / {} held out, train rmse {:.6e}, held-out rmse {:.6e}\n", spec.kind, train.size(),
               test.size(), model.train_rmse, test_rmse);
    fmt::print("wrote {}\n", o.out);
}

struct BuildTableArgs {
    std::string model;
    std::string csv;
    std::string scale = "default";
};

void build_table(const Options& o, const BuildTableArgs& a) {
    require_file(a.model, "--model");
    if (o.out.empty()) throw UsageError("missing --out");
    const auto cfg = load_config(o);
    const auto t = section(cfg, "table");
    const std::string scale = t.value("scale", a.scale);
    learning::TableAxes axes;
    if (scale == "default") axes = learning::default_table_axes();
    else if (scale == "full") axes = learning::full_scale_table_axes();
    else throw UsageError("unknown table scale '" + scale + "' (default or full)");
    if (t.contains("axes")) axes = learning::axes_from_json(t.at("axes"), axes);
    const double sample_dt = t.value("sample_dt", section(cfg, "sim").value("dt", 0.05));
    const std::size_t budget = t.value("budget_mb", std::size_t{1024}) * 1024 * 1024;

    const auto model = learning::load_regressor(a.model);
    const json provenance{{"regressor", model.spec.to_json()},
                          {"regressor_file", fs::path(a.model).filename().string()},
                          {"training_digest", model.data_digest}};
    const auto table = learning::build_explicit_table([&](std::span<const double> x) { return model.predict(x); },
                                                      axes, sample_dt, provenance, budget);
    learning::save_table(o.out, table);
    fmt::print("table {} points, sample_dt {} s -> {}\n", table.values.size(), table.sample_dt, o.out);
    if (!a.csv.empty()) {
        learning::export_table_csv(a.csv, table);
        const auto back = learning::import_table_csv(a.csv, table.axes, table.sample_dt);
        if (back.values != table.values) throw Error("CSV round trip changed table values");
        fmt::print("csv export {} round-trips\n", a.csv);
    }
}

struct TrainVelocityArgs {
    std::vector<std::string> cycles;
    std::string eval_cycle;
};

void train_velocity(const Options& o, const TrainVelocityArgs& a) {
    if (a.cycles.empty()) throw UsageError("missing --cycle");
    if (o.out.empty()) throw UsageError("missing --out");
    if (!o.seed) throw UsageError("--seed is required for training");
    const auto cfg = load_config(o);
    const auto plant = make_plant(cfg, o);
    auto vcfg = velocity::VelocityModelConfig::from_json(section(cfg, "velocity"));
    vcfg.cascade.seed = *o.seed;

    std::vector<std::vector<double>> traces;
    for (const auto& c : a.cycles) traces.push_back(resolve_cycle(c, cfg, vcfg.stride, *plant).v);
    const auto model = velocity::VelocityModel::train(traces, vcfg);
    model.save(o.out);
    fmt::print("deep forest: {} layers, cv rmse per layer:", model.cascade().depth());
    for (double e : model.cascade().cv_errors()) fmt::print(" {:.4f}", e);
    fmt::print("\n");
    if (!a.eval_cycle.empty()) {
        const auto v = resolve_cycle(a.eval_cycle, cfg, vcfg.stride, *plant).v;
        for (std::size_t h = 1; h <= 3; ++h) {
            const auto m = velocity::evaluate_horizon(model, v, h);
            const auto p = velocity::persistence_horizon(v, model.lag(), h);
            fmt::print("{} s ahead: mae {:.4f} rmse {:.4f} (persistence mae {:.4f} rmse {:.4f})\n", h, m.mae, m.rmse,
                       p.mae, p.rmse);
        }
    }
    fmt::print("wrote {}\n", o.out);
}

struct SimulateArgs {
    std::string cycle;
    std::vector<std::string> strategies;
    std::vector<std::size_t> horizons;
    ControllerInputs inputs;
    bool logs = false;
    bool mask_timing = false;
};

std::vector<harness::StrategySpec> strategy_list(const json& cfg, const SimulateArgs& a, bool sweep) {
    const auto sw = section(cfg, "sweep");
    auto strategies = a.strategies;
    if (strategies.empty())
        strategies = sw.value("strategies", sweep ? std::vector<std::string>{"tmpc", "lrmpc"}
                                                  : std::vector<std::string>{"tmpc"});
    auto horizons = a.horizons;
    if (horizons.empty())
        horizons = sweep ? sw.value("horizons", std::vector<std::size_t>{5, 10, 15, 20, 25, 30})
                         : std::vector<std::size_t>{section(cfg, "mpc").value("horizon", std::size_t{20})};
    if (!sweep && (strategies.size() != 1 || horizons.size() != 1))
        throw UsageError("simulate takes one --strategy and one --horizon; use sweep for lists");
    std::vector<harness::StrategySpec> out;
    for (auto h : horizons) {
        if (h == 0) throw UsageError("horizons must be positive");
        for (const auto& s : strategies) out.push_back({s, h});
    }
    return out;
}

void simulate_or_sweep(const Options& o, const SimulateArgs& a, bool sweep) {
    if (a.cycle.empty()) throw UsageError("missing --cycle");
    ensure_dir(o.out);
    const auto cfg = load_config(o);
    const auto plant = make_plant(cfg, o);
    const auto sim = make_sim(cfg, o);
    const auto specs = strategy_list(cfg, a, sweep);
    const bool need_table = std::any_of(specs.begin(), specs.end(), [](auto& s) { return s.strategy == "lrmpc"; });
    const auto ctx = make_context(cfg, o, plant, a.inputs, need_table);
    const auto vel = maybe_velocity(sim, a.inputs);
    const auto cycle = resolve_cycle(a.cycle, cfg, sim.dt, *plant);
    info("cycle {}: {} samples", cycle.name, cycle.size());

    std::vector<harness::SimResult> runs;
    const auto report = harness::compare_strategies(cycle, sim, ctx, specs, vel.get(), &runs);
    const fs::path out(o.out);
    harness::write_report(out / "report.json", report, a.mask_timing);
    if (sweep) {
        harness::write_sweep_csv(out / "sweep.csv", report, a.mask_timing);
        if (a.logs)
            for (std::size_t i = 0; i < runs.size(); ++i)
                harness::write_step_log(out / fmt::format("steps_{}_{}.csv", specs[i].strategy, specs[i].horizon),
                                        runs[i].records, a.mask_timing);
    } else {
        harness::write_step_log(out / "steps.csv", runs.front().records, a.mask_timing);
    }
    for (const auto& r : report.results) print_summary(r);
    fmt::print("wrote {}\n", o.out);
}

struct PredictArgs {
    std::string model;
    std::vector<double> history;
    std::string cycle;
    double at = -1.0;
    std::size_t steps = 1;
    double dt = 0.0;
};

void predict_velocity(const Options& o, const PredictArgs& a) {
    require_file(a.model, "--model");
    if (a.steps == 0) throw UsageError("--steps must be positive");
    const auto model = velocity::VelocityModel::load(a.model);
    std::vector<double> history = a.history;
    if (history.empty()) {
        if (a.cycle.empty() || a.at < 0.0) throw UsageError("give --history, or --cycle with --at");
        const auto cfg = load_config(o);
        const auto plant = make_plant(cfg, o);
        const auto v = resolve_cycle(a.cycle, cfg, model.stride(), *plant).v;
        const auto k = static_cast<std::size_t>(std::llround(a.at / model.stride()));
        if (k >= v.size()) throw UsageError("--at lies beyond the cycle");
        for (std::size_t j = model.history_length(); j-- > 0;) history.push_back(k >= j ? v[k - j] : v.front());
    }
    if (history.size() < model.history_length())
        throw UsageError(fmt::format("--history needs {} values", model.history_length()));
    const double dt = a.dt > 0.0 ? a.dt : model.stride();
    const auto seq = model.predict_horizon(history, a.steps, dt);
    std::string text = "step,t_s,v_mps\n";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        fmt::print("{:.6f}\n", seq[i]);
        text += fmt::format("{},{},{}\n", i + 1, csv::fmt(static_cast<double>(i + 1) * dt, 9), csv::fmt(seq[i], 9));
    }
    if (!o.out.empty()) {
        csv::write_text(o.out, text);
        info("wrote {}", o.out);
    }
}

void add_common(CLI::App* cmd, Options& o, bool out_required = false) {
    cmd->add_option("--config", o.config, "JSON configuration file");
    auto* out = cmd->add_option("--out", o.out, "Output file or directory");
    if (out_required) out->required();
    cmd->add_option("--seed", o.seed, "Random seed");
    cmd->add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fuel-cell/battery energy management: observer learning, MPC simulation and sweeps"};
    app.require_subcommand(1, 1);

    Options opt;
    TrainObserverArgs tro;
    BuildTableArgs bt;
    TrainVelocityArgs tv;
    SimulateArgs sa;
    PredictArgs pv;

    auto* c_tro = app.add_subcommand("train-observer", "Train a SOC-increment regressor from step logs");
    add_common(c_tro, opt);
    c_tro->add_option("--log", tro.logs, "Step log CSV (repeatable)");
    c_tro->add_option("--training-csv", tro.training_csv, "Also write the training samples here");
    c_tro->add_option("--holdout", tro.holdout, "Held-out fraction (default 0.2)");

    auto* c_bt = app.add_subcommand("build-table", "Evaluate a regressor on the explicit table grid");
    add_common(c_bt, opt);
    c_bt->add_option("--model", bt.model, "Regressor file");
    c_bt->add_option("--csv", bt.csv, "Also export the table as CSV and verify the round trip");
    c_bt->add_option("--scale", bt.scale, "Grid preset: default or full");

    auto* c_tv = app.add_subcommand("train-velocity", "Train the deep-forest velocity predictor");
    add_common(c_tv, opt);
    c_tv->add_option("--cycle", tv.cycles, "Cycle CSV, urban or mixed (repeatable)");
    c_tv->add_option("--eval-cycle", tv.eval_cycle, "Report 1-3 s errors on this cycle");

    auto add_sim = [&](CLI::App* cmd) {
        add_common(cmd, opt);
        cmd->add_option("--cycle", sa.cycle, "Cycle CSV, urban or mixed");
        cmd->add_option("--strategy", sa.strategies, "tmpc, lrmpc, rule_based, max_fc or exploration")->delimiter(',');
        cmd->add_option("--horizon", sa.horizons, "Prediction horizon(s)")->delimiter(',');
        cmd->add_option("--table", sa.inputs.table, "Explicit table file (lrmpc)");
        cmd->add_option("--velocity", sa.inputs.velocity, "Velocity model file (predictor preview)");
        cmd->add_flag("--mask-timing", sa.mask_timing, "Write timing fields as 0");
    };
    auto* c_sim = app.add_subcommand("simulate", "Closed-loop simulation of one strategy");
    add_sim(c_sim);
    auto* c_sw = app.add_subcommand("sweep", "Strategies x horizons comparison");
    add_sim(c_sw);
    c_sw->add_flag("--logs", sa.logs, "Write a step log per run");

    auto* c_pv = app.add_subcommand("predict-velocity", "Recursive velocity prediction");
    add_common(c_pv, opt);
    c_pv->add_option("--model", pv.model, "Velocity model file");
    c_pv->add_option("--history", pv.history, "Past velocities at 1 s spacing, oldest first")->delimiter(',');
    c_pv->add_option("--cycle", pv.cycle, "Take the history from this cycle");
    c_pv->add_option("--at", pv.at, "Time in the cycle, s");
    c_pv->add_option("--steps", pv.steps, "Number of predicted values");
    c_pv->add_option("--dt", pv.dt, "Spacing of predicted values, s (default: model stride)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }
    g_verbose = opt.verbose;

    CLI::App* active = app.get_subcommands().front();
    try {
        if (active == c_tro) train_observer(opt, tro);
        else if (active == c_bt) build_table(opt, bt);
        else if (active == c_tv) train_velocity(opt, tv);
        else if (active == c_sim) simulate_or_sweep(opt, sa, false);
        else if (active == c_sw) simulate_or_sweep(opt, sa, true);
        else if (active == c_pv) predict_velocity(opt, pv);
    } catch (const UsageError& e) {
        fmt::print(stderr, "error: {}\n\n{}", e.what(), active->help());
        return kExitUsage;
    } catch (const harness::StepError& e) {
        fmt::print(stderr, "error: {}\nstate: {}\n", e.what(), e.state().dump());
        return kExitInfeasible;
    } catch (const InfeasibleProblemError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitInfeasible;
    } catch (const InfeasiblePowerError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitInfeasible;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return kExitRuntime;
    }
    return 0;
}
