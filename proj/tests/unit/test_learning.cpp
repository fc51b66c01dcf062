#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "fcev/common/error.hpp"
#include "fcev/common/rng.hpp"
#include "fcev/learning/ensemble.hpp"
#include "fcev/learning/explicit_table.hpp"
#include "fcev/learning/observer_data.hpp"
#include "fcev/learning/polynomial.hpp"
#include "fcev/learning/regressor.hpp"
#include "fcev/powertrain/battery.hpp"

using namespace fcev;
using namespace fcev::learning;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "fcev_test_learning";
    std::filesystem::create_directories(dir);
    return dir / name;
}

double stddev(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size()));
}

Dataset linear_1d(std::size_t n, std::uint64_t seed) {
    Dataset d;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const double x = rng.uniform(0, 10);
        d.push(std::array{x}, 3.0 * x + 1.0);
    }
    return d;
}

Dataset random_5d(std::size_t n, std::uint64_t seed) {
    Dataset d;
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        std::array<double, 5> x{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                                rng.uniform(-1, 1)};
        d.push(x, x[0] * x[1] + std::sin(3 * x[2]) + 0.1 * x[4]);
    }
    return d;
}

// Sum of the five coordinates: cheap, and distinct at every grid node.
double coordinate_sum(std::span<const double> x) { return x[0] + 10 * x[1] + 100 * x[2] + 1000 * x[3] + x[4]; }

StepRecord record(double soc, double p_batt = 0.0) {
    StepRecord r;
    r.soc = soc;
    r.p_batt = p_batt;
    r.p_load = p_batt;
    r.u_batt = 350;
    r.r_batt = 0.5;
    return r;
}

}  // namespace

TEST_CASE("training set pairs consecutive steps") {
    std::vector<StepRecord> constant{record(0.6), record(0.6), record(0.6)};
    auto s = generate_training_set(constant);
    REQUIRE(s.size() == 2);
    for (const auto& x : s) CHECK(x.delta_soc == 0.0);

    std::vector<StepRecord> two{record(0.6), record(0.5)};
    CHECK(generate_training_set(two).size() == 1);

    const auto model = powertrain::default_battery();
    const auto next = powertrain::soc_step(model, 0.6, 40.0, 0.05);
    std::vector<StepRecord> coulomb{record(0.6), record(next.soc)};
    CHECK(generate_training_set(coulomb)[0].delta_soc == doctest::Approx(-1.3889e-5).epsilon(1e-4));
    CHECK(generate_training_set(coulomb)[0].delta_soc == doctest::Approx(-40.0 * 0.05 / (3600.0 * 40.0)));

    std::vector<StepRecord> one{record(0.6)};
    CHECK_THROWS_AS(generate_training_set(one), ValidationError);
}

TEST_CASE("training csv round trips and holdout split is deterministic") {
    std::vector<ObserverSample> s;
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        s.push_back({rng.uniform(-4e4, 4e4), rng.uniform(0, 6e4), rng.uniform(300, 400), rng.uniform(0.44, 0.54),
                     rng.uniform(0, 6e4), rng.normal() * 1e-5});
    }
    const auto path = scratch("train.csv");
    write_training_csv(path, s);
    const auto back = read_training_csv(path);
    REQUIRE(back.size() == s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        CHECK(back[i].features() == s[i].features());
        CHECK(back[i].delta_soc == s[i].delta_soc);
    }

    auto [train, test] = split_holdout(s, 0.2, 11);
    CHECK(test.size() == 10);
    CHECK(train.size() == 40);
    auto [train2, test2] = split_holdout(s, 0.2, 11);
    CHECK(test2.front().p_batt == test.front().p_batt);
    CHECK_THROWS_AS(split_holdout(s, 0.0, 1), ValidationError);
}

TEST_CASE("binned prediction agrees with raw prediction on training rows") {
    const auto d = random_5d(800, 5);
    BinnedMatrix bins(d, 32);
    Rng rng(1);
    TreeParams p{6, 2, 0, false};
    auto tree = RegressionTree::fit(bins, d.y, all_rows(d.rows()), p, rng);
    CHECK(tree.depth() <= 6);
    for (std::size_t i = 0; i < d.rows(); ++i) CHECK(tree.predict_binned(bins, i) == tree.predict(d.row(i)));

    TreeParams cr{0, 1, 0, true};
    auto random_tree = RegressionTree::fit(bins, d.y, all_rows(d.rows()), cr, rng);
    for (std::size_t i = 0; i < d.rows(); ++i) {
        CHECK(random_tree.predict_binned(bins, i) == random_tree.predict(d.row(i)));
    }
}

TEST_CASE("constant target yields a constant predictor") {
    Dataset d;
    Rng rng(2);
    for (int i = 0; i < 100; ++i) d.push(std::array{rng.uniform(), rng.uniform(), rng.uniform()}, 4.25);
    RegressorSpec spec;
    spec.max_depth = 1;
    spec.n_trees = 10;
    auto r = train_regressor(spec, d);
    for (int i = 0; i < 50; ++i) {
        std::array q{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
        CHECK(r.predict(q) == 4.25);
    }
    CHECK(r.train_rmse == 0.0);
}

TEST_CASE("boosting fits a linear target") {
    const auto d = linear_1d(1000, 9);
    RegressorSpec spec;
    spec.kind = "gradient_boosted_trees";
    spec.rounds = 200;
    spec.boost_depth = 4;
    spec.min_leaf = 1;
    auto r = train_regressor(spec, d);
    CHECK(r.train_rmse < 0.05 * stddev(d.y));
}

TEST_CASE("random forest with 100 trees and min leaf 2 fits a smooth target") {
    const auto d = random_5d(2000, 4);
    RegressorSpec spec;
    spec.n_trees = 100;
    spec.min_leaf = 2;
    auto r = train_regressor(spec, d);
    const auto held = random_5d(500, 99);
    CHECK(rmse(r, held) < 0.5 * stddev(held.y));
}

TEST_CASE("training is deterministic and survives persistence") {
    const auto d = random_5d(400, 6);
    for (std::string kind : {"random_forest", "gradient_boosted_trees"}) {
        RegressorSpec spec;
        spec.kind = kind;
        spec.n_trees = 20;
        spec.rounds = 30;
        spec.seed = 17;
        auto a = train_regressor(spec, d);
        auto b = train_regressor(spec, d);
        const auto path = scratch(kind + ".bin");
        save_regressor(path, a);
        auto c = load_regressor(path);
        CHECK(c.data_digest == a.data_digest);
        CHECK(c.spec.kind == kind);
        const auto probe = random_5d(100, 7);
        for (std::size_t i = 0; i < probe.rows(); ++i) {
            CHECK(a.predict(probe.row(i)) == b.predict(probe.row(i)));
            CHECK(a.predict(probe.row(i)) == c.predict(probe.row(i)));
        }
    }
}

TEST_CASE("different seeds give different forests") {
    const auto d = random_5d(300, 6);
    RegressorSpec spec;
    spec.n_trees = 5;
    spec.seed = 1;
    auto a = train_regressor(spec, d);
    spec.seed = 2;
    auto b = train_regressor(spec, d);
    const auto probe = random_5d(50, 8);
    bool differs = false;
    for (std::size_t i = 0; i < probe.rows(); ++i) differs |= a.predict(probe.row(i)) != b.predict(probe.row(i));
    CHECK(differs);
}

TEST_CASE("invalid training input is rejected") {
    RegressorSpec spec;
    CHECK_THROWS_AS(train_regressor(spec, Dataset{}), ValidationError);
    Dataset d;
    d.push(std::array{1.0, std::nan("")}, 1.0);
    d.push(std::array{1.0, 2.0}, 1.0);
    CHECK_THROWS_AS(train_regressor(spec, d), ValidationError);
    spec.kind = "no_such_kind";
    CHECK_THROWS_AS(train_regressor(spec, linear_1d(10, 1)), ValidationError);
    spec = RegressorSpec{};
    spec.learning_rate = 1.5;
    CHECK_THROWS_AS(spec.validate(), ValidationError);
    CHECK_THROWS_AS(RegressorSpec::from_json({{"n_trees", 0}}), ValidationError);
    CHECK(RegressorSpec::from_json({{"n_trees", 100}, {"min_leaf", 2}}).n_trees == 100);
}

TEST_CASE("plugin regressors train, persist and load") {
    struct MeanModel : Regressor {
        double mean = 0;
        double predict(std::span<const double>) const override { return mean; }
        void save(ByteWriter& out) const override { out.f64(mean); }
    };
    register_regressor(
        "mean",
        [](const RegressorSpec&, const Dataset& d) -> std::unique_ptr<Regressor> {
            auto m = std::make_unique<MeanModel>();
            m->mean = std::accumulate(d.y.begin(), d.y.end(), 0.0) / static_cast<double>(d.rows());
            return m;
        },
        [](ByteReader& in) -> std::unique_ptr<Regressor> {
            auto m = std::make_unique<MeanModel>();
            m->mean = in.f64();
            return m;
        });
    CHECK(has_regressor("mean"));
    RegressorSpec spec;
    spec.kind = "mean";
    auto r = train_regressor(spec, linear_1d(100, 3));
    const auto path = scratch("mean.bin");
    save_regressor(path, r);
    auto back = load_regressor(path);
    CHECK(back.predict(std::array{0.0}) == r.predict(std::array{5.0}));
}

TEST_CASE("explicit table traversal") {
    TableAxes axes = default_table_axes();
    for (auto& a : axes) a.points = 2;
    auto t = build_explicit_table(coordinate_sum, axes, 0.05);
    CHECK(t.size() == 32);

    const auto d = random_5d(300, 12);
    RegressorSpec spec;
    spec.n_trees = 10;
    auto r = train_regressor(spec, d);
    TableAxes small = default_table_axes();
    for (auto& a : small) {
        a.min = -1;
        a.max = 1;
        a.points = 4;
    }
    auto table = build_explicit_table([&](std::span<const double> x) { return r.predict(x); }, small, 0.05);
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto p = table.point(i);
        CHECK(table.values[i] == r.predict(p));
    }
    // last axis varies fastest
    CHECK(table.point(1)[4] == small[4].coord(1));
    CHECK(table.point(1)[3] == small[3].coord(0));
}

TEST_CASE("table memory budget") {
    const auto axes = default_table_axes();
    try {
        build_explicit_table(coordinate_sum, axes, 0.05, {}, 1000);
        FAIL("expected a budget error");
    } catch (const BudgetError& e) {
        CHECK(std::string(e.what()).find("9x15x7x7x9 = 59535") != std::string::npos);
    }
    const auto full = full_scale_table_axes();
    auto t = build_explicit_table(coordinate_sum, full, 0.05);
    CHECK(t.size() == 3888885);
    CHECK(t.values.back() == coordinate_sum(t.point(t.size() - 1)));
}

TEST_CASE("stage-one filter snaps to the nearest node") {
    auto t = build_explicit_table(coordinate_sum, default_table_axes(), 0.05);
    const auto& ax = t.axes;
    const auto s = filter_stage1(t, ax[2].coord(3), ax[3].coord(1), ax[4].coord(5));
    CHECK(s.values.size() == ax[1].points * ax[0].points);
    CHECK(s.p_load.size() == ax[1].points);
    for (std::size_t il = 0; il < ax[1].points; ++il) {
        for (std::size_t ib = 0; ib < ax[0].points; ++ib) {
            CHECK(s.row(il)[ib] == t.at({ib, il, 3, 1, 5}));
        }
    }

    // Queries straddling the midpoint between two u_batt nodes land on adjacent slices.
    const double mid = 0.5 * (ax[2].coord(2) + ax[2].coord(3));
    const auto below = filter_stage1(t, mid - 1e-6, ax[3].coord(0), ax[4].coord(0));
    const auto above = filter_stage1(t, mid + 1e-6, ax[3].coord(0), ax[4].coord(0));
    CHECK(below.snapped[0] == 2);
    CHECK(above.snapped[0] == 3);
    CHECK(below.values != above.values);

    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const double u = rng.uniform(ax[2].min, ax[2].max);
        std::size_t brute = 0;
        for (std::size_t k = 1; k < ax[2].points; ++k) {
            if (std::abs(u - ax[2].coord(k)) < std::abs(u - ax[2].coord(brute))) brute = k;
        }
        CHECK(filter_stage1(t, u, ax[3].min, ax[4].min).snapped[0] == brute);
    }

    try {
        filter_stage1(t, ax[2].max + 1, ax[3].min, ax[4].min);
        FAIL("expected a range error");
    } catch (const RangeError& e) {
        CHECK(e.axis() == "u_batt");
    }
    CHECK_THROWS_AS(filter_stage1(t, ax[2].min, ax[3].min, -1.0), RangeError);
}

TEST_CASE("stage-two filter returns the nearest p_load row") {
    auto t = build_explicit_table(coordinate_sum, default_table_axes(), 0.05);
    const auto s = filter_stage1(t, 350, 0.5, 20000);
    const auto exact = filter_stage2(s, s.p_load[4]);
    CHECK(exact.p_load_index == 4);
    CHECK(exact.delta_soc.size() == t.axes[0].points);
    CHECK(std::equal(exact.delta_soc.begin(), exact.delta_soc.end(), s.row(4).begin()));

    Rng rng(8);
    for (int i = 0; i < 200; ++i) {
        const double pl = rng.uniform(s.p_load.front(), s.p_load.back());
        std::size_t brute = 0;
        for (std::size_t k = 0; k < s.p_load.size(); ++k) {
            if (std::abs(pl - s.p_load[k]) < std::abs(pl - s.p_load[brute])) brute = k;
        }
        CHECK(filter_stage2(s, pl).p_load_index == brute);
    }
    try {
        filter_stage2(s, -1.0);
        FAIL("expected a range error");
    } catch (const RangeError& e) {
        CHECK(e.axis() == "p_load");
    }
}

TEST_CASE("table persistence is lossless") {
    TableAxes axes = default_table_axes();
    for (auto& a : axes) a.points = 3;
    auto t = build_explicit_table([](std::span<const double> x) { return std::sin(x[0]) * 1e-5 / 3.0 + x[2]; },
                                  axes, 0.05, {{"note", "synthetic"}});
    const auto bin = scratch("table.bin");
    save_table(bin, t);
    const auto back = load_table(bin);
    CHECK(back.values == t.values);
    CHECK(back.provenance["note"] == "synthetic");
    CHECK(back.sample_dt == t.sample_dt);

    const auto csvp = scratch("table.csv");
    export_table_csv(csvp, t);
    const auto fromcsv = import_table_csv(csvp, axes, 0.05);
    CHECK(fromcsv.values == t.values);

    {
        std::ofstream f(bin, std::ios::binary | std::ios::trunc);
        f << "FCEVTBL1garbage";
    }
    CHECK_THROWS_AS(load_table(bin), ParseError);
}

TEST_CASE("degree-7 fit recovers an exact polynomial") {
    const std::vector<double> a{2e-4, -3e-9, 1e-13, 4e-18, -2e-22, 3e-27, 1e-31, -5e-36};
    auto eval = [&](double x) {
        double s = 0;
        for (std::size_t j = a.size(); j-- > 0;) s = s * x + a[j];
        return s;
    };
    std::vector<double> xs, ys;
    for (int i = 0; i <= 20; ++i) {
        xs.push_back(-40000 + 85000.0 * i / 20);
        ys.push_back(eval(xs.back()));
    }
    const auto p = fit_soc_polynomial(xs, ys);
    REQUIRE(p.coeffs.size() == 8);
    double scale = 0;
    for (double y : ys) scale = std::max(scale, std::abs(y));
    CHECK(p.fit_rmse < 1e-12 * scale);
    for (double x : xs) CHECK(std::abs(p(x) - eval(x)) < 1e-12 * scale);
    for (std::size_t j = 0; j < 8; ++j) CHECK(p.coeffs[j] == doctest::Approx(a[j]).epsilon(1e-6));
}

TEST_CASE("constant curve fits to its constant") {
    std::vector<double> xs, ys;
    for (int i = 0; i < 9; ++i) {
        xs.push_back(-40000 + 10625.0 * i);
        ys.push_back(-2.5e-4);
    }
    const auto p = fit_soc_polynomial(xs, ys);
    CHECK(p.coeffs[0] == doctest::Approx(-2.5e-4).epsilon(1e-10));
    for (std::size_t j = 1; j < 8; ++j) CHECK(std::abs(p.coeffs[j] * std::pow(45000.0, double(j))) < 1e-15);
}

TEST_CASE("polynomial tracks the SOC rate curve of the pack") {
    const auto batt = powertrain::default_battery();
    std::vector<double> xs, ys;
    const double soc = 0.58;
    for (int i = 0; i <= 16; ++i) {
        const double p = batt.p_charge_min + (batt.p_discharge_max - batt.p_charge_min) * i / 16.0;
        xs.push_back(p);
        // SOC rate from the closed form, with SOC-dependent charge/discharge resistance.
        const double u = batt.ocv(soc), r = batt.resistance(soc, p);
        ys.push_back(-(u - std::sqrt(u * u - 4 * r * p)) / (2 * r * batt.capacity_coulombs()));
    }
    const auto p7 = fit_polynomial(xs, ys, 7);
    const auto p1 = fit_polynomial(xs, ys, 1);
    const double range = *std::max_element(ys.begin(), ys.end()) - *std::min_element(ys.begin(), ys.end());
    CHECK(p7.fit_rmse < 0.01 * range);
    CHECK(p7.fit_rmse <= p1.fit_rmse);
}

TEST_CASE("polynomial domain and rank errors") {
    std::vector<double> xs{0, 1, 2, 3, 4, 5, 6, 6}, ys(8, 1.0);
    CHECK_THROWS_AS(fit_soc_polynomial(xs, ys), FitError);
    xs.back() = 7;
    const auto p = fit_soc_polynomial(xs, ys);
    CHECK(p(3.5) == doctest::Approx(1.0));
    CHECK_THROWS_AS(p(7.5), DomainError);
    CHECK_THROWS_AS(p(-0.1), DomainError);
}
