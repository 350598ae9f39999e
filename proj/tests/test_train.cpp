#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gih/data.hpp"
#include "gih/linalg.hpp"
#include "gih/parallel.hpp"
#include "gih/sampling.hpp"
#include "gih/train.hpp"

using namespace gih;
using namespace gih::train;

namespace {

data::Dataset separable(int dim, std::size_t m, uint64_t seed) {
    // Linearly separable with margin along the first axis.
    SeededRng rng(seed);
    data::Dataset ds;
    ds.x = Matrix(m, dim);
    ds.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        double y = i % 2 == 0 ? 1.0 : -1.0;
        ds.x(i, 0) = y * (1.0 + rng.next_double());
        for (int j = 1; j < dim; ++j) ds.x(i, j) = 0.3 * rng.next_gaussian();
        ds.y[i] = y;
    }
    ds.meta.shape = nn::Shape::flat(dim);
    return ds;
}

}  // namespace

TEST_CASE("train: overparameterized mlp interpolates separable data") {
    data::Dataset ds = separable(8, 32, 1);
    nn::ModelSpec spec = nn::make_mlp(8, {256});
    OptimizerConfig opt;
    opt.lr = 0.1;
    opt.momentum = 0.0;
    opt.batch_size = 0;
    opt.epochs = 200;
    opt.loss = Loss::SSE;
    Trajectory traj = train::train(spec, ds, opt, {0, 200}, 2);
    CHECK(traj.metrics.back().train_acc == doctest::Approx(1.0));
    CHECK(traj.snapshots.count(0) == 1);
    CHECK(traj.snapshots.count(200) == 1);
}

TEST_CASE("train: bitwise deterministic") {
    data::Dataset ds = separable(6, 24, 3);
    nn::ModelSpec spec = nn::make_mlp(6, {16});
    OptimizerConfig opt;
    opt.lr = 0.05;
    opt.momentum = 0.9;
    opt.batch_size = 8;
    opt.epochs = 20;
    opt.loss = Loss::BCE;
    Trajectory a = train::train(spec, ds, opt, {20}, 7);
    Trajectory b = train::train(spec, ds, opt, {20}, 7);
    CHECK(a.snapshots.at(20).v == b.snapshots.at(20).v);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t i = 0; i < a.metrics.size(); ++i)
        CHECK(a.metrics[i].loss == b.metrics[i].loss);
}

TEST_CASE("train: small-step full-batch SSE loss is non-increasing on a smooth model") {
    data::Dataset ds = separable(6, 32, 5);
    nn::ModelSpec spec = nn::make_mlp(6, {24}, true);  // gelu
    OptimizerConfig opt;
    opt.lr = 1e-3;
    opt.momentum = 0.0;
    opt.batch_size = 0;
    opt.epochs = 50;
    opt.loss = Loss::SSE;
    Trajectory traj = train::train(spec, ds, opt, {}, 9);
    for (std::size_t i = 1; i < traj.metrics.size(); ++i)
        CHECK(traj.metrics[i].loss <= traj.metrics[i - 1].loss + 1e-12);
}

TEST_CASE("train: zero momentum equals a plain SGD recurrence") {
    data::Dataset ds = separable(5, 16, 11);
    nn::ModelSpec spec = nn::make_mlp(5, {12});
    nn::Network net(spec);

    OptimizerConfig opt;
    opt.lr = 0.02;
    opt.momentum = 0.0;
    opt.batch_size = 0;
    opt.epochs = 25;
    opt.loss = Loss::SSE;
    Trajectory traj = train::train(spec, ds, opt, {25}, 13);

    // Plain SGD replay: theta <- theta - lr * mean-batch-gradient.
    SeededRng root(13);
    nn::Params p = net.init_params(root.derive(0));
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 1; epoch <= 25; ++epoch) {
        std::vector<double> g = batch_gradient(net, p, ds, order, 0, order.size(), Loss::SSE);
        for (std::size_t j = 0; j < p.v.size(); ++j) p.v[j] -= opt.lr * g[j];
    }
    const auto& trained = traj.snapshots.at(25).v;
    for (std::size_t j = 0; j < p.v.size(); ++j)
        CHECK(std::abs(trained[j] - p.v[j]) <= 1e-14 * std::max(1.0, std::abs(p.v[j])));
}

TEST_CASE("train: full-batch gradient is the mean of per-sample gradients") {
    data::Dataset ds = separable(5, 10, 15);
    nn::ModelSpec spec = nn::make_mlp(5, {8});
    nn::Network net(spec);
    nn::Params p = net.init_params(SeededRng(17));
    std::vector<std::size_t> order(ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<double> full = batch_gradient(net, p, ds, order, 0, ds.size(), Loss::SSE);
    std::vector<double> mean(full.size(), 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        std::vector<double> gi = batch_gradient(net, p, ds, order, i, i + 1, Loss::SSE);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += gi[j] / double(ds.size());
    }
    for (std::size_t j = 0; j < full.size(); ++j) CHECK(std::abs(full[j] - mean[j]) <= 1e-12);
}

TEST_CASE("train: divergence raises with the epoch") {
    data::Dataset ds = separable(4, 16, 19);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.x(i, 0) *= 100.0;
    nn::ModelSpec spec = nn::make_mlp(4, {32});
    spec.hidden_std = 2.0;
    spec.final_std = 2.0;
    OptimizerConfig opt;
    opt.lr = 10.0;
    opt.batch_size = 0;
    opt.epochs = 200;
    opt.loss = Loss::SSE;
    bool thrown = false;
    try {
        train::train(spec, ds, opt, {}, 21);
    } catch (const DivergenceError& e) {
        thrown = true;
        CHECK(e.epoch >= 1);
    }
    CHECK(thrown);
}

TEST_CASE("evaluate: sign conventions") {
    nn::ModelSpec spec;
    spec.input = nn::Shape::flat(2);
    spec.layers.push_back(nn::Layer::dense(1));
    nn::Params perfect;
    perfect.v = {1.0, 0.0};

    data::Dataset ds;
    ds.x = Matrix(4, 2);
    ds.x(0, 0) = 1;
    ds.x(1, 0) = -2;
    ds.x(2, 0) = 3;
    ds.x(3, 0) = -4;
    ds.y = {1, -1, 1, -1};
    CHECK(evaluate(spec, perfect, ds) == doctest::Approx(1.0));

    nn::Params negated;
    negated.v = {-1.0, 0.0};
    CHECK(evaluate(spec, negated, ds) == doctest::Approx(0.0));

    nn::Params zero;
    zero.v = {0.0, 0.0};  // logit 0 counts as +1
    CHECK(evaluate(spec, zero, ds) == doctest::Approx(0.5));
}

TEST_CASE("weight decay shrinks parameters on a idle objective") {
    // Zero targets + SSE on zero inputs leaves only the decay term.
    data::Dataset ds;
    ds.x = Matrix(4, 3);
    ds.y = {1, -1, 1, -1};
    ds.meta.shape = nn::Shape::flat(3);
    nn::ModelSpec spec;
    spec.input = nn::Shape::flat(3);
    spec.layers.push_back(nn::Layer::dense(1));
    OptimizerConfig opt;
    opt.lr = 0.1;
    opt.weight_decay = 0.5;
    opt.batch_size = 0;
    opt.epochs = 10;
    opt.loss = Loss::SSE;
    Trajectory traj = train::train(spec, ds, opt, {0, 10}, 23);
    double n0 = norm2(traj.snapshots.at(0).v);
    double n1 = norm2(traj.snapshots.at(10).v);
    CHECK(n1 < n0 * std::pow(0.96, 10));
}

TEST_CASE("trajectory_geometry: snapshot count and t=0 consistency") {
    data::Dataset ds = separable(6, 24, 25);
    nn::ModelSpec spec = nn::make_mlp(6, {12});
    OptimizerConfig opt;
    opt.lr = 0.05;
    opt.momentum = 0.9;
    opt.batch_size = 8;
    opt.epochs = 6;
    opt.loss = Loss::BCE;
    geom::ProbingSpec probing = geom::ProbingSpec::isotropic(1.0, 4);

    auto tg = trajectory_geometry(spec, ds, opt, 5, {0, 3, 6}, probing, 99);
    REQUIRE(tg.snapshots.size() == 3);
    CHECK(tg.snapshots[0].t == 0);
    CHECK(tg.snapshots[2].t == 6);
    CHECK(tg.runs.size() == 5);

    // The t=0 snapshot equals the ensemble estimate over the collected inits.
    std::vector<nn::Params> inits;
    for (const auto& run : tg.runs) inits.push_back(run.snapshots.at(0));
    auto direct = geom::estimate_avg_geometry(
        spec, geom::ParamSource::from_ensemble(inits, probe_seed_for_epoch(99, 0)), probing);
    double diff = (direct.g - tg.snapshots[0].g).frobenius_norm();
    CHECK(diff <= 1e-12);
}

TEST_CASE("trajectory_geometry: worker-count independent") {
    data::Dataset ds = separable(5, 16, 27);
    nn::ModelSpec spec = nn::make_mlp(5, {8});
    OptimizerConfig opt;
    opt.lr = 0.05;
    opt.batch_size = 4;
    opt.epochs = 3;
    opt.loss = Loss::SSE;
    geom::ProbingSpec probing = geom::ProbingSpec::isotropic(1.0, 2);

    set_thread_count(1);
    auto a = trajectory_geometry(spec, ds, opt, 4, {0, 3}, probing, 31);
    set_thread_count(3);
    auto b = trajectory_geometry(spec, ds, opt, 4, {0, 3}, probing, 31);
    set_thread_count(0);
    for (std::size_t i = 0; i < a.snapshots.size(); ++i)
        CHECK(a.snapshots[i].g.data() == b.snapshots[i].g.data());
}

TEST_CASE("trajectory persistence") {
    data::Dataset ds = separable(4, 12, 29);
    nn::ModelSpec spec = nn::make_mlp(4, {6});
    OptimizerConfig opt;
    opt.lr = 0.05;
    opt.epochs = 2;
    opt.loss = Loss::SSE;
    Trajectory traj = train::train(spec, ds, opt, {0, 2}, 33);
    auto dir = std::filesystem::temp_directory_path() / "gih_traj";
    save_trajectory(traj, dir);
    CHECK(std::filesystem::exists(dir / "params_0.bin"));
    CHECK(std::filesystem::exists(dir / "params_2.bin"));
    CHECK(std::filesystem::exists(dir / "metrics.csv"));
}
