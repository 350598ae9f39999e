#include "gih/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "gih/error.hpp"
#include "gih/parallel.hpp"
#include "gih/serialize.hpp"

namespace gih::train {

void OptimizerConfig::validate() const {
    if (lr <= 0.0) throw ConfigError("optimizer: lr must be positive");
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("optimizer: momentum in [0, 1)");
    if (epochs < 1) throw ConfigError("optimizer: epochs must be >= 1");
    if (weight_decay < 0.0) throw ConfigError("optimizer: negative weight decay");
}

namespace {

double loss_grad_wrt_logit(Loss loss, double logit, double y) {
    if (loss == Loss::SSE) return logit - y;
    // Logistic loss on the +-1 label: d/df log(1 + exp(-y f)).
    return -y / (1.0 + std::exp(y * logit));
}

double loss_value(Loss loss, double logit, double y) {
    if (loss == Loss::SSE) return 0.5 * (logit - y) * (logit - y);
    double z = y * logit;
    // log(1 + exp(-z)) computed stably.
    return z > 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
}

}  // namespace

double evaluate(const nn::Network& net, const nn::Params& p, const data::Dataset& ds) {
    std::size_t correct = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double logit = net.forward(p, ds.sample(i));
        double pred = logit >= 0.0 ? 1.0 : -1.0;
        if (pred == ds.y[i]) ++correct;
    }
    return double(correct) / double(ds.size());
}

double evaluate(const nn::ModelSpec& spec, const nn::Params& p, const data::Dataset& ds) {
    return evaluate(nn::Network(spec), p, ds);
}

double mean_loss(const nn::Network& net, const nn::Params& p, const data::Dataset& ds, Loss loss) {
    double s = 0.0;
    for (std::size_t i = 0; i < ds.size(); ++i)
        s += loss_value(loss, net.forward(p, ds.sample(i)), ds.y[i]);
    return s / double(ds.size());
}

std::vector<double> batch_gradient(const nn::Network& net, const nn::Params& p,
                                   const data::Dataset& ds, const std::vector<std::size_t>& order,
                                   std::size_t begin, std::size_t end, Loss loss) {
    std::vector<double> g(net.param_count(), 0.0);
    for (std::size_t k = begin; k < end; ++k) {
        std::size_t i = order[k];
        nn::GradResult r = net.evaluate(p, ds.sample(i), false, true);
        double c = loss_grad_wrt_logit(loss, r.logit, ds.y[i]);
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += c * r.param_grad[j];
    }
    double inv = 1.0 / double(end - begin);
    for (double& v : g) v *= inv;
    return g;
}

Trajectory train(const nn::ModelSpec& spec, const data::Dataset& train_set,
                 const OptimizerConfig& opt, const std::vector<int>& snapshot_epochs,
                 uint64_t seed, const data::Dataset* test_set) {
    opt.validate();
    train_set.validate();
    nn::Network net(spec);

    SeededRng root(seed);
    nn::Params params = net.init_params(root.derive(0));
    std::vector<double> velocity(net.param_count(), 0.0);

    auto want_snapshot = [&snapshot_epochs](int e) {
        return std::find(snapshot_epochs.begin(), snapshot_epochs.end(), e) !=
               snapshot_epochs.end();
    };

    Trajectory traj;
    traj.seed = seed;
    if (want_snapshot(0)) traj.snapshots[0] = params;

    auto record = [&](int epoch) {
        EpochMetrics m;
        m.epoch = epoch;
        m.train_acc = evaluate(net, params, train_set);
        m.loss = mean_loss(net, params, train_set, opt.loss);
        if (test_set) m.test_acc = evaluate(net, params, *test_set);
        if (!std::isfinite(m.loss)) throw DivergenceError(epoch, "training diverged");
        traj.metrics.push_back(m);
    };
    record(0);

    const std::size_t m = train_set.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::size_t batch = opt.batch_size == 0 ? m : std::min(opt.batch_size, m);

    for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
        SeededRng shuffle_rng = root.derive(1, epoch);
        for (std::size_t i = 0; i + 1 < m; ++i) {
            std::size_t j = i + shuffle_rng.next_below(m - i);
            std::swap(order[i], order[j]);
        }
        for (std::size_t start = 0; start < m; start += batch) {
            std::size_t stop = std::min(m, start + batch);
            std::vector<double> g = batch_gradient(net, params, train_set, order, start, stop,
                                                   opt.loss);
            for (std::size_t j = 0; j < g.size(); ++j) {
                if (opt.weight_decay > 0.0) g[j] += opt.weight_decay * params.v[j];
                velocity[j] = opt.momentum * velocity[j] - opt.lr * g[j];
                params.v[j] += velocity[j];
            }
        }
        record(epoch);
        if (want_snapshot(epoch)) traj.snapshots[epoch] = params;
    }
    return traj;
}

uint64_t probe_seed_for_epoch(uint64_t master_seed, int epoch) {
    return detail::mix64(detail::mix64(master_seed) ^
                         (detail::kGolden * (uint64_t(epoch) + 0x51)));
}

TrajectoryGeometry trajectory_geometry(const nn::ModelSpec& spec, const data::Dataset& ds,
                                       const OptimizerConfig& opt, std::size_t n_runs,
                                       const std::vector<int>& snapshot_epochs,
                                       const geom::ProbingSpec& probing, uint64_t master_seed,
                                       const data::Dataset* test_set) {
    if (n_runs < 1) throw ConfigError("trajectory_geometry: n_runs must be >= 1");
    SeededRng root(master_seed);

    TrajectoryGeometry out;
    out.runs.resize(n_runs);
    // Training parallelizes across runs; any divergence is rethrown after join.
    std::vector<std::exception_ptr> errors(n_runs);
    run_blocks(n_runs, 1, [&](std::size_t run, std::size_t, std::size_t) {
        try {
            out.runs[run] = train(spec, ds, opt, snapshot_epochs,
                                  root.derive(2, run).stream_id(), test_set);
        } catch (...) {
            errors[run] = std::current_exception();
        }
    });
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<int> epochs = snapshot_epochs;
    std::sort(epochs.begin(), epochs.end());
    epochs.erase(std::unique(epochs.begin(), epochs.end()), epochs.end());

    for (int t : epochs) {
        std::vector<nn::Params> ensemble;
        ensemble.reserve(n_runs);
        for (const Trajectory& run : out.runs) {
            auto it = run.snapshots.find(t);
            if (it == run.snapshots.end()) throw Error("missing snapshot epoch in trajectory");
            ensemble.push_back(it->second);
        }
        geom::GeometrySnapshot snap = geom::estimate_avg_geometry(
            spec, geom::ParamSource::from_ensemble(ensemble, probe_seed_for_epoch(master_seed, t)),
            probing);
        snap.t = t;
        out.snapshots.push_back(std::move(snap));
    }
    return out;
}

void save_trajectory(const Trajectory& t, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [epoch, params] : t.snapshots) {
        Matrix m(1, params.v.size());
        for (std::size_t i = 0; i < params.v.size(); ++i) m(0, i) = params.v[i];
        save_matrix_bin(m, dir / ("params_" + std::to_string(epoch) + ".bin"));
    }
    std::ofstream csv(dir / "metrics.csv");
    if (!csv) throw IoError("cannot write trajectory metrics");
    csv << "epoch,train_acc,test_acc,loss\n";
    for (const EpochMetrics& m : t.metrics)
        csv << m.epoch << ',' << format_double(m.train_acc) << ','
            << format_double(m.test_acc) << ',' << format_double(m.loss) << '\n';
}

}  // namespace gih::train
