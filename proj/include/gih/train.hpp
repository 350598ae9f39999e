#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <vector>

#include "gih/data.hpp"
#include "gih/geometry.hpp"
#include "gih/nn.hpp"

namespace gih::train {

enum class Loss { SSE, BCE };

struct OptimizerConfig {
    double lr = 0.1;
    double momentum = 0.0;       // classical: v <- mu v - lr g; theta <- theta + v
    std::size_t batch_size = 0;  // 0 = full batch
    int epochs = 1;
    double weight_decay = 0.0;
    Loss loss = Loss::SSE;

    void validate() const;
};

struct EpochMetrics {
    int epoch = 0;
    double train_acc = 0.0;
    double test_acc = -1.0;  // -1 when no test split was given
    double loss = 0.0;
};

struct Trajectory {
    std::map<int, nn::Params> snapshots;  // keyed by epoch; 0 = initialization
    std::vector<EpochMetrics> metrics;    // epoch 0 (pre-training) through `epochs`
    uint64_t seed = 0;
};

// Seeded SGD with classical momentum and optional L2 weight decay. Mini-batch
// order is reshuffled per epoch, deterministically from the seed. Throws
// DivergenceError (with the epoch) when the loss stops being finite.
Trajectory train(const nn::ModelSpec& spec, const data::Dataset& train_set,
                 const OptimizerConfig& opt, const std::vector<int>& snapshot_epochs,
                 uint64_t seed, const data::Dataset* test_set = nullptr);

// Fraction of samples with sign(logit) == y; a logit of exactly 0 counts +1.
double evaluate(const nn::Network& net, const nn::Params& p, const data::Dataset& ds);
double evaluate(const nn::ModelSpec& spec, const nn::Params& p, const data::Dataset& ds);

double mean_loss(const nn::Network& net, const nn::Params& p, const data::Dataset& ds, Loss loss);

// Mean gradient of the loss over [begin, end) of the index list.
std::vector<double> batch_gradient(const nn::Network& net, const nn::Params& p,
                                   const data::Dataset& ds, const std::vector<std::size_t>& order,
                                   std::size_t begin, std::size_t end, Loss loss);

struct TrajectoryGeometry {
    std::vector<geom::GeometrySnapshot> snapshots;  // one per snapshot epoch, ascending
    std::vector<Trajectory> runs;
};

// Trains n_runs independent runs (seeds derived from master_seed) and
// estimates the geometry at every snapshot epoch by averaging over all
// runs x probes. Deterministic and worker-count independent.
TrajectoryGeometry trajectory_geometry(const nn::ModelSpec& spec, const data::Dataset& ds,
                                       const OptimizerConfig& opt, std::size_t n_runs,
                                       const std::vector<int>& snapshot_epochs,
                                       const geom::ProbingSpec& probing, uint64_t master_seed,
                                       const data::Dataset* test_set = nullptr);

uint64_t probe_seed_for_epoch(uint64_t master_seed, int epoch);

// Directory layout: params_<epoch>.bin per snapshot + metrics.csv.
void save_trajectory(const Trajectory& t, const std::filesystem::path& dir);

}  // namespace gih::train
