#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fpv/dataset.hpp"
#include "fpv/gcn.hpp"

namespace fpv {

struct TrainConfig {
    double lr = 0.01;
    int batch_size = 1024;
    int epochs = 2000;
    int checkpoint_interval = 50;
    int hidden_dim = 64;
    int num_layers = 3;
    std::string pooling = "mean";
    std::uint64_t seed = 42;

    static TrainConfig from_json(const std::string& text);
    std::string to_json() const;
};

struct AdamState {
    std::vector<Tensor> m;
    std::vector<Tensor> v;
    long step = 0;

    static AdamState like(const GcnModel& model);
};

/// Everything needed to resume training bit-exactly or to score graphs:
/// model parameters, optimizer state, the shuffle RNG, and the training-fold
/// feature/target scalers.
struct Checkpoint {
    int epoch = 0;
    GcnModel model;
    AdamState adam;
    std::string shuffle_rng;  // serialized mt19937_64
    Scaler x_scaler;
    double y_mean = 0.0;
    double y_sd = 1.0;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);
};

struct EpochLog {
    int epoch = 0;
    double train_rmse_yen = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> log;
    Checkpoint final;
};

/// Trains the joint model on the whole dataset. Inputs are z-scored with
/// dataset statistics and the target is standardized for optimization; the
/// logged RMSE is converted back to Yen. on_checkpoint fires at every
/// checkpoint_interval epochs (and at the final epoch).
/// Throws TrainingDiverged on non-finite loss.
TrainResult train(const Dataset& ds, const TrainConfig& cfg,
                  const std::function<void(const Checkpoint&)>& on_checkpoint = nullptr);

/// Continues a run from a checkpoint up to cfg.epochs, reproducing the
/// uninterrupted run exactly (same dataset order and config required).
TrainResult resume(const Checkpoint& from, const Dataset& ds, const TrainConfig& cfg,
                   const std::function<void(const Checkpoint&)>& on_checkpoint = nullptr);

}  // namespace fpv
