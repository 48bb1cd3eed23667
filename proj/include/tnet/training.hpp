#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tnet/network.hpp"
#include "tnet/synthgen.hpp"

namespace tnet {

enum class HeadMode { mixed, pose_only };
enum class Precision { f32, f64 };

std::string to_string(HeadMode m);
std::string to_string(Precision p);
HeadMode head_mode_from_string(const std::string& s);
Precision precision_from_string(const std::string& s);

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 64;
    int epochs = 50;
    double lambda = 1.0;        // pose-cost reweighing term
    int hardmine_period = 5;    // epochs between mining rounds
    double subset_fraction = 0.25;
    std::uint64_t seed = 1;
    Precision precision = Precision::f32;
    HeadMode head = HeadMode::mixed;
    double early_stop_acc = 0.0;  // stop once both-head accuracy reaches this; 0 disables

    void validate() const;
};

// Line-oriented "key = value" text; every field round-trips.
std::string serialize_train_config(const TrainConfig& cfg);
TrainConfig parse_train_config(const std::string& text);
TrainConfig load_train_config(const std::string& path);

// Raised when a batch produces a non-finite loss (learning rate too high).
struct TrainAbort : std::runtime_error {
    int epoch, batch;
    TrainAbort(int e, int b)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(e) + " batch " + std::to_string(b) +
                             "; lower the learning rate"),
          epoch(e), batch(b) {}
};

struct TrainResult {
    std::vector<double> loss_history;  // epoch-averaged
    int epochs_run = 0;
};

// Minibatch SGD with momentum over every trainable parameter; templates
// stay untouched. Deterministic for a fixed seed and worker count.
template <class Real>
TrainResult train(NetworkParamsT<Real>& params, const Dataset& data, const TrainConfig& cfg,
                  int workers = 1);

// Per-example mixed loss under the current params.
template <class Real>
std::vector<double> score_examples(const NetworkParamsT<Real>& params, const Dataset& pool, double lambda,
                                   HeadMode head, int workers = 1);

// Top-loss fraction of the pool: exactly ceil(fraction * |pool|) distinct
// indices, ordered by (loss desc, index asc).
template <class Real>
std::vector<int> hard_mine(const NetworkParamsT<Real>& params, const Dataset& pool, double fraction,
                           double lambda, HeadMode head, int workers = 1);

struct HeadAccuracy {
    double fg = 0.0, pose = 0.0;
    double worst() const { return fg < pose ? fg : pose; }
};

// Fraction of examples whose argmax matches the label, per head.
template <class Real>
HeadAccuracy dataset_accuracy(const NetworkParamsT<Real>& params, const Dataset& data, int workers = 1);

struct GradCheckLayer {
    std::string layer;
    int checked = 0;
    int excluded = 0;  // ReLU kink guard
    double max_rel_err = 0.0;
    std::string worst_coord;
    double worst_analytic = 0.0, worst_numeric = 0.0;
};

struct GradCheckReport {
    bool pass = false;
    double tolerance = 1e-5;
    std::vector<GradCheckLayer> layers;
    std::string to_string() const;
};

// Central finite differences (eps 1e-6) against the analytic backward on a
// double-precision network, sampled per layer; also checks the template
// derivative even though templates are never updated. `corrupt`, when set,
// tampers with the analytic gradients so tests can prove the harness fails.
GradCheckReport gradcheck(const NetConfig& cfg, int trials, std::uint64_t seed, double tolerance = 1e-5,
                          const std::function<void(ParamGradsT<double>&)>& corrupt = nullptr);

}  // namespace tnet
