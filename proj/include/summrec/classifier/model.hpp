#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "summrec/classifier/dataset.hpp"
#include "summrec/embed/vector.hpp"

namespace summrec::classifier {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr std::size_t kBatchSize = 32;

struct HeadConfig {
    std::size_t input_dim = 512;
    std::size_t blocks = 1;
    std::size_t hidden_dim = 256;
    double dropout_p = 0.4;
    double pos_weight = 2.0;
    double learning_rate = 5e-4;
    double weight_decay = 1e-4;
    int epochs = 10;
    std::uint64_t seed = 0;
    double threshold = 0.5;

    void validate() const;

    friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

struct Block {
    Eigen::MatrixXd weight;  // hidden x in
    Eigen::VectorXd bias;
    Eigen::VectorXd gain;  // layer norm
    Eigen::VectorXd shift;
};

// Trainable arrays. Gradients use the same layout.
struct HeadWeights {
    std::vector<Block> blocks;
    Eigen::VectorXd out_weight;
    double out_bias = 0.0;

    std::size_t size() const;
    Eigen::VectorXd flatten() const;
    void assign(const Eigen::VectorXd& flat);
    bool all_finite() const;
};

bool operator==(const HeadWeights& a, const HeadWeights& b);

struct TensionModelParams {
    HeadConfig config;
    HeadWeights weights;

    // All-zero arrays shaped by config; layer-norm gains are also zero.
    static TensionModelParams zeros(const HeadConfig& config);
    // Xavier-uniform linear weights, zero biases, unit gains.
    static TensionModelParams initialize(const HeadConfig& config);

    void check_shapes() const;

    friend bool operator==(const TensionModelParams& a, const TensionModelParams& b) {
        return a.config == b.config && a.weights == b.weights;
    }
};

// Eval is deterministic. Train drops hidden units with masks drawn from `seed`.
struct ForwardMode {
    bool train = false;
    std::uint64_t seed = 0;

    static ForwardMode eval() { return {}; }
    static ForwardMode training(std::uint64_t seed) { return {true, seed}; }
};

double forward(const TensionModelParams& params, std::span<const double> x, ForwardMode mode = ForwardMode::eval());
double forward(const TensionModelParams& params, const embed::EmbeddingVector& x,
               ForwardMode mode = ForwardMode::eval());

double sigmoid(double z);

// -[w*y*ln s(z) + (1-y)*ln(1-s(z))] in softplus form.
double weighted_bce_loss(double logit, int label, double pos_weight);

struct BatchResult {
    double loss = 0.0;  // mean over the batch
    HeadWeights gradient;
};

// Mean loss and its exact gradient over `batch`. In train mode item i uses
// dropout seed derive_seed(mode.seed, i).
BatchResult backward(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode);

// Mean loss only, same masks as backward.
double batch_loss(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode);

// Smallest |pre-activation| entering any ReLU over the batch, with the same
// masks as backward. Infinity when the head has no blocks.
double relu_margin(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode);

struct Metrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double precision = 0.0, recall = 0.0, accuracy = 0.0;

    static Metrics from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

    friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics evaluate(const TensionModelParams& params, const LabelledDataset& dataset, double threshold);

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0.0;
    Metrics train_metrics;
};

struct TrainResult {
    TensionModelParams params;
    std::vector<EpochRecord> history;
};

// Mini-batch AdamW. Batch order and dropout masks derive from config.seed.
// Throws TrainingError on a non-finite loss.
TrainResult train(const LabelledDataset& dataset, const HeadConfig& config,
                  const std::optional<TensionModelParams>& init = std::nullopt);

std::string serialize_checkpoint(const TensionModelParams& params);
TensionModelParams deserialize_checkpoint(std::string_view data, const std::string& context = "checkpoint");
void save_checkpoint(const TensionModelParams& params, const std::filesystem::path& path);
TensionModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace summrec::classifier
