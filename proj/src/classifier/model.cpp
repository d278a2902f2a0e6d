#include "summrec/classifier/model.hpp"

#include <cmath>
#include <limits>

#include "summrec/common/binary.hpp"
#include "summrec/common/error.hpp"
#include "summrec/common/fs.hpp"
#include "summrec/common/hash.hpp"
#include "summrec/common/rng.hpp"

namespace summrec::classifier {

namespace {

constexpr std::string_view kCheckpointMagic = "SRECKPT";
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint64_t kInitStream = 0x1417;
constexpr std::uint64_t kShuffleStream = 0x5a0f;
constexpr std::uint64_t kBatchStream = 0xd40b;

std::size_t block_input(const HeadConfig& c, std::size_t b) { return b == 0 ? c.input_dim : c.hidden_dim; }
std::size_t final_input(const HeadConfig& c) { return c.blocks == 0 ? c.input_dim : c.hidden_dim; }

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

struct BlockCache {
    Eigen::VectorXd input;
    Eigen::VectorXd pre;   // W h + b
    Eigen::VectorXd xhat;  // normalized relu output
    double inv_std = 0.0;
    Eigen::VectorXd mask;  // ones in eval mode
};

struct Trace {
    std::vector<BlockCache> blocks;
    Eigen::VectorXd last;
    double logit = 0.0;
};

Eigen::VectorXd dropout_mask(std::size_t n, double p, std::uint64_t seed, std::size_t block) {
    Eigen::VectorXd mask = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    if (p <= 0.0) return mask;
    Rng rng(derive_seed(seed, block));
    const double scale = 1.0 / (1.0 - p);
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask[i] = rng.uniform() < p ? 0.0 : scale;
    return mask;
}

Trace run(const TensionModelParams& params, std::span<const double> x, ForwardMode mode) {
    const HeadConfig& c = params.config;
    require(x.size() == c.input_dim, "input dimension " + std::to_string(x.size()) + " != " +
                                         std::to_string(c.input_dim));
    Trace t;
    Eigen::VectorXd h = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
    t.blocks.reserve(c.blocks);
    for (std::size_t b = 0; b < c.blocks; ++b) {
        const Block& blk = params.weights.blocks[b];
        BlockCache bc;
        bc.input = h;
        bc.pre = blk.weight * h + blk.bias;
        const Eigen::VectorXd r = bc.pre.cwiseMax(0.0);
        const double mu = r.mean();
        const double var = (r.array() - mu).square().mean();
        bc.inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        bc.xhat = (r.array() - mu) * bc.inv_std;
        const Eigen::VectorXd y = blk.gain.cwiseProduct(bc.xhat) + blk.shift;
        bc.mask = mode.train ? dropout_mask(c.hidden_dim, c.dropout_p, mode.seed, b)
                             : Eigen::VectorXd::Ones(static_cast<Eigen::Index>(c.hidden_dim));
        h = y.cwiseProduct(bc.mask);
        t.blocks.push_back(std::move(bc));
    }
    t.logit = params.weights.out_weight.dot(h) + params.weights.out_bias;
    t.last = std::move(h);
    return t;
}

// d(loss)/d(logit) for one item.
double loss_slope(double z, int y, double w) {
    const double s = sigmoid(z);
    return y == 1 ? w * (s - 1.0) : s;
}

HeadWeights zero_like(const TensionModelParams& params) {
    return TensionModelParams::zeros(params.config).weights;
}

template <typename F>
void for_each_array(HeadWeights& w, F&& f) {
    for (auto& b : w.blocks) {
        f(b.weight.data(), b.weight.size());
        f(b.bias.data(), b.bias.size());
        f(b.gain.data(), b.gain.size());
        f(b.shift.data(), b.shift.size());
    }
    f(w.out_weight.data(), w.out_weight.size());
    f(&w.out_bias, Eigen::Index{1});
}

}  // namespace

void HeadConfig::validate() const {
    require(input_dim >= 1, "input_dim must be positive");
    require(hidden_dim >= 1, "hidden_dim must be positive");
    require(dropout_p >= 0.0 && dropout_p < 1.0, "dropout_p must be in [0, 1)");
    require(pos_weight > 0.0, "pos_weight must be positive");
    require(learning_rate > 0.0, "learning_rate must be positive");
    require(weight_decay >= 0.0, "weight_decay must be non-negative");
    require(epochs >= 0, "epochs must be non-negative");
    require(threshold > 0.0 && threshold < 1.0, "threshold must be in (0, 1)");
}

std::size_t HeadWeights::size() const {
    std::size_t n = 1 + static_cast<std::size_t>(out_weight.size());
    for (const auto& b : blocks) {
        n += static_cast<std::size_t>(b.weight.size() + b.bias.size() + b.gain.size() + b.shift.size());
    }
    return n;
}

Eigen::VectorXd HeadWeights::flatten() const {
    Eigen::VectorXd flat(static_cast<Eigen::Index>(size()));
    Eigen::Index pos = 0;
    HeadWeights& self = const_cast<HeadWeights&>(*this);
    for_each_array(self, [&](double* p, Eigen::Index n) {
        flat.segment(pos, n) = Eigen::Map<Eigen::VectorXd>(p, n);
        pos += n;
    });
    return flat;
}

void HeadWeights::assign(const Eigen::VectorXd& flat) {
    require(static_cast<std::size_t>(flat.size()) == size(), "flat parameter vector has the wrong length");
    Eigen::Index pos = 0;
    for_each_array(*this, [&](double* p, Eigen::Index n) {
        Eigen::Map<Eigen::VectorXd>(p, n) = flat.segment(pos, n);
        pos += n;
    });
}

bool HeadWeights::all_finite() const { return flatten().allFinite(); }

bool operator==(const HeadWeights& a, const HeadWeights& b) {
    if (a.blocks.size() != b.blocks.size() || a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
        const auto& x = a.blocks[i];
        const auto& y = b.blocks[i];
        if (x.weight.rows() != y.weight.rows() || x.weight.cols() != y.weight.cols()) return false;
    }
    return a.flatten() == b.flatten();
}

TensionModelParams TensionModelParams::zeros(const HeadConfig& config) {
    TensionModelParams p;
    p.config = config;
    const auto h = static_cast<Eigen::Index>(config.hidden_dim);
    for (std::size_t b = 0; b < config.blocks; ++b) {
        const auto in = static_cast<Eigen::Index>(block_input(config, b));
        p.weights.blocks.push_back(
            {Eigen::MatrixXd::Zero(h, in), Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h), Eigen::VectorXd::Zero(h)});
    }
    p.weights.out_weight = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(final_input(config)));
    return p;
}

TensionModelParams TensionModelParams::initialize(const HeadConfig& config) {
    config.validate();
    TensionModelParams p = zeros(config);
    Rng rng(derive_seed(config.seed, kInitStream));
    for (std::size_t b = 0; b < config.blocks; ++b) {
        auto& blk = p.weights.blocks[b];
        const double limit = std::sqrt(6.0 / static_cast<double>(blk.weight.rows() + blk.weight.cols()));
        for (Eigen::Index j = 0; j < blk.weight.cols(); ++j) {
            for (Eigen::Index i = 0; i < blk.weight.rows(); ++i) blk.weight(i, j) = rng.uniform(-limit, limit);
        }
        blk.gain.setOnes();
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(p.weights.out_weight.size() + 1));
    for (Eigen::Index i = 0; i < p.weights.out_weight.size(); ++i) p.weights.out_weight[i] = rng.uniform(-limit, limit);
    return p;
}

void TensionModelParams::check_shapes() const {
    const HeadConfig& c = config;
    require(weights.blocks.size() == c.blocks, "block count does not match config");
    const auto h = static_cast<Eigen::Index>(c.hidden_dim);
    for (std::size_t b = 0; b < c.blocks; ++b) {
        const auto& blk = weights.blocks[b];
        require(blk.weight.rows() == h && blk.weight.cols() == static_cast<Eigen::Index>(block_input(c, b)) &&
                    blk.bias.size() == h && blk.gain.size() == h && blk.shift.size() == h,
                "block " + std::to_string(b) + " shape does not match config");
    }
    require(weights.out_weight.size() == static_cast<Eigen::Index>(final_input(c)),
            "output layer shape does not match config");
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double weighted_bce_loss(double logit, int label, double pos_weight) {
    require(pos_weight > 0.0, "pos_weight must be positive");
    // -ln s(z) = softplus(-z), -ln(1 - s(z)) = softplus(z)
    return label == 1 ? pos_weight * softplus(-logit) : softplus(logit);
}

double forward(const TensionModelParams& params, std::span<const double> x, ForwardMode mode) {
    return run(params, x, mode).logit;
}

double forward(const TensionModelParams& params, const embed::EmbeddingVector& x, ForwardMode mode) {
    return forward(params, std::span<const double>(x.values), mode);
}

double relu_margin(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode) {
    double margin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ForwardMode m = mode.train ? ForwardMode::training(derive_seed(mode.seed, i)) : mode;
        for (const auto& bc : run(params, batch[i].embedding.values, m).blocks) {
            margin = std::min(margin, bc.pre.cwiseAbs().minCoeff());
        }
    }
    return margin;
}

double batch_loss(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode) {
    require(!batch.empty(), "batch is empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ForwardMode m = mode.train ? ForwardMode::training(derive_seed(mode.seed, i)) : mode;
        sum += weighted_bce_loss(forward(params, batch[i].embedding, m), batch[i].label, params.config.pos_weight);
    }
    return sum / static_cast<double>(batch.size());
}

BatchResult backward(const TensionModelParams& params, std::span<const LabelledItem> batch, ForwardMode mode) {
    require(!batch.empty(), "batch is empty");
    const HeadConfig& c = params.config;
    const double scale = 1.0 / static_cast<double>(batch.size());
    BatchResult out;
    out.gradient = zero_like(params);
    HeadWeights& g = out.gradient;
    double loss = 0.0;

    for (std::size_t i = 0; i < batch.size(); ++i) {
        const ForwardMode m = mode.train ? ForwardMode::training(derive_seed(mode.seed, i)) : mode;
        const Trace t = run(params, batch[i].embedding.values, m);
        loss += weighted_bce_loss(t.logit, batch[i].label, c.pos_weight);

        const double dz = loss_slope(t.logit, batch[i].label, c.pos_weight) * scale;
        g.out_weight += dz * t.last;
        g.out_bias += dz;
        Eigen::VectorXd dh = dz * params.weights.out_weight;

        for (std::size_t b = c.blocks; b-- > 0;) {
            const Block& blk = params.weights.blocks[b];
            const BlockCache& bc = t.blocks[b];
            Block& gb = g.blocks[b];
            const Eigen::VectorXd dy = dh.cwiseProduct(bc.mask);
            gb.gain += dy.cwiseProduct(bc.xhat);
            gb.shift += dy;
            const Eigen::VectorXd dxhat = dy.cwiseProduct(blk.gain);
            const double mean_dxhat = dxhat.mean();
            const double mean_dxhat_xhat = dxhat.cwiseProduct(bc.xhat).mean();
            const Eigen::VectorXd dr =
                bc.inv_std * (dxhat.array() - mean_dxhat - bc.xhat.array() * mean_dxhat_xhat).matrix();
            const Eigen::VectorXd da = (bc.pre.array() > 0.0).select(dr, 0.0);
            gb.weight.noalias() += da * bc.input.transpose();
            gb.bias += da;
            if (b > 0) dh = blk.weight.transpose() * da;
        }
    }
    out.loss = loss * scale;
    return out;
}

Metrics Metrics::from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    Metrics m{tp, fp, fn, tn};
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const std::size_t total = tp + fp + fn + tn;
    m.accuracy = total > 0 ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
    return m;
}

Metrics evaluate(const TensionModelParams& params, const LabelledDataset& dataset, double threshold) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& item : dataset) {
        const bool predicted = sigmoid(forward(params, item.embedding)) >= threshold;
        if (predicted) {
            item.label == 1 ? ++tp : ++fp;
        } else {
            item.label == 1 ? ++fn : ++tn;
        }
    }
    return Metrics::from_counts(tp, fp, fn, tn);
}

TrainResult train(const LabelledDataset& dataset, const HeadConfig& config,
                  const std::optional<TensionModelParams>& init) {
    config.validate();
    require(!dataset.empty(), "training set is empty");
    validate_dataset(dataset);
    require(dataset.front().embedding.dimension() == config.input_dim, "embedding dimension does not match input_dim");

    TrainResult result;
    if (init) {
        result.params.config = config;
        result.params.weights = init->weights;
        result.params.check_shapes();
    } else {
        result.params = TensionModelParams::initialize(config);
    }
    TensionModelParams& params = result.params;

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Eigen::VectorXd theta = params.weights.flatten();
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(theta.size());
    Eigen::VectorXd m2 = Eigen::VectorXd::Zero(theta.size());
    double b1t = 1.0, b2t = 1.0;

    std::vector<LabelledItem> batch;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(dataset.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffler(derive_seed(config.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
        shuffler.shuffle(order);

        double loss_sum = 0.0;
        for (std::size_t start = 0, j = 0; start < order.size(); start += kBatchSize, ++j) {
            batch.clear();
            for (std::size_t i = start; i < std::min(order.size(), start + kBatchSize); ++i) {
                batch.push_back(dataset[order[i]]);
            }
            const std::uint64_t batch_seed =
                derive_seed(config.seed, kBatchStream, (static_cast<std::uint64_t>(epoch) << 32) | j);
            const BatchResult br = backward(params, batch, ForwardMode::training(batch_seed));
            if (!std::isfinite(br.loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                                    std::to_string(j + 1));
            }
            loss_sum += br.loss * static_cast<double>(batch.size());

            const Eigen::VectorXd grad = br.gradient.flatten();
            b1t *= beta1;
            b2t *= beta2;
            m1 = beta1 * m1 + (1.0 - beta1) * grad;
            m2 = beta2 * m2 + (1.0 - beta2) * grad.cwiseProduct(grad);
            const Eigen::ArrayXd step = (m1.array() / (1.0 - b1t)) / ((m2.array() / (1.0 - b2t)).sqrt() + eps);
            theta.array() -= config.learning_rate * (step + config.weight_decay * theta.array());
            params.weights.assign(theta);
        }
        if (!theta.allFinite()) {
            throw TrainingError("parameters diverged at epoch " + std::to_string(epoch + 1));
        }
        result.history.push_back({epoch + 1, loss_sum / static_cast<double>(dataset.size()),
                                  evaluate(params, dataset, config.threshold)});
    }
    return result;
}

std::string serialize_checkpoint(const TensionModelParams& params) {
    params.check_shapes();
    const HeadConfig& c = params.config;
    BinaryWriter w;
    w.magic(kCheckpointMagic);
    w.u32(kCheckpointVersion);
    w.u64(c.input_dim);
    w.u64(c.blocks);
    w.u64(c.hidden_dim);
    w.f64(c.dropout_p);
    w.f64(c.pos_weight);
    w.f64(c.learning_rate);
    w.f64(c.weight_decay);
    w.u64(static_cast<std::uint64_t>(c.epochs));
    w.u64(c.seed);
    w.f64(c.threshold);
    const Eigen::VectorXd flat = params.weights.flatten();
    w.f64s(std::span<const double>(flat.data(), static_cast<std::size_t>(flat.size())));
    return seal_with_checksum(w);
}

TensionModelParams deserialize_checkpoint(std::string_view data, const std::string& context) {
    BinaryReader r(verify_checksum(data, context), context);
    r.expect_magic(kCheckpointMagic);
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw VersionError(context + ": checkpoint version " + std::to_string(version) + " is not supported");
    }
    HeadConfig c;
    c.input_dim = r.u64();
    c.blocks = r.u64();
    c.hidden_dim = r.u64();
    c.dropout_p = r.f64();
    c.pos_weight = r.f64();
    c.learning_rate = r.f64();
    c.weight_decay = r.f64();
    c.epochs = static_cast<int>(r.u64());
    c.seed = r.u64();
    c.threshold = r.f64();
    if (c.blocks > 64 || c.input_dim > (1u << 20) || c.hidden_dim > (1u << 16)) r.fail("implausible shape");
    try {
        c.validate();
    } catch (const PreconditionError& e) {
        r.fail(e.what());
    }
    const std::vector<double> flat = r.f64s();
    if (!r.done()) r.fail("trailing bytes");
    TensionModelParams p = TensionModelParams::zeros(c);
    if (flat.size() != p.weights.size()) r.fail("parameter count does not match config");
    p.weights.assign(Eigen::Map<const Eigen::VectorXd>(flat.data(), static_cast<Eigen::Index>(flat.size())));
    if (!p.weights.all_finite()) r.fail("non-finite parameter");
    return p;
}

void save_checkpoint(const TensionModelParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_checkpoint(params));
}

TensionModelParams load_checkpoint(const std::filesystem::path& path) {
    return deserialize_checkpoint(read_file(path), path.string());
}

}  // namespace summrec::classifier
