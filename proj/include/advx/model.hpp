#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "advx/tensor.hpp"

namespace advx {

struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    friend bool operator==(const Dense&, const Dense&) = default;
};

struct ReLU {
    friend bool operator==(const ReLU&, const ReLU&) = default;
};

// Valid (unpadded) 2-D convolution over a [channels, height, width] input.
struct Conv2d {
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kernel = 0;
    std::size_t stride = 1;
    friend bool operator==(const Conv2d&, const Conv2d&) = default;
};

struct Flatten {
    friend bool operator==(const Flatten&, const Flatten&) = default;
};

// Non-overlapping pooling: stride equals window, trailing rows/columns dropped.
struct MaxPool2d {
    std::size_t window = 2;
    friend bool operator==(const MaxPool2d&, const MaxPool2d&) = default;
};

using Layer = std::variant<Dense, ReLU, Conv2d, Flatten, MaxPool2d>;

// Compact textual form used in config files and model headers, e.g.
// "dense:784:128", "conv:1:8:5:1", "maxpool:2", "relu", "flatten".
std::string to_string(const Layer& layer);
Layer parse_layer(std::string_view text);
std::vector<Layer> parse_layers(std::string_view comma_separated);

struct ModelSpec {
    Shape input_shape;
    std::size_t classes = 0;
    // Inputs arrive as [0, 255] pixels and are multiplied by this factor
    // before the first layer.
    double input_scale = 1.0 / 255.0;
    std::vector<Layer> layers;

    // Output shape of every layer, preceded by the input shape. Throws
    // InvalidArgument when consecutive layers are incompatible or the final
    // output is not [classes].
    std::vector<Shape> layer_shapes() const;
    std::vector<Shape> parameter_shapes() const;

    friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

// The four 28x28 desk-scale architectures.
ModelSpec mlp_a();
ModelSpec mlp_b();
ModelSpec cnn_a();
ModelSpec cnn_b();
ModelSpec architecture(std::string_view name);

struct TrainingRecord {
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double train_accuracy = 0.0;
    std::optional<double> test_accuracy;

    friend bool operator==(const TrainingRecord&, const TrainingRecord&) = default;
};

class TrainedModel {
public:
    TrainedModel(ModelSpec spec, std::vector<Tensor> parameters, TrainingRecord record = {});

    const ModelSpec& spec() const { return spec_; }
    const std::vector<Tensor>& parameters() const { return params_; }
    const TrainingRecord& record() const { return record_; }
    const std::vector<Shape>& layer_shapes() const { return shapes_; }

    TrainedModel with_record(TrainingRecord record) const;

private:
    ModelSpec spec_;
    std::vector<Tensor> params_;
    TrainingRecord record_;
    std::vector<Shape> shapes_;
};

struct LabeledExample {
    Tensor image;
    std::size_t label = 0;
};

// He-uniform weights, zero biases.
TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed);

Tensor forward(const TrainedModel& model, const Tensor& image);

// Index of the largest logit; ties go to the lowest index.
std::size_t argmax(const Tensor& logits);
std::size_t predict(const TrainedModel& model, const Tensor& image);

// Softmax cross-entropy, evaluated through log-sum-exp.
double loss(const Tensor& logits, std::size_t label);
// softmax(logits) - onehot(label)
Tensor loss_logit_gradient(const Tensor& logits, std::size_t label);

struct LossGradient {
    double loss = 0.0;
    std::size_t prediction = 0;
    Tensor gradient;
};

// Loss at `image` and its gradient with respect to the input pixels,
// from a single forward/backward pass.
LossGradient loss_and_input_gradient(const TrainedModel& model, const Tensor& image, std::size_t label);
Tensor input_gradient(const TrainedModel& model, const Tensor& image, std::size_t label);

struct TrainOptions {
    double learning_rate = 0.05;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 1;
    // Stop after the first epoch whose training accuracy reaches this value.
    std::optional<double> target_accuracy;
};

TrainedModel train(const ModelSpec& spec, std::span<const LabeledExample> data, const TrainOptions& options);

double accuracy(const TrainedModel& model, std::span<const LabeledExample> data);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view bytes);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

// Short SHA-256 over spec and parameters (not the training record).
std::string model_digest(const TrainedModel& model);

}  // namespace advx
