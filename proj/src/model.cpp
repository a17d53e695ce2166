#include "advx/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "advx/error.hpp"
#include "advx/rng.hpp"

namespace advx {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Layer text form

std::string to_string(const Layer& layer) {
    return std::visit(overloaded{
                          [](const Dense& d) { return "dense:" + std::to_string(d.in) + ":" + std::to_string(d.out); },
                          [](const ReLU&) { return std::string("relu"); },
                          [](const Conv2d& c) {
                              return "conv:" + std::to_string(c.in_ch) + ":" + std::to_string(c.out_ch) + ":" +
                                     std::to_string(c.kernel) + ":" + std::to_string(c.stride);
                          },
                          [](const Flatten&) { return std::string("flatten"); },
                          [](const MaxPool2d& p) { return "maxpool:" + std::to_string(p.window); },
                      },
                      layer);
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            parts.push_back(trim(s.substr(start, i - start)));
            start = i + 1;
        }
    }
    return parts;
}

std::size_t parse_dim(std::string_view s, std::string_view context) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v == 0)
        throw InvalidArgument("bad dimension '" + std::string(s) + "' in layer '" + std::string(context) + "'");
    return v;
}

}  // namespace

Layer parse_layer(std::string_view text) {
    text = trim(text);
    auto parts = split(text, ':');
    const auto& kind = parts[0];
    auto need = [&](std::size_t n) {
        if (parts.size() != n) throw InvalidArgument("malformed layer '" + std::string(text) + "'");
    };
    if (kind == "dense") {
        need(3);
        return Dense{parse_dim(parts[1], text), parse_dim(parts[2], text)};
    }
    if (kind == "relu") {
        need(1);
        return ReLU{};
    }
    if (kind == "conv") {
        if (parts.size() != 4 && parts.size() != 5) need(5);
        Conv2d c{parse_dim(parts[1], text), parse_dim(parts[2], text), parse_dim(parts[3], text), 1};
        if (parts.size() == 5) c.stride = parse_dim(parts[4], text);
        return c;
    }
    if (kind == "flatten") {
        need(1);
        return Flatten{};
    }
    if (kind == "maxpool") {
        need(2);
        return MaxPool2d{parse_dim(parts[1], text)};
    }
    throw InvalidArgument("unknown layer type '" + std::string(kind) + "'");
}

std::vector<Layer> parse_layers(std::string_view comma_separated) {
    std::vector<Layer> layers;
    for (auto part : split(comma_separated, ','))
        if (!part.empty()) layers.push_back(parse_layer(part));
    return layers;
}

// ---------------------------------------------------------------------------
// Shapes

std::vector<Shape> ModelSpec::layer_shapes() const {
    if (input_shape.empty() || element_count(input_shape) == 0)
        throw InvalidArgument("model input shape must be non-empty");
    if (classes == 0) throw InvalidArgument("model must have at least one class");
    if (!(input_scale > 0.0) || !std::isfinite(input_scale)) throw InvalidArgument("input_scale must be positive");

    std::vector<Shape> shapes{input_shape};
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const Shape& in = shapes.back();
        auto fail = [&](const std::string& why) -> Shape {
            throw InvalidArgument("layer " + std::to_string(i) + " (" + to_string(layers[i]) + ") " + why +
                                  "; input is " + shape_string(in));
        };
        Shape out = std::visit(
            overloaded{
                [&](const Dense& d) -> Shape {
                    if (in.size() != 1 || in[0] != d.in) return fail("expects a flat input of matching width");
                    return {d.out};
                },
                [&](const ReLU&) -> Shape { return in; },
                [&](const Conv2d& c) -> Shape {
                    if (in.size() != 3 || in[0] != c.in_ch) return fail("expects [in_ch, h, w]");
                    if (in[1] < c.kernel || in[2] < c.kernel) return fail("kernel larger than input");
                    return {c.out_ch, (in[1] - c.kernel) / c.stride + 1, (in[2] - c.kernel) / c.stride + 1};
                },
                [&](const Flatten&) -> Shape { return {element_count(in)}; },
                [&](const MaxPool2d& p) -> Shape {
                    if (in.size() != 3) return fail("expects [c, h, w]");
                    if (in[1] < p.window || in[2] < p.window) return fail("window larger than input");
                    return {in[0], in[1] / p.window, in[2] / p.window};
                },
            },
            layers[i]);
        shapes.push_back(std::move(out));
    }
    if (shapes.back() != Shape{classes})
        throw InvalidArgument("final layer output " + shape_string(shapes.back()) + " does not match " +
                              std::to_string(classes) + " classes");
    return shapes;
}

std::vector<Shape> ModelSpec::parameter_shapes() const {
    std::vector<Shape> out;
    for (const auto& layer : layers) {
        if (auto* d = std::get_if<Dense>(&layer)) {
            out.push_back({d->out, d->in});
            out.push_back({d->out});
        } else if (auto* c = std::get_if<Conv2d>(&layer)) {
            out.push_back({c->out_ch, c->in_ch, c->kernel, c->kernel});
            out.push_back({c->out_ch});
        }
    }
    return out;
}

ModelSpec mlp_a() {
    return {{1, 28, 28}, 10, 1.0 / 255.0, parse_layers("flatten, dense:784:128, relu, dense:128:64, relu, dense:64:10")};
}

ModelSpec mlp_b() {
    return {{1, 28, 28},
            10,
            1.0 / 255.0,
            parse_layers("flatten, dense:784:256, relu, dense:256:96, relu, dense:96:48, relu, dense:48:10")};
}

ModelSpec cnn_a() {
    return {{1, 28, 28}, 10, 1.0 / 255.0, parse_layers("conv:1:8:5:1, relu, maxpool:2, flatten, dense:1152:10")};
}

ModelSpec cnn_b() {
    return {{1, 28, 28},
            10,
            1.0 / 255.0,
            parse_layers("conv:1:8:3:1, relu, maxpool:2, conv:8:16:3:1, relu, maxpool:2, flatten, dense:400:10")};
}

ModelSpec architecture(std::string_view name) {
    if (name == "mlp_a") return mlp_a();
    if (name == "mlp_b") return mlp_b();
    if (name == "cnn_a") return cnn_a();
    if (name == "cnn_b") return cnn_b();
    throw InvalidArgument("unknown architecture '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// TrainedModel

TrainedModel::TrainedModel(ModelSpec spec, std::vector<Tensor> parameters, TrainingRecord record)
    : spec_(std::move(spec)), params_(std::move(parameters)), record_(std::move(record)) {
    shapes_ = spec_.layer_shapes();
    auto expected = spec_.parameter_shapes();
    if (expected.size() != params_.size())
        throw InvalidArgument("model expects " + std::to_string(expected.size()) + " parameter tensors, got " +
                              std::to_string(params_.size()));
    for (std::size_t i = 0; i < expected.size(); ++i)
        if (params_[i].shape() != expected[i])
            throw InvalidArgument("parameter " + std::to_string(i) + " has shape " +
                                  shape_string(params_[i].shape()) + ", expected " + shape_string(expected[i]));
}

TrainedModel TrainedModel::with_record(TrainingRecord record) const {
    TrainedModel copy = *this;
    copy.record_ = std::move(record);
    return copy;
}

// ---------------------------------------------------------------------------
// Forward / backward engine over raw buffers

namespace {

using Buffer = std::vector<double>;

// Dot product with four interleaved partial sums (fixed combination order,
// so results are reproducible).
double dot(const double* a, const double* b, std::size_t n) {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

struct Net {
    const ModelSpec& spec;
    const std::vector<Shape>& shapes;
    // Two spans (weights, bias) per parametrized layer, in layer order.
    std::vector<std::span<const double>> params;
    std::vector<int> first_param;  // per layer, -1 if none

    Net(const ModelSpec& s, const std::vector<Shape>& sh, std::vector<std::span<const double>> p)
        : spec(s), shapes(sh), params(std::move(p)), first_param(s.layers.size(), -1) {
        int next = 0;
        for (std::size_t i = 0; i < s.layers.size(); ++i)
            if (std::holds_alternative<Dense>(s.layers[i]) || std::holds_alternative<Conv2d>(s.layers[i])) {
                first_param[i] = next;
                next += 2;
            }
    }
};

struct Activations {
    std::vector<Buffer> values;  // values[0] scaled input, values[i + 1] output of layer i
    std::vector<std::vector<std::uint32_t>> argmax;  // max-pool routing
};

std::vector<std::span<const double>> spans_of(const std::vector<Tensor>& tensors) {
    std::vector<std::span<const double>> out;
    out.reserve(tensors.size());
    for (const auto& t : tensors) out.push_back(t.values());
    return out;
}

void forward_pass(const Net& net, std::span<const double> image, Activations& acts) {
    const auto& layers = net.spec.layers;
    acts.values.resize(layers.size() + 1);
    acts.argmax.resize(layers.size());
    acts.values[0].resize(image.size());
    for (std::size_t i = 0; i < image.size(); ++i) acts.values[0][i] = image[i] * net.spec.input_scale;

    for (std::size_t li = 0; li < layers.size(); ++li) {
        const Buffer& in = acts.values[li];
        Buffer& out = acts.values[li + 1];
        const Shape& is = net.shapes[li];
        const Shape& os = net.shapes[li + 1];
        out.assign(element_count(os), 0.0);
        std::visit(overloaded{
                       [&](const Dense& d) {
                           auto w = net.params[net.first_param[li]];
                           auto b = net.params[net.first_param[li] + 1];
                           for (std::size_t o = 0; o < d.out; ++o) out[o] = dot(w.data() + o * d.in, in.data(), d.in) + b[o];
                       },
                       [&](const ReLU&) {
                           for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
                       },
                       [&](const Conv2d& c) {
                           auto w = net.params[net.first_param[li]];
                           auto b = net.params[net.first_param[li] + 1];
                           const std::size_t H = is[1], W = is[2], OH = os[1], OW = os[2], k = c.kernel;
                           const std::size_t s = c.stride;
                           // Accumulate one kernel tap at a time over the whole output plane.
                           for (std::size_t oc = 0; oc < c.out_ch; ++oc) {
                               double* plane = out.data() + oc * OH * OW;
                               std::fill(plane, plane + OH * OW, b[oc]);
                               for (std::size_t ic = 0; ic < c.in_ch; ++ic)
                                   for (std::size_t ky = 0; ky < k; ++ky)
                                       for (std::size_t kx = 0; kx < k; ++kx) {
                                           const double wv = w[((oc * c.in_ch + ic) * k + ky) * k + kx];
                                           for (std::size_t oy = 0; oy < OH; ++oy) {
                                               const double* src = in.data() + (ic * H + oy * s + ky) * W + kx;
                                               double* dst = plane + oy * OW;
                                               if (s == 1)
                                                   for (std::size_t ox = 0; ox < OW; ++ox) dst[ox] += wv * src[ox];
                                               else
                                                   for (std::size_t ox = 0; ox < OW; ++ox) dst[ox] += wv * src[ox * s];
                                           }
                                       }
                           }
                       },
                       [&](const Flatten&) { out = in; },
                       [&](const MaxPool2d& p) {
                           const std::size_t H = is[1], W = is[2], OH = os[1], OW = os[2];
                           auto& route = acts.argmax[li];
                           route.assign(out.size(), 0);
                           for (std::size_t ch = 0; ch < os[0]; ++ch)
                               for (std::size_t oy = 0; oy < OH; ++oy)
                                   for (std::size_t ox = 0; ox < OW; ++ox) {
                                       std::size_t best = (ch * H + oy * p.window) * W + ox * p.window;
                                       for (std::size_t dy = 0; dy < p.window; ++dy)
                                           for (std::size_t dx = 0; dx < p.window; ++dx) {
                                               std::size_t idx = (ch * H + oy * p.window + dy) * W + ox * p.window + dx;
                                               if (in[idx] > in[best]) best = idx;
                                           }
                                       std::size_t o = (ch * OH + oy) * OW + ox;
                                       out[o] = in[best];
                                       route[o] = static_cast<std::uint32_t>(best);
                                   }
                       },
                   },
                   layers[li]);
    }
}

// Propagates `grad` (d loss / d logits) back to the scaled input. When
// `param_grads` is non-null, parameter gradients are accumulated into it;
// when `need_input` is false the input gradient of layer 0 is skipped.
Buffer backward_pass(const Net& net, const Activations& acts, Buffer grad, std::vector<Buffer>* param_grads,
                     bool need_input) {
    const auto& layers = net.spec.layers;
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Buffer& in = acts.values[li];
        const Shape& is = net.shapes[li];
        const Shape& os = net.shapes[li + 1];
        const bool want_input = need_input || li > 0;
        Buffer din;
        if (want_input) din.assign(in.size(), 0.0);
        std::visit(overloaded{
                       [&](const Dense& d) {
                           auto w = net.params[net.first_param[li]];
                           Buffer* dw = param_grads ? &(*param_grads)[net.first_param[li]] : nullptr;
                           Buffer* db = param_grads ? &(*param_grads)[net.first_param[li] + 1] : nullptr;
                           for (std::size_t o = 0; o < d.out; ++o) {
                               const double g = grad[o];
                               if (g == 0.0) continue;
                               if (want_input) {
                                   const double* row = w.data() + o * d.in;
                                   for (std::size_t i = 0; i < d.in; ++i) din[i] += g * row[i];
                               }
                               if (dw) {
                                   double* grow = dw->data() + o * d.in;
                                   for (std::size_t i = 0; i < d.in; ++i) grow[i] += g * in[i];
                                   (*db)[o] += g;
                               }
                           }
                       },
                       [&](const ReLU&) {
                           if (!want_input) return;
                           for (std::size_t i = 0; i < in.size(); ++i) din[i] = in[i] > 0.0 ? grad[i] : 0.0;
                       },
                       [&](const Conv2d& c) {
                           auto w = net.params[net.first_param[li]];
                           Buffer* dw = param_grads ? &(*param_grads)[net.first_param[li]] : nullptr;
                           Buffer* db = param_grads ? &(*param_grads)[net.first_param[li] + 1] : nullptr;
                           const std::size_t H = is[1], W = is[2], OH = os[1], OW = os[2], k = c.kernel;
                           // Scatter from each non-zero output gradient; after ReLU and
                           // max-pooling most of them are zero.
                           for (std::size_t oc = 0; oc < c.out_ch; ++oc)
                               for (std::size_t oy = 0; oy < OH; ++oy)
                                   for (std::size_t ox = 0; ox < OW; ++ox) {
                                       const double g = grad[(oc * OH + oy) * OW + ox];
                                       if (g == 0.0) continue;
                                       if (db) (*db)[oc] += g;
                                       for (std::size_t ic = 0; ic < c.in_ch; ++ic) {
                                           const double* wk = w.data() + (oc * c.in_ch + ic) * k * k;
                                           const std::size_t ibase = (ic * H + oy * c.stride) * W + ox * c.stride;
                                           for (std::size_t ky = 0; ky < k; ++ky) {
                                               const double* wrow = wk + ky * k;
                                               if (want_input) {
                                                   double* dst = din.data() + ibase + ky * W;
                                                   for (std::size_t kx = 0; kx < k; ++kx) dst[kx] += g * wrow[kx];
                                               }
                                               if (dw) {
                                                   double* dwrow = dw->data() + (oc * c.in_ch + ic) * k * k + ky * k;
                                                   const double* src = in.data() + ibase + ky * W;
                                                   for (std::size_t kx = 0; kx < k; ++kx) dwrow[kx] += g * src[kx];
                                               }
                                           }
                                       }
                                   }
                       },
                       [&](const Flatten&) {
                           if (want_input) din = grad;
                       },
                       [&](const MaxPool2d&) {
                           if (!want_input) return;
                           const auto& route = acts.argmax[li];
                           for (std::size_t o = 0; o < grad.size(); ++o) din[route[o]] += grad[o];
                       },
                   },
                   layers[li]);
        if (!want_input) return {};
        grad = std::move(din);
    }
    return grad;
}

double log_sum_exp(std::span<const double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double v : z) s += std::exp(v - m);
    return m + std::log(s);
}

void check_label(std::size_t label, std::size_t classes) {
    if (label >= classes)
        throw InvalidArgument("label " + std::to_string(label) + " out of range for " + std::to_string(classes) +
                              " classes");
}

void check_input(const TrainedModel& model, const Tensor& image) {
    if (image.shape() != model.spec().input_shape)
        throw InvalidArgument("image shape " + shape_string(image.shape()) + " does not match model input " +
                              shape_string(model.spec().input_shape));
}

Buffer softmax_minus_onehot(std::span<const double> logits, std::size_t label) {
    const double lse = log_sum_exp(logits);
    Buffer g(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) g[i] = std::exp(logits[i] - lse);
    g[label] -= 1.0;
    return g;
}

std::size_t argmax_of(std::span<const double> z) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < z.size(); ++i)
        if (z[i] > z[best]) best = i;
    return best;
}

double loss_of(std::span<const double> logits, std::size_t label) {
    return std::max(0.0, log_sum_exp(logits) - logits[label]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public inference API

TrainedModel initialize(const ModelSpec& spec, std::uint64_t seed) {
    spec.layer_shapes();
    Rng rng(seed);
    std::vector<Tensor> params;
    for (const auto& layer : spec.layers) {
        std::size_t fan_in = 0, out = 0, count = 0;
        Shape wshape;
        if (auto* d = std::get_if<Dense>(&layer)) {
            fan_in = d->in;
            out = d->out;
            wshape = {d->out, d->in};
        } else if (auto* c = std::get_if<Conv2d>(&layer)) {
            fan_in = c->in_ch * c->kernel * c->kernel;
            out = c->out_ch;
            wshape = {c->out_ch, c->in_ch, c->kernel, c->kernel};
        } else {
            continue;
        }
        count = element_count(wshape);
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        std::vector<double> w(count);
        for (auto& v : w) v = rng.uniform(-limit, limit);
        params.emplace_back(std::move(wshape), std::move(w));
        params.push_back(Tensor::zeros({out}));
    }
    return TrainedModel(spec, std::move(params), TrainingRecord{seed, 0, 0.0, std::nullopt});
}

Tensor forward(const TrainedModel& model, const Tensor& image) {
    check_input(model, image);
    Net net(model.spec(), model.layer_shapes(), spans_of(model.parameters()));
    Activations acts;
    forward_pass(net, image.values(), acts);
    return Tensor({model.spec().classes}, std::move(acts.values.back()));
}

std::size_t argmax(const Tensor& logits) {
    if (logits.size() == 0) throw InvalidArgument("argmax of empty tensor");
    return argmax_of(logits.values());
}

std::size_t predict(const TrainedModel& model, const Tensor& image) { return argmax(forward(model, image)); }

double loss(const Tensor& logits, std::size_t label) {
    check_label(label, logits.size());
    return loss_of(logits.values(), label);
}

Tensor loss_logit_gradient(const Tensor& logits, std::size_t label) {
    check_label(label, logits.size());
    return Tensor(logits.shape(), softmax_minus_onehot(logits.values(), label));
}

LossGradient loss_and_input_gradient(const TrainedModel& model, const Tensor& image, std::size_t label) {
    check_input(model, image);
    check_label(label, model.spec().classes);
    Net net(model.spec(), model.layer_shapes(), spans_of(model.parameters()));
    Activations acts;
    forward_pass(net, image.values(), acts);
    const Buffer& logits = acts.values.back();
    LossGradient out;
    out.loss = loss_of(logits, label);
    out.prediction = argmax_of(logits);
    Buffer g = backward_pass(net, acts, softmax_minus_onehot(logits, label), nullptr, true);
    for (auto& v : g) v *= model.spec().input_scale;
    out.gradient = Tensor(image.shape(), std::move(g));
    return out;
}

Tensor input_gradient(const TrainedModel& model, const Tensor& image, std::size_t label) {
    return loss_and_input_gradient(model, image, label).gradient;
}

double accuracy(const TrainedModel& model, std::span<const LabeledExample> data) {
    if (data.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& ex : data) hits += predict(model, ex.image) == ex.label;
    return static_cast<double>(hits) / static_cast<double>(data.size());
}

// ---------------------------------------------------------------------------
// Training

TrainedModel train(const ModelSpec& spec, std::span<const LabeledExample> data, const TrainOptions& options) {
    if (data.empty()) throw InvalidArgument("train: empty dataset");
    if (options.batch_size == 0) throw InvalidArgument("train: batch size must be positive");
    if (!(options.learning_rate > 0.0)) throw InvalidArgument("train: learning rate must be positive");
    for (const auto& ex : data) {
        check_label(ex.label, spec.classes);
        if (ex.image.shape() != spec.input_shape)
            throw InvalidArgument("train: example shape " + shape_string(ex.image.shape()) + " does not match " +
                                  shape_string(spec.input_shape));
    }

    TrainedModel init = initialize(spec, options.seed);
    std::vector<Buffer> params;
    for (const auto& t : init.parameters()) params.push_back(t.vec());
    if (options.epochs == 0) return init;

    const auto& shapes = init.layer_shapes();
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(options.seed ^ 0x9e3779b97f4a7c15ULL);

    auto views = [&] {
        std::vector<std::span<const double>> v;
        for (const auto& p : params) v.emplace_back(p);
        return v;
    };

    std::vector<Buffer> grads(params.size());
    Activations acts;
    std::size_t epochs_run = 0;
    double train_acc = 0.0;
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
            const std::size_t end = std::min(order.size(), start + options.batch_size);
            for (std::size_t p = 0; p < params.size(); ++p) grads[p].assign(params[p].size(), 0.0);
            Net net(spec, shapes, views());
            for (std::size_t k = start; k < end; ++k) {
                const auto& ex = data[order[k]];
                forward_pass(net, ex.image.values(), acts);
                backward_pass(net, acts, softmax_minus_onehot(acts.values.back(), ex.label), &grads, false);
            }
            const double step = options.learning_rate / static_cast<double>(end - start);
            for (std::size_t p = 0; p < params.size(); ++p)
                for (std::size_t i = 0; i < params[p].size(); ++i) params[p][i] -= step * grads[p][i];
        }
        ++epochs_run;

        std::size_t hits = 0;
        Net net(spec, shapes, views());
        for (const auto& ex : data) {
            forward_pass(net, ex.image.values(), acts);
            hits += argmax_of(acts.values.back()) == ex.label;
        }
        train_acc = static_cast<double>(hits) / static_cast<double>(data.size());
        if (options.target_accuracy && train_acc >= *options.target_accuracy) break;
    }

    std::vector<Tensor> tensors;
    auto pshapes = spec.parameter_shapes();
    for (std::size_t p = 0; p < params.size(); ++p) tensors.emplace_back(pshapes[p], std::move(params[p]));
    return TrainedModel(spec, std::move(tensors), TrainingRecord{options.seed, epochs_run, train_acc, std::nullopt});
}

}  // namespace advx
