#include "advx/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "advx/error.hpp"

namespace advx {

std::string to_string(NormOrder p) {
    switch (p) {
        case NormOrder::L1: return "L1";
        case NormOrder::L2: return "L2";
        case NormOrder::Linf: return "Linf";
    }
    return "?";
}

NormOrder parse_norm(const std::string& name) {
    if (name == "L1" || name == "l1") return NormOrder::L1;
    if (name == "L2" || name == "l2") return NormOrder::L2;
    if (name == "Linf" || name == "linf" || name == "inf") return NormOrder::Linf;
    throw InvalidArgument("unknown norm '" + name + "'");
}

std::size_t element_count(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

std::string shape_string(const Shape& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (element_count(shape_) != data_.size())
        throw InvalidArgument("tensor shape " + shape_string(shape_) + " does not match " +
                              std::to_string(data_.size()) + " elements");
    for (double v : data_)
        if (!std::isfinite(v)) throw InvalidArgument("tensor element is not finite");
}

Tensor Tensor::zeros(Shape shape) { return filled(std::move(shape), 0.0); }

Tensor Tensor::filled(Shape shape, double value) {
    auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw InvalidArgument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                              shape_string(b.shape()));
}

template <class F>
Tensor map(const Tensor& t, F f) {
    std::vector<double> out(t.size());
    auto in = t.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
    return Tensor(t.shape(), std::move(out));
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
    require_same_shape(a, b, op);
    std::vector<double> out(a.size());
    auto x = a.values();
    auto y = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(x[i], y[i]);
    return Tensor(a.shape(), std::move(out));
}

}  // namespace

Tensor sign(const Tensor& t) {
    return map(t, [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

double norm(const Tensor& t, NormOrder p) {
    double acc = 0.0;
    switch (p) {
        case NormOrder::L1:
            for (double v : t.values()) acc += std::abs(v);
            return acc;
        case NormOrder::L2:
            for (double v : t.values()) acc += v * v;
            return std::sqrt(acc);
        case NormOrder::Linf:
            for (double v : t.values()) acc = std::max(acc, std::abs(v));
            return acc;
    }
    return acc;
}

double distance(const Tensor& a, const Tensor& b, NormOrder p) {
    require_same_shape(a, b, "distance");
    auto x = a.values();
    auto y = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = std::abs(x[i] - y[i]);
        switch (p) {
            case NormOrder::L1: acc += d; break;
            case NormOrder::L2: acc += d * d; break;
            case NormOrder::Linf: acc = std::max(acc, d); break;
        }
    }
    return p == NormOrder::L2 ? std::sqrt(acc) : acc;
}

Tensor clamp(const Tensor& t, double lo, double hi) {
    if (!(lo <= hi)) throw InvalidArgument("clamp: lo > hi");
    return map(t, [lo, hi](double v) { return std::clamp(v, lo, hi); });
}

Tensor add(const Tensor& a, const Tensor& b) {
    return zip(a, b, "add", [](double x, double y) { return x + y; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return zip(a, b, "sub", [](double x, double y) { return x - y; });
}

Tensor scale(const Tensor& t, double c) {
    return map(t, [c](double v) { return c * v; });
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    return zip(a, b, "hadamard", [](double x, double y) { return x * y; });
}

Tensor axpy(const Tensor& a, double c, const Tensor& b) {
    return zip(a, b, "axpy", [c](double x, double y) { return x + c * y; });
}

Tensor clip_to_ball(const Tensor& t, const Tensor& center, double eps) {
    if (!(eps >= 0.0)) throw InvalidArgument("clip_to_ball: eps must be non-negative");
    return zip(t, center, "clip_to_ball",
               [eps](double v, double c) { return std::clamp(v, c - eps, c + eps); });
}

}  // namespace advx
