#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace advx {

using Shape = std::vector<std::size_t>;

enum class NormOrder { L1, L2, Linf };

std::string to_string(NormOrder p);
NormOrder parse_norm(const std::string& name);

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. Immutable once constructed; every
/// operation returns a new tensor. Construction rejects NaN/Inf.
class Tensor {
public:
    Tensor() = default;
    Tensor(Shape shape, std::vector<double> data);

    static Tensor zeros(Shape shape);
    static Tensor filled(Shape shape, double value);

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& vec() const { return data_; }
    double operator[](std::size_t i) const { return data_[i]; }

    Tensor reshaped(Shape shape) const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

Tensor sign(const Tensor& t);
double norm(const Tensor& t, NormOrder p);

Tensor clamp(const Tensor& t, double lo, double hi);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double c);
Tensor hadamard(const Tensor& a, const Tensor& b);

// a + c * b, the shape of every update step.
Tensor axpy(const Tensor& a, double c, const Tensor& b);

/// Saturates each element into [center_i - eps, center_i + eps].
Tensor clip_to_ball(const Tensor& t, const Tensor& center, double eps);

// Norm of (a - b) without materializing the difference.
double distance(const Tensor& a, const Tensor& b, NormOrder p);

}  // namespace advx
