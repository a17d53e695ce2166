#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "advx/model.hpp"
#include "advx/tensor.hpp"

namespace advx {

enum class Method { FGSM, FGM, IFGSM, NIFGSM, NIFGM, NMIFGSM, NMIFGM };

std::string to_string(Method m);
// Accepts "NI-FGSM", "ni-fgsm", "ni_fgsm", "nifgsm", ...
Method parse_method(const std::string& name);

// Negative-direction methods that keep the original class far from the input.
bool is_new_type(Method m);
bool uses_momentum(Method m);
// Geometry of a single step: Linf for sign steps, L2 for normalized steps.
NormOrder step_norm(Method m);

enum class Termination { FixedIterations, DistanceReached };

std::string to_string(Termination t);
Termination parse_termination(const std::string& name);

struct AttackConfig {
    Method method = Method::NIFGSM;
    // Budget of the classic methods, in [0, 255] pixel units.
    double epsilon = 0.0;
    // Distance floor of the negative methods; measured in L2.
    double delta = 0.0;
    // Step size; unset means delta / N (negative methods) or epsilon / N (I-FGSM).
    std::optional<double> alpha;
    std::size_t max_iterations = 1;
    double decay = 0.0;
    Termination termination = Termination::FixedIterations;
    double clamp_lo = 0.0;
    double clamp_hi = 255.0;
    std::optional<std::size_t> target;
    // Return the input untouched without taking a step.
    bool zero_step = false;
    bool record_trace = false;

    NormOrder norm() const { return step_norm(method); }
    double step_size() const;
    void validate() const;
};

// Canonical text of every field that influences results; hashed into
// report fingerprints.
std::string canonical_string(const AttackConfig& config);
std::string config_fingerprint(const AttackConfig& config);

struct MomentumState {
    Tensor g;

    static MomentumState zeros(const Shape& shape) { return {Tensor::zeros(shape)}; }
};

// g' = mu * g + grad / ||grad||_1, with a zero normalized term for a zero gradient.
MomentumState update_momentum(const MomentumState& state, const Tensor& grad, double mu);

struct TraceEntry {
    std::size_t iteration = 0;
    double loss = 0.0;
    double distance_l2 = 0.0;
    double distance_linf = 0.0;
};

struct AttackResult {
    Tensor adversarial;
    std::size_t label = 0;
    std::size_t iterations_used = 0;
    double distance_linf = 0.0;
    double distance_l2 = 0.0;
    std::size_t original_prediction = 0;
    std::size_t adversarial_prediction = 0;
    double loss_initial = 0.0;
    double loss_final = 0.0;
    // A zero gradient (or momentum) was met and the run stopped early.
    bool zero_gradient = false;
    // The L2 distance to the original reached delta.
    bool distance_reached = false;
    std::vector<TraceEntry> trace;
};

AttackResult fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult i_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult ni_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult ni_fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult nmi_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);
AttackResult nmi_fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);

// Dispatches on config.method.
AttackResult run_attack(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config);

}  // namespace advx
