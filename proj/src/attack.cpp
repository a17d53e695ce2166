#include "advx/attack.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "advx/digest.hpp"
#include "advx/error.hpp"
#include "advx/format.hpp"

namespace advx {

std::string to_string(Method m) {
    switch (m) {
        case Method::FGSM: return "FGSM";
        case Method::FGM: return "FGM";
        case Method::IFGSM: return "I-FGSM";
        case Method::NIFGSM: return "NI-FGSM";
        case Method::NIFGM: return "NI-FGM";
        case Method::NMIFGSM: return "NMI-FGSM";
        case Method::NMIFGM: return "NMI-FGM";
    }
    return "?";
}

Method parse_method(const std::string& name) {
    std::string key;
    for (char c : name)
        if (std::isalnum(static_cast<unsigned char>(c))) key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (key == "fgsm") return Method::FGSM;
    if (key == "fgm") return Method::FGM;
    if (key == "ifgsm") return Method::IFGSM;
    if (key == "nifgsm") return Method::NIFGSM;
    if (key == "nifgm") return Method::NIFGM;
    if (key == "nmifgsm") return Method::NMIFGSM;
    if (key == "nmifgm") return Method::NMIFGM;
    throw InvalidArgument("unknown attack method '" + name + "'");
}

bool is_new_type(Method m) {
    return m == Method::NIFGSM || m == Method::NIFGM || m == Method::NMIFGSM || m == Method::NMIFGM;
}

bool uses_momentum(Method m) { return m == Method::NMIFGSM || m == Method::NMIFGM; }

NormOrder step_norm(Method m) {
    switch (m) {
        case Method::FGM:
        case Method::NIFGM:
        case Method::NMIFGM: return NormOrder::L2;
        default: return NormOrder::Linf;
    }
}

std::string to_string(Termination t) {
    return t == Termination::FixedIterations ? "fixed" : "distance";
}

Termination parse_termination(const std::string& name) {
    if (name == "fixed" || name == "FixedIterations") return Termination::FixedIterations;
    if (name == "distance" || name == "DistanceReached") return Termination::DistanceReached;
    throw InvalidArgument("unknown termination rule '" + name + "'");
}

double AttackConfig::step_size() const {
    if (alpha) return *alpha;
    const double n = static_cast<double>(std::max<std::size_t>(max_iterations, 1));
    if (is_new_type(method)) return delta / n;
    if (method == Method::IFGSM) return epsilon / n;
    return epsilon;
}

void AttackConfig::validate() const {
    if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be >= 0");
    if (!(delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
    if (!(decay >= 0.0)) throw InvalidArgument("decay factor mu must be >= 0");
    if (max_iterations < 1) throw InvalidArgument("max_iterations must be >= 1");
    if (!(clamp_lo <= clamp_hi)) throw InvalidArgument("clamp range lo > hi");
    if (termination == Termination::DistanceReached && !(delta > 0.0))
        throw InvalidArgument("distance termination requires delta > 0");
    if (alpha && !(*alpha > 0.0)) throw InvalidArgument("alpha must be > 0");
    if ((is_new_type(method) || method == Method::IFGSM) && !(step_size() > 0.0))
        throw InvalidArgument(to_string(method) + " needs alpha > 0 (set alpha, or a positive " +
                              (is_new_type(method) ? "delta" : "epsilon") + ")");
}

std::string canonical_string(const AttackConfig& c) {
    std::ostringstream os;
    os << "method=" << to_string(c.method) << ";epsilon=" << format_double(c.epsilon)
       << ";delta=" << format_double(c.delta) << ";alpha=" << format_double(c.step_size())
       << ";iterations=" << c.max_iterations << ";decay=" << format_double(c.decay)
       << ";termination=" << to_string(c.termination) << ";clamp=" << format_double(c.clamp_lo) << ","
       << format_double(c.clamp_hi) << ";target=" << (c.target ? std::to_string(*c.target) : "none")
       << ";zero_step=" << (c.zero_step ? 1 : 0);
    return os.str();
}

std::string config_fingerprint(const AttackConfig& config) { return short_digest(canonical_string(config)); }

MomentumState update_momentum(const MomentumState& state, const Tensor& grad, double mu) {
    const double l1 = norm(grad, NormOrder::L1);
    if (l1 == 0.0) return {scale(state.g, mu)};
    return {axpy(scale(state.g, mu), 1.0 / l1, grad)};
}

namespace {

// Shared bookkeeping for every method: the evaluation label, initial loss
// and the final fill-in of distances and predictions.
class Run {
public:
    Run(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config)
        : model_(model), example_(example), config_(config) {
        config.validate();
        if (example.label >= model.spec().classes)
            throw InvalidArgument("example label " + std::to_string(example.label) + " out of range");
        if (config.target && *config.target >= model.spec().classes)
            throw InvalidArgument("target class " + std::to_string(*config.target) + " out of range");
        if (is_new_type(config.method) && config.target && *config.target != example.label)
            throw InvalidArgument(to_string(config.method) +
                                  " keeps the true class; a different target class is not allowed");
        // Classic targeted attacks descend on the target's loss.
        gradient_label_ = config.target && !is_new_type(config.method) ? *config.target : example.label;
        current_ = loss_and_input_gradient(model, example.image, gradient_label_);
        result_.label = example.label;
        result_.original_prediction = current_.prediction;
        result_.loss_initial = gradient_label_ == example.label ? current_.loss
                                                                 : loss(forward(model, example.image), example.label);
        x_ = example.image;
    }

    bool targeted() const { return config_.target && !is_new_type(config_.method); }
    const Tensor& x() const { return x_; }
    const Tensor& gradient() const { return current_.gradient; }
    const Tensor& original() const { return example_.image; }

    void flag_zero_gradient() { result_.zero_gradient = true; }

    double distance_l2() const { return distance(x_, example_.image, NormOrder::L2); }

    // Accepts the next iterate and evaluates the gradient there.
    void step_to(Tensor next) {
        x_ = clamp(next, config_.clamp_lo, config_.clamp_hi);
        ++result_.iterations_used;
        current_ = loss_and_input_gradient(model_, x_, gradient_label_);
        if (config_.record_trace)
            result_.trace.push_back({result_.iterations_used, tracked_loss(), distance_l2(),
                                     distance(x_, example_.image, NormOrder::Linf)});
    }

    AttackResult finish() {
        result_.adversarial = x_;
        result_.distance_l2 = distance_l2();
        result_.distance_linf = distance(x_, example_.image, NormOrder::Linf);
        result_.adversarial_prediction = current_.prediction;
        result_.loss_final = tracked_loss();
        result_.distance_reached = config_.delta > 0.0 && result_.distance_l2 >= config_.delta;
        return std::move(result_);
    }

private:
    double tracked_loss() const {
        return gradient_label_ == example_.label ? current_.loss : loss(forward(model_, x_), example_.label);
    }

    const TrainedModel& model_;
    const LabeledExample& example_;
    const AttackConfig& config_;
    std::size_t gradient_label_ = 0;
    LossGradient current_;
    Tensor x_;
    AttackResult result_;
};

bool all_zero(const Tensor& t) {
    return std::all_of(t.values().begin(), t.values().end(), [](double v) { return v == 0.0; });
}

enum class StepKind { Sign, UnitL2 };

// Negative-direction loop shared by NI-FGSM, NI-FGM and their momentum
// variants. With decay == 0 the accumulator is bypassed: the normalized
// update would equal the raw gradient up to a positive factor, which both
// step kinds discard, and skipping it keeps the results bit-identical.
AttackResult descend(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config,
                     StepKind kind, bool momentum) {
    Run run(model, example, config);
    if (config.zero_step) return run.finish();
    const double alpha = config.step_size();
    const bool use_accumulator = momentum && config.decay != 0.0;
    MomentumState state = MomentumState::zeros(example.image.shape());

    for (std::size_t n = 0; n < config.max_iterations; ++n) {
        if (config.termination == Termination::DistanceReached && run.distance_l2() >= config.delta) break;
        const Tensor& grad = run.gradient();
        if (all_zero(grad)) {
            run.flag_zero_gradient();
            break;
        }
        Tensor direction = grad;
        if (use_accumulator) {
            state = update_momentum(state, grad, config.decay);
            direction = state.g;
        }
        if (kind == StepKind::Sign) {
            run.step_to(axpy(run.x(), -alpha, sign(direction)));
        } else {
            const double l2 = norm(direction, NormOrder::L2);
            if (l2 == 0.0) {
                run.flag_zero_gradient();
                break;
            }
            run.step_to(axpy(run.x(), -alpha / l2, direction));
        }
    }
    return run.finish();
}

void require_method(const AttackConfig& config, std::initializer_list<Method> allowed, const char* fn) {
    for (auto m : allowed)
        if (config.method == m) return;
    throw InvalidArgument(std::string(fn) + " called with method " + to_string(config.method));
}

}  // namespace

AttackResult fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::FGSM}, "fgsm");
    Run run(model, example, config);
    if (config.zero_step) return run.finish();
    if (all_zero(run.gradient())) run.flag_zero_gradient();
    const double eps = run.targeted() ? -config.epsilon : config.epsilon;
    run.step_to(axpy(run.x(), eps, sign(run.gradient())));
    return run.finish();
}

AttackResult fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::FGM}, "fgm");
    Run run(model, example, config);
    if (config.zero_step) return run.finish();
    const double l2 = norm(run.gradient(), NormOrder::L2);
    if (l2 == 0.0) {
        run.flag_zero_gradient();
        return run.finish();
    }
    const double eps = run.targeted() ? -config.epsilon : config.epsilon;
    run.step_to(axpy(run.x(), eps / l2, run.gradient()));
    return run.finish();
}

AttackResult i_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::IFGSM}, "i_fgsm");
    Run run(model, example, config);
    if (config.zero_step) return run.finish();
    const double alpha = run.targeted() ? -config.step_size() : config.step_size();
    for (std::size_t n = 0; n < config.max_iterations; ++n) {
        if (all_zero(run.gradient())) {
            run.flag_zero_gradient();
            break;
        }
        run.step_to(clip_to_ball(axpy(run.x(), alpha, sign(run.gradient())), run.original(), config.epsilon));
    }
    return run.finish();
}

AttackResult ni_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::NIFGSM}, "ni_fgsm");
    return descend(model, example, config, StepKind::Sign, false);
}

AttackResult ni_fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::NIFGM}, "ni_fgm");
    return descend(model, example, config, StepKind::UnitL2, false);
}

AttackResult nmi_fgsm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::NMIFGSM}, "nmi_fgsm");
    return descend(model, example, config, StepKind::Sign, true);
}

AttackResult nmi_fgm(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    require_method(config, {Method::NMIFGM}, "nmi_fgm");
    return descend(model, example, config, StepKind::UnitL2, true);
}

AttackResult run_attack(const TrainedModel& model, const LabeledExample& example, const AttackConfig& config) {
    switch (config.method) {
        case Method::FGSM: return fgsm(model, example, config);
        case Method::FGM: return fgm(model, example, config);
        case Method::IFGSM: return i_fgsm(model, example, config);
        case Method::NIFGSM: return ni_fgsm(model, example, config);
        case Method::NIFGM: return ni_fgm(model, example, config);
        case Method::NMIFGSM: return nmi_fgsm(model, example, config);
        case Method::NMIFGM: return nmi_fgm(model, example, config);
    }
    throw InvalidArgument("unknown attack method");
}

}  // namespace advx
