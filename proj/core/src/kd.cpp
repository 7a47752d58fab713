#include "kdlab/kd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace kdlab::kd {

namespace {

/// log softmax(f / tau) computed via one log-sum-exp so entries stay finite
/// (down to roughly -745) even when the probabilities underflow.
std::vector<double> log_softmax(const std::vector<double>& logits, double tau) {
    std::vector<double> scaled(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        scaled[i] = logits[i] / tau;
    }
    double lse = scaling::log_sum_exp(scaled);
    for (double& v : scaled) {
        v -= lse;
    }
    return scaled;
}

void check_match(const scaling::ProbVector& soft_label,
                 const scaling::LogitRecord& student) {
    if (soft_label.size() != student.num_classes()) {
        throw std::invalid_argument("soft label and student class counts differ");
    }
}

double distill_scale(const LossConfig& config) {
    return config.multiply_tau_squared ? config.student_temp * config.student_temp
                                       : 1.0;
}

}  // namespace

void LossConfig::validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw std::invalid_argument("lambda must be in [0, 1]");
    }
    if (!(student_temp > 0.0) || !std::isfinite(student_temp)) {
        throw std::domain_error("student_temp must be positive and finite");
    }
    if (const double* tau = std::get_if<double>(&teacher_temps)) {
        if (!(*tau > 0.0) || !std::isfinite(*tau)) {
            throw std::domain_error("teacher temperature must be positive and finite");
        }
    } else {
        const auto& pair = std::get<scaling::TemperaturePair>(teacher_temps);
        if (!(pair.tau1 > 0.0) || !(pair.tau2 > 0.0)) {
            throw std::domain_error("teacher temperatures must be positive");
        }
    }
}

double ce_loss(const scaling::LogitRecord& student) {
    std::vector<double> scaled = student.logits;
    double lse = scaling::log_sum_exp(scaled);
    return lse - student.logits[static_cast<std::size_t>(student.label)];
}

scaling::ProbVector teacher_label(const scaling::LogitRecord& teacher,
                                  const LossConfig& config) {
    config.validate();
    return scaling::apply_temps(teacher, config.teacher_temps);
}

scaling::ProbVector ils_label(const scaling::LogitRecord& teacher,
                              const LossConfig& config) {
    scaling::ProbVector p = teacher_label(teacher, config);
    const auto y = static_cast<std::size_t>(teacher.label);
    // Average the wrong-class mass directly; 1 - p_y rounds to zero for
    // saturated teachers even while the wrong probabilities are nonzero.
    double avg = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i != y) avg += p.probs[i];
    }
    avg /= static_cast<double>(p.size() - 1);
    std::vector<double> flat(p.size(), avg);
    flat[y] = p.probs[y];
    return scaling::ProbVector(std::move(flat), p.temps, teacher.label);
}

KdTerms kd_decompose(const scaling::ProbVector& teacher,
                     const scaling::ProbVector& student, int label) {
    if (teacher.size() != student.size()) {
        throw std::invalid_argument("kd_decompose: class counts differ");
    }
    if (label < 0 || static_cast<std::size_t>(label) >= teacher.size()) {
        throw std::invalid_argument("kd_decompose: label out of range");
    }
    const auto y = static_cast<std::size_t>(label);
    const std::size_t n = teacher.size();

    std::vector<double> log_s(n);
    for (std::size_t i = 0; i < n; ++i) {
        log_s[i] = std::log(student.probs[i]);
    }

    double wrong_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i != y) wrong_sum += teacher.probs[i];
    }
    double avg = wrong_sum / static_cast<double>(n - 1);

    KdTerms t;
    t.correct_guidance = teacher.probs[y] == 0.0 ? 0.0 : -teacher.probs[y] * log_s[y];
    for (std::size_t i = 0; i < n; ++i) {
        if (i == y) continue;
        if (avg != 0.0) {
            t.smooth_regularization -= avg * log_s[i];
        }
        double dev = teacher.probs[i] - avg;
        if (dev != 0.0) {
            t.class_discriminability -= dev * log_s[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (teacher.probs[i] != 0.0) {
            t.total -= teacher.probs[i] * log_s[i];
        }
    }

    double sum = t.correct_guidance + t.smooth_regularization + t.class_discriminability;
    if (std::isfinite(t.total) &&
        std::abs(sum - t.total) > 1e-12 * std::max(1.0, std::abs(t.total))) {
        throw std::logic_error("kd_decompose: terms do not reassemble the total");
    }
    return t;
}

KdTerms kd_decompose(const scaling::LogitRecord& teacher,
                     const scaling::LogitRecord& student, const LossConfig& config) {
    if (teacher.label != student.label) {
        throw std::invalid_argument("kd_decompose: teacher and student labels differ");
    }
    scaling::ProbVector t = teacher_label(teacher, config);
    scaling::ProbVector s = scaling::softmax_ts(student, config.student_temp);
    return kd_decompose(t, s, teacher.label);
}

double kd_loss(const scaling::ProbVector& soft_label,
               const scaling::LogitRecord& student, const LossConfig& config) {
    config.validate();
    check_match(soft_label, student);
    std::vector<double> log_s = log_softmax(student.logits, config.student_temp);
    double xent = 0.0;
    for (std::size_t i = 0; i < log_s.size(); ++i) {
        if (soft_label.probs[i] != 0.0) {
            xent -= soft_label.probs[i] * log_s[i];
        }
    }
    return config.lambda * distill_scale(config) * xent;
}

double kd_loss(const scaling::LogitRecord& teacher,
               const scaling::LogitRecord& student, const LossConfig& config) {
    if (teacher.label != student.label) {
        throw std::invalid_argument("kd_loss: teacher and student labels differ");
    }
    return kd_loss(teacher_label(teacher, config), student, config);
}

double combined_loss(const scaling::ProbVector& soft_label,
                     const scaling::LogitRecord& student, const LossConfig& config) {
    config.validate();
    return (1.0 - config.lambda) * ce_loss(student) +
           kd_loss(soft_label, student, config);
}

double combined_loss(const scaling::LogitRecord& teacher,
                     const scaling::LogitRecord& student, const LossConfig& config) {
    if (teacher.label != student.label) {
        throw std::invalid_argument("combined_loss: teacher and student labels differ");
    }
    return combined_loss(teacher_label(teacher, config), student, config);
}

double ils_loss(const scaling::LogitRecord& teacher,
                const scaling::LogitRecord& student, const LossConfig& config) {
    if (teacher.label != student.label) {
        throw std::invalid_argument("ils_loss: teacher and student labels differ");
    }
    return kd_loss(ils_label(teacher, config), student, config);
}

std::vector<double> grad_student_logits(const scaling::ProbVector& soft_label,
                                        const scaling::LogitRecord& student,
                                        const LossConfig& config) {
    config.validate();
    check_match(soft_label, student);
    const std::size_t n = student.num_classes();
    const auto y = static_cast<std::size_t>(student.label);

    scaling::ProbVector s1 = scaling::softmax_ts(student, 1.0);
    scaling::ProbVector st = scaling::softmax_ts(student, config.student_temp);

    double kd_factor =
        config.lambda * distill_scale(config) / config.student_temp;
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) {
        double hard = s1.probs[i] - (i == y ? 1.0 : 0.0);
        double soft = st.probs[i] - soft_label.probs[i];
        grad[i] = (1.0 - config.lambda) * hard + kd_factor * soft;
    }
    return grad;
}

std::vector<double> grad_student_logits(const scaling::LogitRecord& teacher,
                                        const scaling::LogitRecord& student,
                                        const LossConfig& config) {
    if (teacher.label != student.label) {
        throw std::invalid_argument("grad_student_logits: labels differ");
    }
    return grad_student_logits(teacher_label(teacher, config), student, config);
}

}  // namespace kdlab::kd
