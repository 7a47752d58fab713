#pragma once

#include <vector>

#include "kdlab/scaling.hpp"

namespace kdlab::kd {

/// The teacher-student cross entropy -sum_c p^T_c log p^S_c split into
/// three parts by rewriting each wrong-class teacher probability as
/// (average) + (deviation from average):
///   correct_guidance       = -p^T_y log p^S_y
///   smooth_regularization  = -sum_{c != y} e(q^T) log p^S_c
///   class_discriminability = -sum_{c != y} (p^T_c - e(q^T)) log p^S_c
/// The first two are non-negative; the third may take either sign. The
/// three sum to the independently accumulated total.
struct KdTerms {
    double correct_guidance = 0.0;
    double smooth_regularization = 0.0;
    double class_discriminability = 0.0;
    double total = 0.0;
};

/// Settings shared by the loss functions. lambda weighs the distillation
/// term against plain cross entropy. teacher_temps selects uniform or
/// asymmetric scaling of the teacher logits. student_temp scales the
/// student's own softmax inside the distillation term (the hard-label term
/// always uses temperature 1). When multiply_tau_squared is set, the
/// distillation term is multiplied by student_temp^2 so its gradient keeps
/// a temperature-independent magnitude.
struct LossConfig {
    double lambda = 0.5;
    scaling::TempSpec teacher_temps = 1.0;
    double student_temp = 1.0;
    bool multiply_tau_squared = true;

    /// Throws unless lambda is in [0, 1] and the temperatures are positive.
    void validate() const;
};

/// Ordinary cross entropy of the student's own prediction at temperature 1:
/// -log p^S_y(1). Computed as log_sum_exp(f) - f_y so it stays finite for
/// any finite logits.
double ce_loss(const scaling::LogitRecord& student);

/// The teacher's soft label under the configured temperatures.
scaling::ProbVector teacher_label(const scaling::LogitRecord& teacher,
                                  const LossConfig& config);

/// The teacher's soft label with every wrong-class probability replaced by
/// their average: target keeps p^T_y, each other class gets e(q^T). This
/// keeps correct guidance and smooth regularization but erases class
/// discriminability.
scaling::ProbVector ils_label(const scaling::LogitRecord& teacher,
                              const LossConfig& config);

/// Splits the teacher-student cross entropy at the given soft label and
/// student probabilities. Both vectors must have the same length and the
/// label must be in range. Teacher entries that are exactly 0 contribute 0.
KdTerms kd_decompose(const scaling::ProbVector& teacher,
                     const scaling::ProbVector& student, int label);

/// Convenience form: teacher label from `config`, student probabilities at
/// the configured student temperature.
KdTerms kd_decompose(const scaling::LogitRecord& teacher,
                     const scaling::LogitRecord& student, const LossConfig& config);

/// The distillation term lambda * scale * (-sum_c t_c log p^S_c(tau_s))
/// for an arbitrary soft label t (teacher probabilities are constants; no
/// gradient flows through them). scale is student_temp^2 when
/// multiply_tau_squared is set, else 1.
double kd_loss(const scaling::ProbVector& soft_label,
               const scaling::LogitRecord& student, const LossConfig& config);

/// Same with the soft label computed from the teacher record.
double kd_loss(const scaling::LogitRecord& teacher,
               const scaling::LogitRecord& student, const LossConfig& config);

/// (1 - lambda) * ce_loss + kd_loss.
double combined_loss(const scaling::ProbVector& soft_label,
                     const scaling::LogitRecord& student, const LossConfig& config);

double combined_loss(const scaling::LogitRecord& teacher,
                     const scaling::LogitRecord& student, const LossConfig& config);

/// Distillation term against the flattened (ils_label) soft label.
double ils_loss(const scaling::LogitRecord& teacher,
                const scaling::LogitRecord& student, const LossConfig& config);

/// Gradient of combined_loss with respect to the student logits:
///   (1 - lambda) * (p^S(1) - onehot(y))
///   + lambda * scale * (1 / tau_s) * (p^S(tau_s) - t).
/// Sums to zero up to rounding because both bracketed terms do.
std::vector<double> grad_student_logits(const scaling::ProbVector& soft_label,
                                        const scaling::LogitRecord& student,
                                        const LossConfig& config);

std::vector<double> grad_student_logits(const scaling::LogitRecord& teacher,
                                        const scaling::LogitRecord& student,
                                        const LossConfig& config);

}  // namespace kdlab::kd
