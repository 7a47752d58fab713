#pragma once

#include <cstddef>
#include <variant>
#include <vector>

namespace kdlab::scaling {

/// One sample's raw (pre-softmax) outputs together with its true label.
/// Construction validates the contents: at least two classes, all entries
/// finite, label in range.
struct LogitRecord {
    std::vector<double> logits;
    int label = 0;

    LogitRecord() = default;
    LogitRecord(std::vector<double> logits_in, int label_in);

    std::size_t num_classes() const { return logits.size(); }
};

/// A pair of temperatures: tau1 applies to the target class, tau2 to every
/// other class. Both must be positive. tau1 <= tau2 is the useful regime for
/// over-confident models but the reverse is permitted.
struct TemperaturePair {
    double tau1 = 1.0;
    double tau2 = 1.0;

    TemperaturePair() = default;
    TemperaturePair(double t1, double t2);
};

/// Temperature specification: either one uniform temperature or a
/// target/non-target pair.
using TempSpec = std::variant<double, TemperaturePair>;

/// A probability vector tagged with the temperatures that produced it.
/// Validation: entries in [0, 1], finite, summing to 1 within 1e-12.
/// (Entries may reach exactly 0 or 1 through underflow at extreme logits;
/// downstream consumers treat 0 * log(0) as 0.)
struct ProbVector {
    std::vector<double> probs;
    TempSpec temps = 1.0;
    /// Index the target temperature applied to; -1 when a uniform
    /// temperature was used.
    int target = -1;

    ProbVector() = default;
    ProbVector(std::vector<double> probs_in, TempSpec temps_in, int target_in);

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }
};

/// log(sum_i exp(x_i)) with max-subtraction so it never overflows for
/// |x_i| <= 1e4. Exact for a single element.
double log_sum_exp(const std::vector<double>& x);

/// Classic temperature-scaled softmax: p_c = exp(f_c / tau) / sum_j exp(f_j / tau).
/// Throws std::domain_error when tau <= 0.
ProbVector softmax_ts(const LogitRecord& record, double tau);

/// Asymmetric temperature scaling: the target class logit is divided by
/// tau1, every other logit by tau2, then one softmax normalizes the whole
/// vector. Reduces exactly to softmax_ts when tau1 == tau2.
ProbVector softmax_ats(const LogitRecord& record, const TemperaturePair& taus);

/// Applies either uniform or asymmetric scaling depending on the spec.
ProbVector apply_temps(const LogitRecord& record, const TempSpec& temps);

/// The logits with the target class removed, preserving the order of the
/// remaining entries.
std::vector<double> wrong_logits(const LogitRecord& record);

/// The non-target entries of a probability vector renormalized to sum to 1:
/// q_tilde_c = p_c / (1 - p_y), with the denominator accumulated as the
/// wrong-class mass so precision holds as p_y approaches 1. Throws
/// std::domain_error when that mass is zero (nothing left to renormalize).
std::vector<double> renorm_wrong_probs(const ProbVector& p, int label);

/// Derivative of every softmax probability with respect to a uniform
/// temperature: dp_c/dtau = (p_c / tau^2) * (sum_j p_j f_j - f_c).
std::vector<double> softmax_ts_grad_tau(const LogitRecord& record, double tau);

}  // namespace kdlab::scaling
