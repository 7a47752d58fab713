#include "kdlab/scaling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kdlab::scaling {

namespace {

void check_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument(std::string(what) + " contains a non-finite entry");
        }
    }
}

void check_tau(double tau, const char* name) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::domain_error(std::string(name) + " must be positive and finite");
    }
}

}  // namespace

LogitRecord::LogitRecord(std::vector<double> logits_in, int label_in)
    : logits(std::move(logits_in)), label(label_in) {
    if (logits.size() < 2) {
        throw std::invalid_argument("LogitRecord needs at least two classes");
    }
    check_finite(logits, "LogitRecord logits");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw std::invalid_argument("LogitRecord label out of range");
    }
}

TemperaturePair::TemperaturePair(double t1, double t2) : tau1(t1), tau2(t2) {
    check_tau(tau1, "tau1");
    check_tau(tau2, "tau2");
}

ProbVector::ProbVector(std::vector<double> probs_in, TempSpec temps_in, int target_in)
    : probs(std::move(probs_in)), temps(temps_in), target(target_in) {
    if (probs.size() < 2) {
        throw std::invalid_argument("ProbVector needs at least two classes");
    }
    double sum = 0.0;
    for (double p : probs) {
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw std::invalid_argument("ProbVector entry outside [0, 1]");
        }
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw std::invalid_argument("ProbVector does not sum to 1");
    }
    if (target < -1 || (target >= 0 && static_cast<std::size_t>(target) >= probs.size())) {
        throw std::invalid_argument("ProbVector target index out of range");
    }
}

double log_sum_exp(const std::vector<double>& x) {
    if (x.empty()) {
        throw std::invalid_argument("log_sum_exp of empty vector");
    }
    double m = *std::max_element(x.begin(), x.end());
    if (x.size() == 1) {
        return m;
    }
    double acc = 0.0;
    for (double v : x) {
        acc += std::exp(v - m);
    }
    return m + std::log(acc);
}

namespace {

/// Shared tail of both softmax variants: exponentiate shifted logits and
/// normalize. `shifted` holds f_c / tau_c - max_c (f_c / tau_c).
std::vector<double> normalize_exp(std::vector<double>&& shifted) {
    double sum = 0.0;
    for (double& v : shifted) {
        v = std::exp(v);
        sum += v;
    }
    for (double& v : shifted) {
        v /= sum;
    }
    return std::move(shifted);
}

}  // namespace

ProbVector softmax_ts(const LogitRecord& record, double tau) {
    check_tau(tau, "tau");
    std::vector<double> scaled(record.logits.size());
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        scaled[i] = record.logits[i] / tau;
    }
    double m = *std::max_element(scaled.begin(), scaled.end());
    for (double& v : scaled) {
        v -= m;
    }
    return ProbVector(normalize_exp(std::move(scaled)), tau, record.label);
}

ProbVector softmax_ats(const LogitRecord& record, const TemperaturePair& taus) {
    check_tau(taus.tau1, "tau1");
    check_tau(taus.tau2, "tau2");
    const std::size_t n = record.logits.size();
    const auto y = static_cast<std::size_t>(record.label);
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) {
        scaled[i] = record.logits[i] / (i == y ? taus.tau1 : taus.tau2);
    }
    double m = *std::max_element(scaled.begin(), scaled.end());
    for (double& v : scaled) {
        v -= m;
    }
    return ProbVector(normalize_exp(std::move(scaled)), taus, record.label);
}

ProbVector apply_temps(const LogitRecord& record, const TempSpec& temps) {
    if (const double* tau = std::get_if<double>(&temps)) {
        return softmax_ts(record, *tau);
    }
    return softmax_ats(record, std::get<TemperaturePair>(temps));
}

std::vector<double> wrong_logits(const LogitRecord& record) {
    std::vector<double> out;
    out.reserve(record.logits.size() - 1);
    for (std::size_t i = 0; i < record.logits.size(); ++i) {
        if (i != static_cast<std::size_t>(record.label)) {
            out.push_back(record.logits[i]);
        }
    }
    return out;
}

std::vector<double> renorm_wrong_probs(const ProbVector& p, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= p.size()) {
        throw std::invalid_argument("renorm_wrong_probs label out of range");
    }
    // Accumulate the wrong-class mass directly instead of 1 - p_y: the
    // subtraction loses precision exactly when p_y is close to 1, which is
    // where the renormalized block is most interesting.
    double rest = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i != static_cast<std::size_t>(label)) {
            rest += p.probs[i];
        }
    }
    if (rest <= 0.0) {
        throw std::domain_error("renorm_wrong_probs: target probability is 1");
    }
    std::vector<double> out;
    out.reserve(p.size() - 1);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i != static_cast<std::size_t>(label)) {
            out.push_back(p.probs[i] / rest);
        }
    }
    return out;
}

std::vector<double> softmax_ts_grad_tau(const LogitRecord& record, double tau) {
    ProbVector p = softmax_ts(record, tau);
    double mean_logit = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        mean_logit += p.probs[i] * record.logits[i];
    }
    std::vector<double> grad(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        grad[i] = p.probs[i] / (tau * tau) * (mean_logit - record.logits[i]);
    }
    return grad;
}

}  // namespace kdlab::scaling
