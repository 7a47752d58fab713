#include "kdlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <numeric>
#include <stdexcept>
#include <string>

namespace kdlab::metrics {

namespace {

void check_nonempty(const std::vector<double>& v, const char* what) {
    if (v.empty()) {
        throw std::invalid_argument(std::string(what) + " requires a non-empty vector");
    }
}

void check_same_size(const std::vector<double>& a, const std::vector<double>& b,
                     const char* what) {
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + " requires equal-length vectors");
    }
    check_nonempty(a, what);
}

/// Average (fractional) ranks, 1-based; ties share the mean of the rank
/// block they occupy.
std::vector<double> average_ranks(const std::vector<double>& v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        double shared = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = shared;
        }
        i = j + 1;
    }
    return ranks;
}

std::vector<std::size_t> topk_indices(const std::vector<double>& v, std::size_t k) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        if (v[i] != v[j]) return v[i] > v[j];
        return i < j;
    });
    order.resize(k);
    return order;
}

}  // namespace

double derived_average(const std::vector<double>& wrong_probs) {
    check_nonempty(wrong_probs, "derived_average");
    double sum = 0.0;
    for (double q : wrong_probs) {
        sum += q;
    }
    return sum / static_cast<double>(wrong_probs.size());
}

double derived_variance(const std::vector<double>& wrong_probs) {
    check_nonempty(wrong_probs, "derived_variance");
    double mean = derived_average(wrong_probs);
    double acc = 0.0;
    for (double q : wrong_probs) {
        double d = q - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(wrong_probs.size());
}

double inherent_variance(const std::vector<double>& wrong_probs) {
    check_nonempty(wrong_probs, "inherent_variance");
    double sum = 0.0;
    for (double q : wrong_probs) {
        sum += q;
    }
    if (sum <= 0.0) {
        throw std::domain_error("inherent_variance: wrong-class mass is zero");
    }
    double mean = 1.0 / static_cast<double>(wrong_probs.size());
    double acc = 0.0;
    for (double q : wrong_probs) {
        double d = q / sum - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(wrong_probs.size());
}

double whole_variance(const std::vector<double>& probs) {
    check_nonempty(probs, "whole_variance");
    const double n = static_cast<double>(probs.size());
    double mean = 1.0 / n;
    double acc = 0.0;
    for (double p : probs) {
        double d = p - mean;
        acc += d * d;
    }
    return acc / n;
}

namespace {

DecompositionStats stats_from_probs(const std::vector<double>& probs, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= probs.size()) {
        throw std::invalid_argument("decomposition_stats label out of range");
    }
    const std::size_t c_minus_1 = probs.size() - 1;
    DecompositionStats s;
    s.target_prob = probs[static_cast<std::size_t>(label)];

    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i == static_cast<std::size_t>(label)) continue;
        sum += probs[i];
        sumsq += probs[i] * probs[i];
    }
    const double m = static_cast<double>(c_minus_1);
    s.derived_avg = sum / m;

    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i == static_cast<std::size_t>(label)) continue;
        double d = probs[i] - s.derived_avg;
        acc += d * d;
    }
    s.derived_var = acc / m;

    if (sum <= 0.0) {
        throw std::domain_error("decomposition_stats: target probability is 1");
    }
    double acc2 = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (i == static_cast<std::size_t>(label)) continue;
        double d = probs[i] / sum - 1.0 / m;
        acc2 += d * d;
    }
    s.inherent_var = acc2 / m;

    s.derived_std = std::sqrt(s.derived_var);
    s.inherent_std = std::sqrt(s.inherent_var);

    if (std::abs(s.derived_avg - (1.0 - s.target_prob) / m) > 1e-12) {
        throw std::logic_error("decomposition_stats: derived average identity failed");
    }
    double reconstructed = m * m * s.derived_avg * s.derived_avg * s.inherent_var;
    // Near-flat wrong blocks put both variances below the rounding noise of
    // the mean, where a pure relative comparison is meaningless; the first
    // floor sits well above accumulated double error and far below any
    // variance of interest. The absolute floor covers saturated teachers at
    // extreme temperatures, where the wrong-class mass itself sinks toward
    // the denormal range and squaring it loses all precision.
    double scale = std::max({std::abs(s.derived_var), std::abs(reconstructed),
                             1e-10 * s.derived_avg * s.derived_avg, 1e-280});
    if (std::abs(s.derived_var - reconstructed) > 1e-10 * scale) {
        throw std::logic_error("decomposition_stats: variance factorization failed");
    }
    return s;
}

}  // namespace

DecompositionStats decomposition_stats(const scaling::LogitRecord& record,
                                       const scaling::TempSpec& temps) {
    scaling::ProbVector p = scaling::apply_temps(record, temps);
    const auto y = static_cast<std::size_t>(record.label);
    double mass = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (i != y) mass += p.probs[i];
    }
    if (mass <= 0.0) {
        // Saturated: the whole wrong block underflowed. Its renormalized
        // shape is still defined by the wrong logits alone, so compute the
        // inherent variance there and report the underflowed derived
        // statistics as the zeros they rounded to.
        const double tau2 = std::holds_alternative<double>(temps)
                                ? std::get<double>(temps)
                                : std::get<scaling::TemperaturePair>(temps).tau2;
        DecompositionStats s;
        s.target_prob = p.probs[y];
        auto wrong = scaling::wrong_logits(record);
        if (wrong.size() == 1) {
            s.inherent_var = 0.0;
        } else {
            scaling::LogitRecord block(std::move(wrong), 0);
            s.inherent_var = whole_variance(scaling::softmax_ts(block, tau2).probs);
        }
        s.inherent_std = std::sqrt(s.inherent_var);
        return s;
    }
    return stats_from_probs(p.probs, record.label);
}

DecompositionStats decomposition_stats(const scaling::ProbVector& p, int label) {
    return stats_from_probs(p.probs, label);
}

DecompositionSummary aggregate(const std::vector<DecompositionStats>& batch) {
    if (batch.empty()) {
        throw std::invalid_argument("aggregate requires a non-empty batch");
    }
    const double n = static_cast<double>(batch.size());
    auto summarize = [&](double DecompositionStats::*field) {
        double mean = 0.0;
        for (const auto& s : batch) {
            mean += s.*field;
        }
        mean /= n;
        double var = 0.0;
        for (const auto& s : batch) {
            double d = s.*field - mean;
            var += d * d;
        }
        return FieldSummary{mean, std::sqrt(var / n)};
    };
    DecompositionSummary out;
    out.target_prob = summarize(&DecompositionStats::target_prob);
    out.derived_avg = summarize(&DecompositionStats::derived_avg);
    out.derived_var = summarize(&DecompositionStats::derived_var);
    out.inherent_var = summarize(&DecompositionStats::inherent_var);
    out.derived_std = summarize(&DecompositionStats::derived_std);
    out.inherent_std = summarize(&DecompositionStats::inherent_std);
    out.count = batch.size();
    return out;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_size(a, b, "spearman");
    std::vector<double> ra = average_ranks(a);
    std::vector<double> rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        ma += ra[i];
        mb += rb[i];
    }
    ma /= n;
    mb /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        double dx = ra[i] - ma;
        double dy = rb[i] - mb;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::domain_error("spearman undefined for a constant vector");
    }
    return sxy / std::sqrt(sxx * syy);
}

double kendall(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_size(a, b, "kendall");
    if (a.size() < 2) {
        throw std::invalid_argument("kendall requires at least two entries");
    }
    long long concordant = 0;
    long long discordant = 0;
    const std::size_t n = a.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double da = a[i] - a[j];
            double db = b[i] - b[j];
            double prod = da * db;
            if (prod > 0.0) {
                ++concordant;
            } else if (prod < 0.0) {
                ++discordant;
            }
        }
    }
    double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return static_cast<double>(concordant - discordant) / pairs;
}

double topk_overlap(const std::vector<double>& a, const std::vector<double>& b,
                    std::size_t k) {
    check_same_size(a, b, "topk_overlap");
    if (k == 0 || k > a.size()) {
        throw std::invalid_argument("topk_overlap k out of range");
    }
    std::vector<std::size_t> ta = topk_indices(a, k);
    std::vector<std::size_t> tb = topk_indices(b, k);
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    std::vector<std::size_t> both;
    std::set_intersection(ta.begin(), ta.end(), tb.begin(), tb.end(),
                          std::back_inserter(both));
    double inter = static_cast<double>(both.size());
    double uni = static_cast<double>(2 * k) - inter;
    return inter / uni;
}

double l1_distance(const std::vector<double>& a, const std::vector<double>& b) {
    check_same_size(a, b, "l1_distance");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        acc += std::abs(a[i] - b[i]);
    }
    return acc;
}

AgreementStats agreement(const std::vector<double>& a, const std::vector<double>& b,
                         std::size_t k) {
    AgreementStats s;
    s.spearman = spearman(a, b);
    s.kendall = kendall(a, b);
    s.topk_overlap = topk_overlap(a, b, k);
    s.l1_distance = l1_distance(a, b);
    return s;
}

bool target_is_argmax(const scaling::LogitRecord& record) {
    double fy = record.logits[static_cast<std::size_t>(record.label)];
    for (double f : record.logits) {
        if (f > fy) {
            return false;
        }
    }
    return true;
}

std::size_t assumption_violations(const std::vector<scaling::LogitRecord>& records) {
    std::size_t count = 0;
    for (const auto& r : records) {
        if (!target_is_argmax(r)) {
            ++count;
        }
    }
    return count;
}

}  // namespace kdlab::metrics
