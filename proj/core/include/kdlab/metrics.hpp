#pragma once

#include <cstddef>
#include <vector>

#include "kdlab/scaling.hpp"

namespace kdlab::metrics {

/// Summary of one probability vector's split into target mass and
/// wrong-class shape. Constructed by decomposition_stats, which checks two
/// identities on construction:
///   derived_avg  == (1 - target_prob) / (C - 1)      (1e-12 absolute)
///   derived_var  == (C-1)^2 * derived_avg^2 * inherent_var   (1e-10 relative)
struct DecompositionStats {
    double target_prob = 0.0;
    double derived_avg = 0.0;
    double derived_var = 0.0;
    double inherent_var = 0.0;
    double derived_std = 0.0;
    double inherent_std = 0.0;
};

/// Mean and population standard deviation of each DecompositionStats field
/// over a batch of records.
struct FieldSummary {
    double mean = 0.0;
    double stdev = 0.0;
};

struct DecompositionSummary {
    FieldSummary target_prob;
    FieldSummary derived_avg;
    FieldSummary derived_var;
    FieldSummary inherent_var;
    FieldSummary derived_std;
    FieldSummary inherent_std;
    std::size_t count = 0;
};

/// Rank and distance agreement between two probability vectors (or between
/// two models' outputs on the same sample).
struct AgreementStats {
    double spearman = 0.0;
    double kendall = 0.0;
    double topk_overlap = 0.0;
    double l1_distance = 0.0;
};

/// Mean of the wrong-class probabilities: e(q) = sum_j q_j / (C-1), where
/// the divisor is the length of the wrong-class vector.
double derived_average(const std::vector<double>& wrong_probs);

/// Variance of the wrong-class probabilities around e(q), divisor C-1.
double derived_variance(const std::vector<double>& wrong_probs);

/// Variance of the renormalized wrong-class distribution q~ = q / sum(q),
/// divisor C-1. Measures how uneven the wrong-class shape is independent of
/// how much mass the target keeps.
double inherent_variance(const std::vector<double>& wrong_probs);

/// Variance of a full probability vector around 1/C with divisor C. Equals
/// (1/C) * sum p_c^2 - 1/C^2.
double whole_variance(const std::vector<double>& probs);

/// Splits one temperature-scaled softmax evaluation into the stats above.
/// The wrong-class renormalization reuses the already computed
/// probabilities (q~ = q / (1 - p_y)); no second softmax is evaluated.
/// When the whole wrong block underflows to zero (saturated logits at an
/// extreme temperature ratio), the derived statistics are reported as zero
/// and the inherent variance is computed from the wrong logits directly,
/// which stays well defined.
DecompositionStats decomposition_stats(const scaling::LogitRecord& record,
                                       const scaling::TempSpec& temps);

/// Same, for a probability vector that is already available. With only
/// probabilities to work from, a fully underflowed wrong block raises
/// std::domain_error here instead.
DecompositionStats decomposition_stats(const scaling::ProbVector& p, int label);

/// Mean and population standard deviation per field. Throws on empty input.
DecompositionSummary aggregate(const std::vector<DecompositionStats>& batch);

/// Spearman rank correlation with average (fractional) ranks for ties.
/// Exactly 1 when the two vectors induce identical rankings.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Kendall's tau-a: (concordant - discordant) / (n choose 2). Pairs tied in
/// either input count toward the denominator only. The fraction of
/// concordant pairs recovers as (tau + 1) / 2.
double kendall(const std::vector<double>& a, const std::vector<double>& b);

/// Jaccard overlap |A intersect B| / |A union B| of the two top-k index
/// sets. Ties are broken toward the smaller class index.
double topk_overlap(const std::vector<double>& a, const std::vector<double>& b,
                    std::size_t k);

/// Sum of absolute differences.
double l1_distance(const std::vector<double>& a, const std::vector<double>& b);

/// All four agreement metrics at once.
AgreementStats agreement(const std::vector<double>& a, const std::vector<double>& b,
                         std::size_t k);

/// True when the record's target logit is at least every other logit, the
/// ordering assumption behind the monotone-shrinkage propositions.
bool target_is_argmax(const scaling::LogitRecord& record);

/// Number of records violating that assumption.
std::size_t assumption_violations(const std::vector<scaling::LogitRecord>& records);

}  // namespace kdlab::metrics
