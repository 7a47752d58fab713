// Acceptance gate: one check per shipped guarantee, one PASS/FAIL line each.
// Exit status is the number of failed checks.

#include <stdexcept>
#include <kdlab/data.hpp>
#include <kdlab/detail/text.hpp>
#include <kdlab/harness.hpp>
#include <kdlab/kd.hpp>
#include <kdlab/metrics.hpp>
#include <kdlab/rng.hpp>
#include <kdlab/scaling.hpp>

#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace {

using kdlab::scaling::apply_temps;
using kdlab::scaling::LogitRecord;
using kdlab::scaling::ProbVector;
using kdlab::scaling::softmax_ts;
using kdlab::scaling::softmax_ts_grad_tau;
using kdlab::scaling::TemperaturePair;
using kdlab::scaling::TempSpec;

struct Outcome {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
};

double elapsed_s(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string fmt(double v) { return kdlab::detail::format_double(v); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<double> wrong_prob_vector(const ProbVector& p, int label) {
    std::vector<double> q;
    q.reserve(p.size() - 1);
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (static_cast<int>(c) != label) q.push_back(p[c]);
    }
    return q;
}

// Counts local maxima after collapsing plateaus (adjacent values within tol).
int count_local_maxima(const std::vector<double>& values, double tol) {
    std::vector<double> w;
    for (double x : values) {
        if (w.empty() || std::abs(x - w.back()) > tol) w.push_back(x);
    }
    if (w.size() == 1) return 1;
    int count = 0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        const bool up_left = i == 0 || w[i] > w[i - 1];
        const bool up_right = i + 1 == w.size() || w[i] > w[i + 1];
        if (up_left && up_right) ++count;
    }
    return count;
}

// The reference experiment: mirrors configs/default.json.
kdlab::harness::ExperimentConfig reference_config() {
    kdlab::harness::ExperimentConfig cfg;
    cfg.data.num_classes = 10;
    cfg.data.input_dim = 20;
    cfg.data.samples_per_class = 100;
    cfg.data.cluster_spread = 1.75;
    cfg.data.block_tightness = 0.45;
    cfg.data.affinity_groups = {{0, 1, 2, 3, 4}, {5, 6, 7, 8, 9}};
    cfg.data.seed = 1;
    cfg.teacher_hidden = {128, 128};
    cfg.baseline_teacher_hidden = std::vector<int>{16};
    cfg.student_hidden = {8};
    cfg.grid.ts = {1.0, 2.0, 4.0, 8.0, 12.0, 16.0};
    cfg.grid.ats = {TemperaturePair(2.0, 1.0), TemperaturePair(3.0, 1.0),
                    TemperaturePair(3.0, 2.0), TemperaturePair(4.0, 2.0),
                    TemperaturePair(4.0, 3.0), TemperaturePair(5.0, 2.0)};
    cfg.teacher_train.epochs = 90;
    cfg.teacher_train.batch_size = 32;
    cfg.teacher_train.learning_rate = 0.05;
    cfg.teacher_train.momentum = 0.9;
    cfg.teacher_train.seed = 1;
    cfg.student_train.epochs = 100;
    cfg.student_train.batch_size = 32;
    cfg.student_train.learning_rate = 0.01;
    cfg.student_train.momentum = 0.9;
    cfg.student_train.seed = 2;
    cfg.conditions = {"kd-ts", "kd-ats", "ils-ts"};
    cfg.seeds = {1, 2, 3};
    return cfg;
}

Outcome check_factorization() {
    Outcome out{1, "derived-variance factorization v(q) = (C-1)^2 e(q)^2 v(q~)", false, ""};
    const auto start = std::chrono::steady_clock::now();
    const std::vector<TempSpec> specs = {
        TempSpec(0.5), TempSpec(1.0), TempSpec(4.0), TempSpec(16.0),
        TempSpec(TemperaturePair(2.0, 1.0)), TempSpec(TemperaturePair(3.0, 1.0)),
        TempSpec(TemperaturePair(3.0, 2.0)), TempSpec(TemperaturePair(4.0, 2.0)),
        TempSpec(TemperaturePair(4.0, 3.0)), TempSpec(TemperaturePair(5.0, 2.0))};
    std::size_t checks = 0;
    std::size_t violations = 0;
    double worst = 0.0;
    int block = 0;
    for (const auto& [classes, count] : std::vector<std::pair<int, std::size_t>>{
             {3, 4000}, {10, 3000}, {100, 3000}}) {
        const auto records = kdlab::harness::synthetic_logits(count, classes, 90 + block++);
        const double cm1 = static_cast<double>(classes - 1);
        for (const auto& r : records) {
            for (const auto& spec : specs) {
                const ProbVector p = apply_temps(r, spec);
                const auto q = wrong_prob_vector(p, r.label);
                const double dv = kdlab::metrics::derived_variance(q);
                const double avg = kdlab::metrics::derived_average(q);
                const double iv = kdlab::metrics::inherent_variance(q);
                const double recon = cm1 * cm1 * avg * avg * iv;
                const double scale =
                    std::max({std::abs(dv), std::abs(recon), 1e-10 * avg * avg});
                const double rel = std::abs(dv - recon) / scale;
                worst = std::max(worst, rel);
                if (rel > 1e-10) ++violations;
                ++checks;
            }
        }
    }
    const double secs = elapsed_s(start);
    out.passed = violations == 0 && secs < 10.0;
    out.detail = std::to_string(checks - violations) + "/" + std::to_string(checks) +
                 " within 1e-10 relative, worst " + fmt(worst) + ", " + fmt(secs) + "s";
    return out;
}

Outcome check_whole_variance_monotone() {
    Outcome out{2, "whole-vector variance non-increasing in temperature", false, ""};
    const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0};
    const auto records = kdlab::harness::synthetic_logits(1000, 10, 101);
    std::size_t violations = 0;
    double worst = 0.0;
    for (const auto& r : records) {
        double prev = -1.0;
        for (double tau : grid) {
            const ProbVector p = softmax_ts(r, tau);
            const double v = kdlab::metrics::whole_variance(p.probs);
            if (prev >= 0.0 && v > prev + 1e-14) {
                ++violations;
                worst = std::max(worst, v - prev);
            }
            prev = v;
        }
    }
    out.passed = violations == 0;
    out.detail = std::to_string(violations) + " violations beyond 1e-14 slack over " +
                 std::to_string(records.size()) + " records x " + std::to_string(grid.size()) +
                 " temperatures, worst rise " + fmt(worst);
    return out;
}

Outcome check_target_monotonicity() {
    Outcome out{3, "target probability falls and derived average rises with temperature", false, ""};
    const std::vector<double> grid = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0};
    const auto records = oracle::random_records(1000, 10, 102, 2.0, true);
    std::size_t p_violations = 0;
    std::size_t e_violations = 0;
    double worst_limit = 0.0;
    for (const auto& r : records) {
        double prev_p = 2.0;
        double prev_e = -1.0;
        for (double tau : grid) {
            const ProbVector p = softmax_ts(r, tau);
            const double py = p[static_cast<std::size_t>(r.label)];
            const double e = kdlab::metrics::derived_average(wrong_prob_vector(p, r.label));
            if (py > prev_p + 1e-14) ++p_violations;
            if (e < prev_e - 1e-14) ++e_violations;
            prev_p = py;
            prev_e = e;
        }
        const ProbVector hot = softmax_ts(r, 1e6);
        const double e_hot = kdlab::metrics::derived_average(wrong_prob_vector(hot, r.label));
        worst_limit = std::max(worst_limit, std::abs(e_hot - 1.0 / 10.0));
    }
    out.passed = p_violations == 0 && e_violations == 0 && worst_limit <= 1e-4;
    out.detail = std::to_string(p_violations) + " target rises, " + std::to_string(e_violations) +
                 " derived-average drops over 1000 records; worst |e - 1/C| at tau=1e6: " +
                 fmt(worst_limit);
    return out;
}

Outcome check_tau_gradient() {
    Outcome out{4, "analytic d p_c / d tau matches central finite differences", false, ""};
    const auto records = kdlab::harness::synthetic_logits(500, 10, 103);
    double worst = 0.0;
    std::size_t checks = 0;
    for (const auto& r : records) {
        for (double tau : {0.7, 2.0, 5.0}) {
            const std::vector<double> grad = softmax_ts_grad_tau(r, tau);
            for (std::size_t c = 0; c < grad.size(); ++c) {
                const double fd = oracle::central_fd(
                    [&](double t) { return softmax_ts(r, t)[c]; }, tau, 1e-5);
                worst = std::max(worst, std::abs(grad[c] - fd));
                ++checks;
            }
        }
    }
    out.passed = worst <= 1e-6;
    out.detail = std::to_string(checks) + " entries, worst |analytic - fd| = " + fmt(worst);
    return out;
}

Outcome check_kd_gradient() {
    Outcome out{5, "combined-loss student gradient matches finite differences and sums to zero",
                false, ""};
    const auto teachers = kdlab::harness::synthetic_logits(200, 10, 104);
    const auto students = kdlab::harness::synthetic_logits(200, 10, 105);
    double worst_fd = 0.0;
    double worst_sum = 0.0;
    for (std::size_t i = 0; i < teachers.size(); ++i) {
        const LogitRecord& t = teachers[i];
        LogitRecord s(students[i].logits, t.label);
        for (double lambda : {0.0, 0.5, 1.0}) {
            for (bool mult : {true, false}) {
                for (int kind = 0; kind < 2; ++kind) {
                    kdlab::kd::LossConfig cfg;
                    cfg.lambda = lambda;
                    cfg.multiply_tau_squared = mult;
                    if (kind == 0) {
                        cfg.teacher_temps = TempSpec(4.0);
                        cfg.student_temp = 4.0;
                    } else {
                        cfg.teacher_temps = TempSpec(TemperaturePair(4.0, 2.0));
                        cfg.student_temp = 1.0;
                    }
                    const std::vector<double> grad = kdlab::kd::grad_student_logits(t, s, cfg);
                    double sum = 0.0;
                    for (std::size_t c = 0; c < grad.size(); ++c) {
                        sum += grad[c];
                        const double fd = oracle::central_fd(
                            [&](double x) {
                                LogitRecord bumped = s;
                                bumped.logits[c] = x;
                                return kdlab::kd::combined_loss(t, bumped, cfg);
                            },
                            s.logits[c], 1e-5);
                        worst_fd = std::max(worst_fd, std::abs(grad[c] - fd));
                    }
                    worst_sum = std::max(worst_sum, std::abs(sum));
                }
            }
        }
    }
    out.passed = worst_fd <= 1e-6 && worst_sum <= 1e-10;
    out.detail = "200 pairs x 12 configs, worst |analytic - fd| = " + fmt(worst_fd) +
                 ", worst |sum| = " + fmt(worst_sum);
    return out;
}

Outcome check_decomposition_identity() {
    Outcome out{6, "decomposition terms reassemble the distillation cross-entropy", false, ""};
    std::size_t violations = 0;
    double worst = 0.0;
    int block = 0;
    for (const auto& [classes, count] : std::vector<std::pair<int, std::size_t>>{
             {3, 3334}, {10, 3333}, {100, 3333}}) {
        const auto teachers = kdlab::harness::synthetic_logits(count, classes, 106 + block);
        const auto students = kdlab::harness::synthetic_logits(count, classes, 206 + block);
        ++block;
        for (std::size_t i = 0; i < teachers.size(); ++i) {
            const LogitRecord& t = teachers[i];
            const TempSpec spec = i % 2 == 0 ? TempSpec(4.0)
                                             : TempSpec(TemperaturePair(4.0, 2.0));
            const ProbVector tp = apply_temps(t, spec);
            const ProbVector sp = softmax_ts(LogitRecord(students[i].logits, t.label), 2.0);
            try {
                const auto terms = kdlab::kd::kd_decompose(tp, sp, t.label);
                const double sum = terms.correct_guidance + terms.smooth_regularization +
                                   terms.class_discriminability;
                const double rel = std::abs(sum - terms.total) /
                                   std::max(1.0, std::abs(terms.total));
                worst = std::max(worst, rel);
                if (rel > 1e-12) ++violations;
            } catch (const std::logic_error&) {
                ++violations;
                worst = std::max(worst, 1.0);
            }
        }
    }
    out.passed = violations == 0;
    out.detail = std::to_string(violations) + " violations beyond 1e-12 over 10000 pairs, worst " +
                 fmt(worst);
    return out;
}

Outcome check_variance_reduction() {
    Outcome out{7, "confident or smoothed-wrong-block teachers have smaller derived variance",
                false, ""};
    std::size_t raise_violations = 0;
    std::size_t contract_violations = 0;
    std::size_t total = 0;
    for (int classes : {3, 10}) {
        const auto records = kdlab::harness::synthetic_logits(500, classes, 107 + classes);
        for (const auto& r : records) {
            const auto base_stats = kdlab::metrics::decomposition_stats(r, TempSpec(1.0));

            LogitRecord raised = r;
            raised.logits[static_cast<std::size_t>(r.label)] += 1.0;
            const auto raised_stats = kdlab::metrics::decomposition_stats(raised, TempSpec(1.0));
            if (!(raised_stats.derived_var < base_stats.derived_var)) ++raise_violations;

            LogitRecord contracted = r;
            double mean = 0.0;
            for (std::size_t c = 0; c < r.logits.size(); ++c) {
                if (static_cast<int>(c) != r.label) mean += r.logits[c];
            }
            mean /= static_cast<double>(r.logits.size() - 1);
            for (std::size_t c = 0; c < contracted.logits.size(); ++c) {
                if (static_cast<int>(c) != r.label) {
                    contracted.logits[c] = mean + 0.5 * (contracted.logits[c] - mean);
                }
            }
            const auto contracted_stats =
                kdlab::metrics::decomposition_stats(contracted, TempSpec(1.0));
            if (!(contracted_stats.derived_var < base_stats.derived_var)) ++contract_violations;
            ++total;
        }
    }
    out.passed = raise_violations == 0 && contract_violations == 0;
    out.detail = std::to_string(raise_violations) + " raise-target and " +
                 std::to_string(contract_violations) + " contract-wrong violations over " +
                 std::to_string(total) + " constructions";
    return out;
}

struct ExperimentResults {
    std::vector<kdlab::harness::TeacherRun> large;
    std::vector<kdlab::harness::TeacherRun> small;
    std::vector<double> ratios;
    std::map<std::string, std::map<std::pair<double, double>, std::vector<double>>> accs;
    double seconds = 0.0;
};

ExperimentResults run_reference_experiment(const kdlab::harness::ExperimentConfig& cfg,
                                           const kdlab::data::SplitDataset& dataset) {
    ExperimentResults res;
    const auto start = std::chrono::steady_clock::now();
    for (std::uint64_t seed : cfg.seeds) {
        res.large.push_back(kdlab::harness::run_teacher(cfg, dataset, cfg.teacher_hidden, seed));
        res.small.push_back(
            kdlab::harness::run_teacher(cfg, dataset, *cfg.baseline_teacher_hidden, seed));
        const double small_mean = res.small.back().mean_target_logit;
        res.ratios.push_back(small_mean > 0.0
                                 ? res.large.back().mean_target_logit / small_mean
                                 : std::numeric_limits<double>::infinity());
    }
    for (const std::string& condition : cfg.conditions) {
        const bool ats = condition == "kd-ats";
        const auto points = ats ? cfg.grid.ats
                                : [&] {
                                      std::vector<TemperaturePair> ps;
                                      for (double t : cfg.grid.ts) ps.emplace_back(t, t);
                                      return ps;
                                  }();
        for (const TemperaturePair& taus : points) {
            auto& cell = res.accs[condition][{taus.tau1, taus.tau2}];
            for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
                const auto run = kdlab::harness::run_distillation(cfg, dataset, res.large[i],
                                                                  condition, taus, cfg.seeds[i]);
                cell.push_back(run.student_test_acc);
            }
        }
    }
    res.seconds = elapsed_s(start);
    return res;
}

Outcome check_dv_unimodal(const kdlab::harness::ExperimentConfig& cfg,
                          const ExperimentResults& exp) {
    Outcome out{8, "mean derived variance is unimodal in temperature for over-confident teachers",
                false, ""};
    const std::vector<double> grid = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    std::size_t checked = 0;
    std::size_t bad = 0;
    std::string peaks;
    for (std::size_t i = 0; i < exp.large.size(); ++i) {
        if (exp.ratios[i] < 1.5) continue;
        ++checked;
        std::vector<double> curve;
        for (double tau : grid) {
            double sum = 0.0;
            for (const auto& r : exp.large[i].train_logits.records) {
                sum += kdlab::metrics::decomposition_stats(r, TempSpec(tau)).derived_var;
            }
            curve.push_back(sum / static_cast<double>(exp.large[i].train_logits.size()));
        }
        const int maxima = count_local_maxima(curve, 1e-12);
        if (maxima != 1) ++bad;
        if (!peaks.empty()) peaks += ", ";
        peaks += "seed " + std::to_string(cfg.seeds[i]) + ": " + std::to_string(maxima);
    }
    out.passed = checked > 0 && bad == 0;
    out.detail = std::to_string(checked) + " over-confident teachers, local maxima counts [" +
                 peaks + "]";
    return out;
}

Outcome check_phenomenon(const kdlab::harness::ExperimentConfig& cfg,
                         const ExperimentResults& exp) {
    Outcome out{9, "larger teacher over-confident; plain labels lose to distilled; asymmetric "
                   "pairs match or beat single temperature",
                false, ""};
    const double ratio_median = median(exp.ratios);

    auto pooled_median = [&](const std::string& condition) {
        std::vector<double> all;
        for (const auto& [taus, accs] : exp.accs.at(condition)) {
            all.insert(all.end(), accs.begin(), accs.end());
        }
        return median(all);
    };
    auto best_grid_median = [&](const std::string& condition) {
        double best = 0.0;
        for (const auto& [taus, accs] : exp.accs.at(condition)) {
            best = std::max(best, median(accs));
        }
        return best;
    };

    const double ils_median = pooled_median("ils-ts");
    const double kd_median = pooled_median("kd-ts");
    const double best_ts = best_grid_median("kd-ts");
    const double best_ats = best_grid_median("kd-ats");

    const bool a = ratio_median >= 1.5;
    const bool b = ils_median < kd_median;
    const bool c = best_ats >= best_ts;
    const bool in_budget = exp.seconds <= 900.0;
    out.passed = a && b && c && in_budget;
    out.detail = "target-logit ratio median " + fmt(ratio_median) + " (>= 1.5: " +
                 (a ? "yes" : "NO") + "); ils median " + fmt(ils_median) + " vs kd median " +
                 fmt(kd_median) + " (<: " + (b ? "yes" : "NO") + "); best ats " + fmt(best_ats) +
                 " vs best ts " + fmt(best_ts) + " (>=: " + (c ? "yes" : "NO") + "); " +
                 fmt(exp.seconds) + "s of 900s budget; seeds " + std::to_string(cfg.seeds.size());
    return out;
}

Outcome check_agreement(const kdlab::harness::ExperimentConfig& cfg,
                        const kdlab::data::SplitDataset& dataset, const ExperimentResults& exp) {
    Outcome out{10, "rank-agreement metrics behave and separate real teachers from a "
                    "label-shuffled control",
                false, ""};

    // Exact Kendall value with a known discordant count: first six of sixteen reversed.
    std::vector<double> x(16), y(16);
    for (std::size_t i = 0; i < 16; ++i) {
        x[i] = static_cast<double>(i + 1);
        y[i] = static_cast<double>(i < 6 ? 6 - i : i + 1);
    }
    const double tau = kdlab::metrics::kendall(x, y);
    const double pairwise = (tau + 1.0) / 2.0;
    const bool exact = tau == 0.75 && pairwise == 0.875;

    bool monotone_ok = true;
    const auto records = kdlab::harness::synthetic_logits(100, 12, 110);
    for (const auto& r : records) {
        std::vector<double> t(r.logits.size());
        for (std::size_t c = 0; c < t.size(); ++c) t[c] = std::exp(0.3 * r.logits[c]) + 5.0;
        if (kdlab::metrics::spearman(r.logits, t) != 1.0 ||
            kdlab::metrics::kendall(r.logits, t) != 1.0) {
            monotone_ok = false;
        }
    }

    kdlab::data::SplitDataset shuffled = dataset;
    kdlab::rng::Engine eng(kdlab::rng::mix_seed(cfg.data.seed, 0x73687566));
    eng.shuffle(shuffled.train.labels);
    const auto control =
        kdlab::harness::run_teacher(cfg, shuffled, cfg.teacher_hidden, cfg.seeds[0]);

    auto mean_agreement = [&](const kdlab::harness::TeacherRun& a,
                              const kdlab::harness::TeacherRun& b) {
        kdlab::metrics::AgreementStats acc{0.0, 0.0, 0.0, 0.0};
        const std::size_t n = a.train_logits.size();
        for (std::size_t i = 0; i < n; ++i) {
            const ProbVector pa = softmax_ts(a.train_logits.records[i], 1.0);
            const ProbVector pb = softmax_ts(b.train_logits.records[i], 1.0);
            const auto s = kdlab::metrics::agreement(pa.probs, pb.probs, cfg.topk);
            acc.spearman += s.spearman;
            acc.kendall += s.kendall;
            acc.topk_overlap += s.topk_overlap;
            acc.l1_distance += s.l1_distance;
        }
        const double dn = static_cast<double>(n);
        return kdlab::metrics::AgreementStats{acc.spearman / dn, acc.kendall / dn,
                                              acc.topk_overlap / dn, acc.l1_distance / dn};
    };
    const auto peer = mean_agreement(exp.large[0], exp.large[1]);
    const auto ctrl = mean_agreement(exp.large[0], control);
    const bool separates = peer.spearman > ctrl.spearman && peer.kendall > ctrl.kendall &&
                           peer.topk_overlap > ctrl.topk_overlap &&
                           peer.l1_distance < ctrl.l1_distance;

    out.passed = exact && monotone_ok && separates;
    out.detail = std::string("kendall 0.75 -> pairwise 0.875: ") + (exact ? "exact" : "NO") +
                 "; monotone transforms give 1.0: " + (monotone_ok ? "yes" : "NO") +
                 "; peer vs control spearman " + fmt(peer.spearman) + " vs " +
                 fmt(ctrl.spearman) + ", kendall " + fmt(peer.kendall) + " vs " +
                 fmt(ctrl.kendall) + ", top-k " + fmt(peer.topk_overlap) + " vs " +
                 fmt(ctrl.topk_overlap) + ", l1 " + fmt(peer.l1_distance) + " vs " +
                 fmt(ctrl.l1_distance);
    return out;
}

Outcome check_determinism() {
    Outcome out{11, "identical config produces byte-identical report files", false, ""};
    const std::string config_text = R"json({
  "data": {"num_classes": 3, "input_dim": 4, "samples_per_class": 12,
           "cluster_spread": 0.6, "block_tightness": 0.4, "seed": 11},
  "teacher_hidden": [8],
  "baseline_teacher_hidden": [4],
  "student_hidden": [4],
  "teacher_train": {"epochs": 4, "batch_size": 12, "learning_rate": 0.1, "seed": 1},
  "student_train": {"epochs": 3, "batch_size": 12, "learning_rate": 0.1, "seed": 2},
  "grid": {"ts": [1, 2], "ats": [[2, 1]]},
  "conditions": ["kd-ts", "kd-ats", "ils-ts"],
  "seeds": [1, 2],
  "topk": 2
})json";
    namespace fs = std::filesystem;
    const fs::path root = "acceptance_tmp";
    fs::remove_all(root);
    const fs::path dir_a = root / "run_a";
    const fs::path dir_b = root / "run_b";

    auto run_once = [&](const fs::path& dir, int jobs) {
        auto cfg = kdlab::harness::config_from_json_text(config_text);
        cfg.output_dir = dir;
        fs::create_directories(dir);
        const auto report = kdlab::harness::sweep(cfg, jobs, dir);
        kdlab::harness::emit_report(report, dir);
    };
    run_once(dir_a, 1);
    run_once(dir_b, 4);

    auto read_bytes = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(dir_a)) {
        names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    std::size_t compared = 0;
    std::size_t mismatched = 0;
    for (const auto& name : names) {
        if (!fs::exists(dir_b / name) || read_bytes(dir_a / name) != read_bytes(dir_b / name)) {
            ++mismatched;
        }
        ++compared;
    }
    std::size_t extra_b = 0;
    for (const auto& entry : fs::directory_iterator(dir_b)) {
        if (!fs::exists(dir_a / entry.path().filename())) ++extra_b;
    }
    out.passed = compared > 0 && mismatched == 0 && extra_b == 0;
    out.detail = std::to_string(compared - mismatched) + "/" + std::to_string(compared) +
                 " files byte-identical across serial and 4-worker runs";
    return out;
}

}  // namespace

int main() {
    std::vector<Outcome> outcomes;
    outcomes.push_back(check_factorization());
    outcomes.push_back(check_whole_variance_monotone());
    outcomes.push_back(check_target_monotonicity());
    outcomes.push_back(check_tau_gradient());
    outcomes.push_back(check_kd_gradient());
    outcomes.push_back(check_decomposition_identity());
    outcomes.push_back(check_variance_reduction());

    const auto cfg = reference_config();
    const auto dataset = kdlab::data::generate(cfg.data);
    const auto experiment = run_reference_experiment(cfg, dataset);
    outcomes.push_back(check_dv_unimodal(cfg, experiment));
    outcomes.push_back(check_phenomenon(cfg, experiment));
    outcomes.push_back(check_agreement(cfg, dataset, experiment));
    outcomes.push_back(check_determinism());

    std::sort(outcomes.begin(), outcomes.end(),
              [](const Outcome& a, const Outcome& b) { return a.id < b.id; });
    int failures = 0;
    for (const auto& o : outcomes) {
        if (!o.passed) ++failures;
        std::printf("%s %2d: %s (%s)\n", o.passed ? "PASS" : "FAIL", o.id, o.name.c_str(),
                    o.detail.c_str());
    }
    if (failures == 0) {
        std::printf("all 11 acceptance checks passed\n");
    } else {
        std::printf("%d acceptance checks failed\n", failures);
    }
    return failures;
}
