#include "kdlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "kdlab/rng.hpp"

namespace kdlab::harness {

namespace {

/// Hard-label cross entropy and its logit gradient, inlined for the
/// training hot path.
nn::SampleLoss ce_sample(const std::vector<double>& logits, int label) {
    nn::SampleLoss out;
    double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    out.grad_logits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double e = std::exp(logits[i] - m);
        out.grad_logits[i] = e;
        sum += e;
    }
    for (double& g : out.grad_logits) {
        g /= sum;
    }
    out.loss = std::log(sum) + m - logits[static_cast<std::size_t>(label)];
    out.grad_logits[static_cast<std::size_t>(label)] -= 1.0;
    return out;
}

/// Runs tasks [0, count) across `jobs` threads. Each task writes only to
/// its own output slot, so the result is identical to the serial order.
template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            std::size_t i = next.fetch_add(1);
            if (i >= count) break;
            fn(i);
        }
    };
    std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), count);
    std::vector<std::thread> pool;
    pool.reserve(n_threads);
    for (std::size_t t = 0; t < n_threads; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& th : pool) {
        th.join();
    }
}

std::vector<int> full_dims(int input_dim, const std::vector<int>& hidden, int classes) {
    std::vector<int> dims;
    dims.reserve(hidden.size() + 2);
    dims.push_back(input_dim);
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(classes);
    return dims;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TeacherRun run_teacher(const ExperimentConfig& config,
                       const data::SplitDataset& dataset,
                       const std::vector<int>& hidden_dims, std::uint64_t run_seed) {
    nn::TrainConfig train_cfg = config.teacher_train;
    train_cfg.seed = rng::mix_seed(train_cfg.seed, run_seed);

    nn::MlpModel model = nn::init_model(
        full_dims(dataset.train.input_dim, hidden_dims, dataset.train.num_classes),
        rng::mix_seed(train_cfg.seed, 0x7465616bULL));

    nn::LossFn loss = [](std::size_t, const std::vector<double>& logits, int label) {
        return ce_sample(logits, label);
    };
    nn::train(model, dataset.train, dataset.test, train_cfg, loss);

    TeacherRun out;
    out.train_logits = nn::collect_logits(model, dataset.train);
    out.train_acc = nn::accuracy(model, dataset.train);
    out.test_acc = nn::accuracy(model, dataset.test);
    double acc = 0.0;
    for (const auto& r : out.train_logits.records) {
        acc += r.logits[static_cast<std::size_t>(r.label)];
    }
    out.mean_target_logit = acc / static_cast<double>(out.train_logits.size());
    out.model = std::move(model);
    return out;
}

namespace {

bool condition_uses_ats(const std::string& condition) {
    return condition.size() > 4 && condition.compare(condition.size() - 4, 4, "-ats") == 0;
}

bool condition_uses_ils(const std::string& condition) {
    return condition.rfind("ils", 0) == 0;
}

scaling::TempSpec temps_for(const std::string& condition, scaling::TemperaturePair taus) {
    if (condition == "nokd") {
        return 1.0;
    }
    if (condition_uses_ats(condition)) {
        return taus;
    }
    return taus.tau1;
}

}  // namespace

DistillResult run_distillation(const ExperimentConfig& config,
                               const data::SplitDataset& dataset,
                               const TeacherRun& teacher, const std::string& condition,
                               scaling::TemperaturePair taus, std::uint64_t run_seed) {
    if (!condition_is_valid(condition)) {
        throw std::invalid_argument("unknown condition '" + condition + "'");
    }

    scaling::TempSpec temps = temps_for(condition, taus);
    kd::LossConfig loss_cfg;
    loss_cfg.lambda = condition == "nokd" ? 0.0 : config.loss.lambda;
    loss_cfg.teacher_temps = temps;
    loss_cfg.student_temp = config.loss.student_temp.resolve(temps);
    loss_cfg.multiply_tau_squared = config.loss.multiply_tau_squared;
    loss_cfg.validate();

    const bool use_ils = condition_uses_ils(condition);
    const auto n_train = teacher.train_logits.size();
    std::vector<scaling::ProbVector> soft_labels;
    std::vector<metrics::DecompositionStats> stats;
    soft_labels.reserve(n_train);
    stats.reserve(n_train);
    for (const auto& r : teacher.train_logits.records) {
        scaling::ProbVector label =
            use_ils ? kd::ils_label(r, loss_cfg) : kd::teacher_label(r, loss_cfg);
        stats.push_back(metrics::decomposition_stats(label, r.label));
        soft_labels.push_back(std::move(label));
    }

    nn::TrainConfig train_cfg = config.student_train;
    train_cfg.seed = rng::mix_seed(train_cfg.seed, run_seed);

    nn::MlpModel student = nn::init_model(
        full_dims(dataset.train.input_dim, config.student_hidden,
                  dataset.train.num_classes),
        rng::mix_seed(train_cfg.seed, 0x73747564ULL));

    nn::LossFn loss;
    if (condition == "nokd") {
        loss = [](std::size_t, const std::vector<double>& logits, int label) {
            return ce_sample(logits, label);
        };
    } else {
        loss = [&soft_labels, &loss_cfg](std::size_t idx,
                                         const std::vector<double>& logits, int label) {
            scaling::LogitRecord record(logits, label);
            const scaling::ProbVector& soft = soft_labels[idx];
            nn::SampleLoss out;
            out.loss = kd::combined_loss(soft, record, loss_cfg);
            out.grad_logits = kd::grad_student_logits(soft, record, loss_cfg);
            return out;
        };
    }
    nn::train(student, dataset.train, dataset.test, train_cfg, loss);

    DistillResult result;
    result.student_test_acc = nn::accuracy(student, dataset.test);
    result.soft_label_stats = metrics::aggregate(stats);
    return result;
}

RunReport sweep(const ExperimentConfig& config, int jobs,
                const std::optional<std::filesystem::path>& teacher_artifacts) {
    config.validate();
    data::SplitDataset dataset = data::generate(config.data);
    if (teacher_artifacts) {
        std::filesystem::create_directories(*teacher_artifacts);
    }

    RunReport report;
    report.hash = config_hash(config);
    report.seeds = config.seeds;

    const std::size_t n_seeds = config.seeds.size();
    std::vector<TeacherRun> teachers(n_seeds);
    std::vector<TeacherRun> baselines(config.baseline_teacher_hidden ? n_seeds : 0);

    parallel_for(n_seeds + baselines.size(), jobs, [&](std::size_t i) {
        bool is_baseline = i >= n_seeds;
        std::size_t s = is_baseline ? i - n_seeds : i;
        TeacherRun& slot = is_baseline ? baselines[s] : teachers[s];
        slot = run_teacher(config, dataset,
                           is_baseline ? *config.baseline_teacher_hidden
                                       : config.teacher_hidden,
                           config.seeds[s]);
        if (teacher_artifacts) {
            std::string stem = (is_baseline ? "baseline_s" : "teacher_s") +
                               std::to_string(config.seeds[s]);
            nn::write_checkpoint(*teacher_artifacts / (stem + ".ckpt.json"), slot.model);
            data::write_logit_file(*teacher_artifacts / (stem + "_logits.csv"),
                                   slot.train_logits);
        }
    });

    for (std::size_t s = 0; s < n_seeds; ++s) {
        report.teachers.push_back({config.seeds[s], teachers[s].train_acc,
                                   teachers[s].test_acc, teachers[s].mean_target_logit});
    }
    for (std::size_t s = 0; s < baselines.size(); ++s) {
        report.baseline_teachers.push_back({config.seeds[s], baselines[s].train_acc,
                                            baselines[s].test_acc,
                                            baselines[s].mean_target_logit});
    }

    if (!baselines.empty()) {
        std::vector<double> ratios;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            if (baselines[s].mean_target_logit > 0.0) {
                ratios.push_back(teachers[s].mean_target_logit /
                                 baselines[s].mean_target_logit);
            }
        }
        if (!ratios.empty()) {
            double ratio = median(ratios);
            report.target_logit_ratio = ratio;
            report.over_confident = ratio >= 1.5;
        }

        metrics::AgreementStats agg;
        std::size_t count = 0;
        for (std::size_t s = 0; s < n_seeds; ++s) {
            const auto& a = teachers[s].train_logits.records;
            const auto& b = baselines[s].train_logits.records;
            for (std::size_t i = 0; i < a.size(); ++i) {
                scaling::ProbVector pa = scaling::softmax_ts(a[i], 1.0);
                scaling::ProbVector pb = scaling::softmax_ts(b[i], 1.0);
                metrics::AgreementStats st = metrics::agreement(
                    pa.probs, pb.probs, static_cast<std::size_t>(config.topk));
                agg.spearman += st.spearman;
                agg.kendall += st.kendall;
                agg.topk_overlap += st.topk_overlap;
                agg.l1_distance += st.l1_distance;
                ++count;
            }
        }
        if (count > 0) {
            double inv = 1.0 / static_cast<double>(count);
            agg.spearman *= inv;
            agg.kendall *= inv;
            agg.topk_overlap *= inv;
            agg.l1_distance *= inv;
            report.teacher_agreement = agg;
        }
    }

    struct Cell {
        std::string condition;
        scaling::TemperaturePair taus{1.0, 1.0};
        std::size_t seed_index = 0;
    };
    std::vector<Cell> cells;
    for (const auto& condition : config.conditions) {
        std::vector<scaling::TemperaturePair> points;
        if (condition == "nokd") {
            points.push_back({1.0, 1.0});
        } else if (condition_uses_ats(condition)) {
            points = config.grid.ats;
        } else {
            for (double tau : config.grid.ts) {
                points.push_back({tau, tau});
            }
        }
        for (const auto& taus : points) {
            for (std::size_t s = 0; s < n_seeds; ++s) {
                cells.push_back({condition, taus, s});
            }
        }
    }

    report.rows.resize(cells.size());
    parallel_for(cells.size(), jobs, [&](std::size_t i) {
        const Cell& cell = cells[i];
        const TeacherRun& teacher = teachers[cell.seed_index];
        DistillResult res = run_distillation(config, dataset, teacher, cell.condition,
                                             cell.taus, config.seeds[cell.seed_index]);
        ReportRow& row = report.rows[i];
        row.condition = cell.condition;
        row.tau1 = cell.taus.tau1;
        row.tau2 = cell.taus.tau2;
        row.seed = config.seeds[cell.seed_index];
        row.teacher_train_acc = teacher.train_acc;
        row.teacher_test_acc = teacher.test_acc;
        row.student_test_acc = res.student_test_acc;
        row.da_mean = res.soft_label_stats.derived_avg.mean;
        row.dv_mean = res.soft_label_stats.derived_var.mean;
        row.iv_mean = res.soft_label_stats.inherent_var.mean;
    });

    if (!teachers.empty()) {
        const auto& records = teachers.front().train_logits.records;
        const double lo = 0.1;
        const double hi = 16.0;
        const int n_points = 25;
        for (int i = 0; i < n_points; ++i) {
            double tau =
                lo * std::pow(hi / lo, static_cast<double>(i) / (n_points - 1));
            CurvePoint pt;
            pt.tau = tau;
            std::vector<metrics::DecompositionStats> ts_stats;
            std::vector<metrics::DecompositionStats> ats_stats;
            ts_stats.reserve(records.size());
            ats_stats.reserve(records.size());
            scaling::TemperaturePair pair(1.25 * tau, 0.75 * tau);
            for (const auto& r : records) {
                ts_stats.push_back(metrics::decomposition_stats(r, tau));
                ats_stats.push_back(metrics::decomposition_stats(r, pair));
            }
            auto ts_sum = metrics::aggregate(ts_stats);
            auto ats_sum = metrics::aggregate(ats_stats);
            pt.ts_da = ts_sum.derived_avg.mean;
            pt.ts_dv = ts_sum.derived_var.mean;
            pt.ts_iv = ts_sum.inherent_var.mean;
            pt.ats_da = ats_sum.derived_avg.mean;
            pt.ats_dv = ats_sum.derived_var.mean;
            pt.ats_iv = ats_sum.inherent_var.mean;
            report.curves.push_back(pt);
        }
    }

    return report;
}

}  // namespace kdlab::harness
