#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kdlab/data.hpp"
#include "kdlab/kd.hpp"
#include "kdlab/metrics.hpp"
#include "kdlab/nn.hpp"

namespace kdlab::harness {

/// How the student's softmax temperature inside the distillation term is
/// chosen. "match" uses the teacher's uniform temperature under uniform
/// scaling and 1.0 under asymmetric scaling (whose two temperatures give
/// the student nothing to match); a fixed policy always uses `fixed`.
struct StudentTempPolicy {
    bool match_teacher = true;
    double fixed = 1.0;

    double resolve(const scaling::TempSpec& teacher_temps) const;
};

struct LossSpec {
    double lambda = 0.5;
    bool multiply_tau_squared = true;
    StudentTempPolicy student_temp;
};

/// Temperature grid for the sweep: uniform temperatures and
/// (target, non-target) pairs.
struct GridSpec {
    std::vector<double> ts;
    std::vector<scaling::TemperaturePair> ats;
};

/// A sweep condition names the soft-label recipe and which half of the grid
/// it walks:
///   "nokd"    pure hard-label training (single run per seed)
///   "kd-ts"   distillation, uniform temperatures from grid.ts
///   "kd-ats"  distillation, pairs from grid.ats
///   "ils-ts"  flattened soft labels (wrong classes averaged), grid.ts
///   "ils-ats" flattened soft labels, grid.ats
bool condition_is_valid(const std::string& condition);

struct ExperimentConfig {
    data::SyntheticSpec data;
    std::vector<int> teacher_hidden = {128, 128};
    std::optional<std::vector<int>> baseline_teacher_hidden;
    std::vector<int> student_hidden = {8};
    nn::TrainConfig teacher_train = {.epochs = 90,
                                     .batch_size = 32,
                                     .learning_rate = 0.05,
                                     .momentum = 0.9,
                                     .lr_decay = {},
                                     .seed = 1};
    nn::TrainConfig student_train = {.epochs = 100,
                                     .batch_size = 32,
                                     .learning_rate = 0.01,
                                     .momentum = 0.9,
                                     .lr_decay = {},
                                     .seed = 2};
    LossSpec loss;
    GridSpec grid;
    std::vector<std::string> conditions = {"kd-ts", "kd-ats"};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
    int topk = 5;
    std::filesystem::path output_dir = "kdlab_out";

    void validate() const;
};

/// Reads an ExperimentConfig from JSON. Missing keys keep their defaults;
/// malformed values raise data::ParseError with the offending key in the
/// message.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig config_from_json_text(const std::string& text);

/// Fingerprint of everything that defines the experiment except the run
/// seeds and the output directory, as a 16-hex-digit string. Two runs of
/// the same experiment with different seed lists share a hash.
std::string config_hash(const ExperimentConfig& config);

/// A trained teacher (or baseline) plus everything downstream steps need.
struct TeacherRun {
    nn::MlpModel model;
    data::LogitDataset train_logits;
    double train_acc = 0.0;
    double test_acc = 0.0;
    /// Mean target-class logit over the training set; the scale on which
    /// over-confidence is judged.
    double mean_target_logit = 0.0;
};

/// Trains a teacher on the config's synthetic task. The dataset is fixed by
/// config.data.seed; run_seed perturbs only initialization and shuffling,
/// so different run seeds give distinct models for the same task.
TeacherRun run_teacher(const ExperimentConfig& config,
                       const data::SplitDataset& dataset,
                       const std::vector<int>& hidden_dims, std::uint64_t run_seed);

/// One grid point: trains a student against the teacher's soft labels.
struct DistillResult {
    double student_test_acc = 0.0;
    /// Decomposition statistics of the teacher's soft labels at this grid
    /// point, aggregated over the training set.
    metrics::DecompositionSummary soft_label_stats;
};

DistillResult run_distillation(const ExperimentConfig& config,
                               const data::SplitDataset& dataset,
                               const TeacherRun& teacher, const std::string& condition,
                               scaling::TemperaturePair taus, std::uint64_t run_seed);

/// One row of the sweep's results table.
struct ReportRow {
    std::string condition;
    double tau1 = 1.0;
    double tau2 = 1.0;
    std::uint64_t seed = 0;
    double teacher_train_acc = 0.0;
    double teacher_test_acc = 0.0;
    double student_test_acc = 0.0;
    double da_mean = 0.0;
    double dv_mean = 0.0;
    double iv_mean = 0.0;
};

struct TeacherSummary {
    std::uint64_t seed = 0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    double mean_target_logit = 0.0;
};

/// Derived/inherent statistics of one teacher's soft labels as the
/// temperature varies, under uniform scaling and under the coupled
/// asymmetric pair (1.25 tau, 0.75 tau).
struct CurvePoint {
    double tau = 0.0;
    double ts_da = 0.0, ts_dv = 0.0, ts_iv = 0.0;
    double ats_da = 0.0, ats_dv = 0.0, ats_iv = 0.0;
};

struct RunReport {
    std::string hash;
    std::vector<std::uint64_t> seeds;
    std::vector<ReportRow> rows;
    std::vector<TeacherSummary> teachers;
    std::vector<TeacherSummary> baseline_teachers;
    /// Median over seeds of (teacher mean target logit) / (baseline mean
    /// target logit); present when a baseline is configured.
    std::optional<double> target_logit_ratio;
    /// Whether that ratio clears the 1.5x over-confidence threshold.
    std::optional<bool> over_confident;
    /// Agreement between teacher and baseline probabilities at temperature
    /// 1 on training samples, averaged over samples and seeds.
    std::optional<metrics::AgreementStats> teacher_agreement;
    std::vector<CurvePoint> curves;
};

/// Runs every (condition, grid point, seed) cell. Teachers are trained once
/// per seed and shared across grid points. Rows come out grid-major,
/// seed-minor. jobs > 1 distributes independent cells across threads
/// without changing any result or ordering. When teacher_artifacts is set,
/// each trained teacher's checkpoint and training logits are written there
/// as teacher_s<seed>.ckpt.json / teacher_s<seed>_logits.csv (baselines as
/// baseline_s<seed>...).
RunReport sweep(const ExperimentConfig& config, int jobs = 1,
                const std::optional<std::filesystem::path>& teacher_artifacts =
                    std::nullopt);

/// One numeric check over a set of logit records.
struct CheckResult {
    std::string name;
    std::size_t passed = 0;
    std::size_t total = 0;
    double max_violation = 0.0;

    bool ok() const { return passed == total; }
};

struct VerifyOptions {
    std::vector<double> ts_grid = {1.0, 2.0, 4.0, 8.0, 12.0, 16.0};
    std::vector<scaling::TemperaturePair> ats_grid;
    /// Temperatures for the monotone-shrinkage checks.
    std::vector<double> monotone_grid = {0.1, 0.5, 1.0, 2.0, 4.0, 8.0, 10.0};
    double fd_step = 1e-5;

    VerifyOptions();
};

/// Numeric verification of the library's identities and monotonicity
/// claims over the given records. Checks that need the target to hold the
/// largest logit skip non-conforming records (their `total` counts only
/// qualifying ones).
std::vector<CheckResult> verify_propositions(const std::vector<scaling::LogitRecord>& records,
                                             const VerifyOptions& options = {});

/// Deterministic record generator for verification runs without a model:
/// half the records get their target logit raised to the top, half are left
/// unordered.
std::vector<scaling::LogitRecord> synthetic_logits(std::size_t count, int num_classes,
                                                   std::uint64_t seed);

void write_checks_csv(const std::filesystem::path& path,
                      const std::vector<CheckResult>& checks);

/// Writes results.csv, summary.json and the SVG charts into out_dir
/// (created if missing). Output bytes are a pure function of the report.
void emit_report(const RunReport& report, const std::filesystem::path& out_dir);

}  // namespace kdlab::harness
