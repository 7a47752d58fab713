#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kdlab/detail/text.hpp"
#include "kdlab/harness.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<double> parse_temp_list(const std::string& text) {
    std::vector<double> out;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string token = comma == std::string::npos
                                ? text.substr(start)
                                : text.substr(start, comma - start);
        if (!token.empty()) {
            out.push_back(std::stod(token));
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (out.empty()) {
        throw CLI::ValidationError("--temps", "expected a comma-separated list");
    }
    for (double tau : out) {
        if (!(tau > 0.0)) {
            throw CLI::ValidationError("--temps", "temperatures must be positive");
        }
    }
    return out;
}

kdlab::scaling::TemperaturePair parse_pair(const std::string& text) {
    std::size_t comma = text.find(',');
    if (comma == std::string::npos) {
        throw CLI::ValidationError("--ats", "expected tau1,tau2");
    }
    return {std::stod(text.substr(0, comma)), std::stod(text.substr(comma + 1))};
}

kdlab::harness::ExperimentConfig load_or_default(const std::string& config_path) {
    if (config_path.empty()) {
        return {};
    }
    return kdlab::harness::load_config(config_path);
}

void write_teacher_files(const fs::path& out_dir, const std::string& stem,
                         const kdlab::harness::TeacherRun& teacher) {
    kdlab::nn::write_checkpoint(out_dir / (stem + ".ckpt.json"), teacher.model);
    kdlab::data::write_logit_file(out_dir / (stem + "_logits.csv"),
                                  teacher.train_logits);
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
    auto cfg = load_or_default(config_path);
    if (seed) {
        cfg.data.seed = *seed;
    }
    fs::create_directories(out_dir);
    auto split = kdlab::data::generate(cfg.data);
    kdlab::data::write_vector_file(fs::path(out_dir) / "train_vectors.csv", split.train);
    kdlab::data::write_vector_file(fs::path(out_dir) / "test_vectors.csv", split.test);
    std::cout << "wrote " << split.train.size() << " train and " << split.test.size()
              << " test vectors (" << cfg.data.num_classes << " classes, dim "
              << cfg.data.input_dim << ") to " << out_dir << "\n";
    return 0;
}

int cmd_analyze(const std::vector<std::string>& inputs, const std::string& temps_text,
                const std::vector<std::string>& ats_texts, int topk,
                const std::string& out_dir) {
    std::vector<double> temps = parse_temp_list(temps_text);
    std::vector<kdlab::scaling::TemperaturePair> pairs;
    for (const auto& t : ats_texts) {
        pairs.push_back(parse_pair(t));
    }
    fs::create_directories(out_dir);

    std::vector<kdlab::data::LogitDataset> datasets;
    for (const auto& path : inputs) {
        datasets.push_back(kdlab::data::read_logit_file(path));
    }

    json summary;
    summary["inputs"] = inputs;

    std::ofstream csv(fs::path(out_dir) / "analysis.csv", std::ios::binary);
    csv << "input,kind,tau1,tau2,count,target_prob_mean,target_prob_std,"
           "da_mean,da_std,dv_mean,dv_std,iv_mean,iv_std\n";

    json violations = json::array();
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto& ds = datasets[d];
        std::size_t bad = kdlab::metrics::assumption_violations(ds.records);
        violations.push_back({{"input", inputs[d]},
                              {"rows", ds.size()},
                              {"target_not_argmax", bad}});
        std::cout << inputs[d] << ": " << ds.size() << " rows, " << bad
                  << " rows where the target is not the largest logit\n";

        auto emit = [&](const std::string& kind, double t1, double t2,
                        const kdlab::scaling::TempSpec& spec) {
            std::vector<kdlab::metrics::DecompositionStats> stats;
            stats.reserve(ds.size());
            for (const auto& r : ds.records) {
                stats.push_back(kdlab::metrics::decomposition_stats(r, spec));
            }
            auto agg = kdlab::metrics::aggregate(stats);
            csv << inputs[d] << ',' << kind << ','
                << kdlab::detail::format_double(t1) << ','
                << kdlab::detail::format_double(t2) << ',' << agg.count << ','
                << kdlab::detail::format_double(agg.target_prob.mean) << ','
                << kdlab::detail::format_double(agg.target_prob.stdev) << ','
                << kdlab::detail::format_double(agg.derived_avg.mean) << ','
                << kdlab::detail::format_double(agg.derived_avg.stdev) << ','
                << kdlab::detail::format_double(agg.derived_var.mean) << ','
                << kdlab::detail::format_double(agg.derived_var.stdev) << ','
                << kdlab::detail::format_double(agg.inherent_var.mean) << ','
                << kdlab::detail::format_double(agg.inherent_var.stdev) << "\n";
        };
        for (double tau : temps) {
            emit("ts", tau, tau, tau);
        }
        for (const auto& pair : pairs) {
            emit("ats", pair.tau1, pair.tau2, pair);
        }
    }
    summary["assumption_check"] = violations;

    if (datasets.size() == 2) {
        const auto& a = datasets[0];
        const auto& b = datasets[1];
        if (a.size() != b.size() || a.num_classes != b.num_classes) {
            throw std::invalid_argument(
                "agreement needs two files over the same samples");
        }
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a.records[i].label != b.records[i].label) {
                throw std::invalid_argument("label mismatch at row " +
                                            std::to_string(i + 1));
            }
        }
        const auto k = std::min<std::size_t>(static_cast<std::size_t>(topk),
                                             static_cast<std::size_t>(a.num_classes));
        kdlab::metrics::AgreementStats acc;
        for (std::size_t i = 0; i < a.size(); ++i) {
            auto pa = kdlab::scaling::softmax_ts(a.records[i], 1.0);
            auto pb = kdlab::scaling::softmax_ts(b.records[i], 1.0);
            auto st = kdlab::metrics::agreement(pa.probs, pb.probs, k);
            acc.spearman += st.spearman;
            acc.kendall += st.kendall;
            acc.topk_overlap += st.topk_overlap;
            acc.l1_distance += st.l1_distance;
        }
        double inv = 1.0 / static_cast<double>(a.size());
        summary["agreement"] = {{"spearman", acc.spearman * inv},
                                {"kendall", acc.kendall * inv},
                                {"topk_overlap", acc.topk_overlap * inv},
                                {"l1_distance", acc.l1_distance * inv},
                                {"topk", k}};
        std::cout << "agreement (tau=1): spearman " << acc.spearman * inv
                  << ", kendall " << acc.kendall * inv << ", top-" << k
                  << " overlap " << acc.topk_overlap * inv << ", l1 "
                  << acc.l1_distance * inv << "\n";
    }

    std::ofstream js(fs::path(out_dir) / "analysis_summary.json", std::ios::binary);
    js << summary.dump(2) << "\n";
    std::cout << "wrote analysis.csv and analysis_summary.json to " << out_dir << "\n";
    return 0;
}

int cmd_distill(const std::string& config_path, const std::string& out_override,
                std::optional<std::uint64_t> seed, std::string condition,
                std::optional<double> tau, const std::string& ats_text) {
    auto cfg = load_or_default(config_path);
    if (!out_override.empty()) {
        cfg.output_dir = out_override;
    }
    std::uint64_t run_seed = seed ? *seed : cfg.seeds.front();
    if (condition.empty()) {
        condition = cfg.conditions.empty() ? "kd-ts" : cfg.conditions.front();
    }
    if (!kdlab::harness::condition_is_valid(condition)) {
        throw std::invalid_argument("unknown condition '" + condition + "'");
    }

    kdlab::scaling::TemperaturePair taus(1.0, 1.0);
    if (!ats_text.empty()) {
        taus = parse_pair(ats_text);
    } else if (tau) {
        taus = {*tau, *tau};
    } else if (condition == "kd-ats" || condition == "ils-ats") {
        taus = cfg.grid.ats.empty() ? kdlab::scaling::TemperaturePair(2.0, 1.0)
                                    : cfg.grid.ats.front();
    } else if (condition != "nokd") {
        taus = {cfg.grid.ts.empty() ? 4.0 : cfg.grid.ts.front(),
                cfg.grid.ts.empty() ? 4.0 : cfg.grid.ts.front()};
    }

    fs::create_directories(cfg.output_dir);
    auto dataset = kdlab::data::generate(cfg.data);
    auto teacher = kdlab::harness::run_teacher(cfg, dataset, cfg.teacher_hidden, run_seed);
    write_teacher_files(cfg.output_dir, "teacher_s" + std::to_string(run_seed), teacher);

    auto result = kdlab::harness::run_distillation(cfg, dataset, teacher, condition,
                                                   taus, run_seed);
    std::cout << "teacher train/test acc: " << teacher.train_acc << " / "
              << teacher.test_acc << "\n";
    std::cout << condition << " (tau1=" << taus.tau1 << ", tau2=" << taus.tau2
              << ", seed=" << run_seed
              << ") student test acc: " << result.student_test_acc << "\n";

    std::ofstream csv(cfg.output_dir / "results.csv", std::ios::binary);
    csv << "condition,tau1,tau2,seed,teacher_train_acc,teacher_test_acc,"
           "student_test_acc,da_mean,dv_mean,iv_mean\n";
    csv << condition << ',' << kdlab::detail::format_double(taus.tau1) << ','
        << kdlab::detail::format_double(taus.tau2) << ',' << run_seed << ','
        << kdlab::detail::format_double(teacher.train_acc) << ','
        << kdlab::detail::format_double(teacher.test_acc) << ','
        << kdlab::detail::format_double(result.student_test_acc) << ','
        << kdlab::detail::format_double(result.soft_label_stats.derived_avg.mean) << ','
        << kdlab::detail::format_double(result.soft_label_stats.derived_var.mean) << ','
        << kdlab::detail::format_double(result.soft_label_stats.inherent_var.mean)
        << "\n";
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out_override,
              std::optional<std::uint64_t> seed, int jobs) {
    auto cfg = load_or_default(config_path);
    if (!out_override.empty()) {
        cfg.output_dir = out_override;
    }
    if (seed) {
        cfg.seeds = {*seed};
    }
    fs::create_directories(cfg.output_dir);
    auto report = kdlab::harness::sweep(cfg, jobs, cfg.output_dir);
    kdlab::harness::emit_report(report, cfg.output_dir);

    std::cout << "sweep " << report.hash << ": " << report.rows.size()
              << " rows over " << report.seeds.size() << " seeds -> "
              << cfg.output_dir << "\n";
    for (const auto& t : report.teachers) {
        std::cout << "  teacher seed " << t.seed << ": train " << t.train_acc
                  << ", test " << t.test_acc << ", mean target logit "
                  << t.mean_target_logit << "\n";
    }
    if (report.target_logit_ratio) {
        std::cout << "  target logit ratio vs baseline: " << *report.target_logit_ratio
                  << (report.over_confident && *report.over_confident
                          ? " (over-confident)"
                          : " (below the 1.5x over-confidence threshold)")
                  << "\n";
    }
    return 0;
}

int cmd_verify(const std::string& config_path, const std::string& in_path,
               const std::string& out_dir, std::uint64_t seed, std::size_t count,
               bool strict) {
    std::vector<kdlab::scaling::LogitRecord> records;
    int classes = 10;
    if (!config_path.empty()) {
        classes = kdlab::harness::load_config(config_path).data.num_classes;
    }
    if (!in_path.empty()) {
        auto ds = kdlab::data::read_logit_file(in_path);
        records = std::move(ds.records);
    } else {
        records = kdlab::harness::synthetic_logits(count, classes, seed);
    }

    auto checks = kdlab::harness::verify_propositions(records);
    fs::create_directories(out_dir);
    kdlab::harness::write_checks_csv(fs::path(out_dir) / "checks.csv", checks);

    std::size_t failures = 0;
    for (const auto& c : checks) {
        bool ok = c.ok();
        if (!ok) ++failures;
        std::cout << (ok ? "PASS " : "FAIL ") << c.name << " (" << c.passed << "/"
                  << c.total << ", max violation "
                  << kdlab::detail::format_double(c.max_violation) << ")\n";
    }
    std::cout << (failures == 0 ? "all checks passed\n"
                                : std::to_string(failures) + " checks failed\n");
    return (strict && failures > 0) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Distillation numerics workbench"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int jobs = 1;
    bool strict = false;
    std::string temps_text = "1,2,4";
    std::vector<std::string> ats_texts;
    int topk = 5;
    std::vector<std::string> inputs;
    std::string condition;
    std::optional<double> tau;
    std::string ats_single;
    std::uint64_t verify_seed = 1;
    std::size_t verify_count = 1000;

    auto* gen = app.add_subcommand("gen-data", "Generate the synthetic task");
    gen->add_option("--config", config_path, "Experiment config JSON");
    gen->add_option("--out", out_dir, "Output directory")->required();
    gen->add_option("--seed", seed_override, "Override the data seed");

    auto* analyze = app.add_subcommand("analyze", "Decomposition stats of logit files");
    analyze->add_option("--in", inputs, "Logit file (repeat for two files)")
        ->required()
        ->expected(1, 2);
    analyze->add_option("--temps", temps_text, "Comma-separated uniform temperatures");
    analyze->add_option("--ats", ats_texts, "tau1,tau2 pair (repeatable)");
    analyze->add_option("--topk", topk, "k for top-k overlap");
    analyze->add_option("--out", out_dir, "Output directory")->required();

    auto* distill = app.add_subcommand("distill", "Train a teacher and one student");
    distill->add_option("--config", config_path, "Experiment config JSON");
    distill->add_option("--out", out_dir, "Output directory (overrides config)");
    distill->add_option("--seed", seed_override, "Run seed");
    distill->add_option("--condition", condition, "nokd, kd-ts, kd-ats, ils-ts, ils-ats");
    distill->add_option("--tau", tau, "Uniform temperature");
    distill->add_option("--ats", ats_single, "tau1,tau2 pair");

    auto* sweep_cmd = app.add_subcommand("sweep", "Full grid x seed sweep with report");
    sweep_cmd->add_option("--config", config_path, "Experiment config JSON");
    sweep_cmd->add_option("--out", out_dir, "Output directory (overrides config)");
    sweep_cmd->add_option("--seed", seed_override, "Run only this seed");
    sweep_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    auto* verify = app.add_subcommand("verify", "Numeric checks of the identities");
    verify->add_option("--config", config_path, "Experiment config JSON (class count)");
    verify->add_option("--in", inputs, "Logit file to check")->expected(0, 1);
    verify->add_option("--out", out_dir, "Output directory")->required();
    verify->add_option("--seed", verify_seed, "Seed for generated records");
    verify->add_option("--n", verify_count, "Number of generated records");
    verify->add_flag("--strict", strict, "Exit nonzero when a check fails");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_data(config_path, out_dir, seed_override);
        }
        if (analyze->parsed()) {
            return cmd_analyze(inputs, temps_text, ats_texts, topk, out_dir);
        }
        if (distill->parsed()) {
            return cmd_distill(config_path, out_dir, seed_override, condition, tau,
                               ats_single);
        }
        if (sweep_cmd->parsed()) {
            return cmd_sweep(config_path, out_dir, seed_override, jobs);
        }
        if (verify->parsed()) {
            return cmd_verify(config_path, inputs.empty() ? "" : inputs.front(),
                              out_dir, verify_seed, verify_count, strict);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
