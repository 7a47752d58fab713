#include <fstream>

#include <json.hpp>

#include "kdlab/harness.hpp"
#include "kdlab/detail/text.hpp"

namespace kdlab::harness {

using nlohmann::json;

namespace {

const std::vector<scaling::TemperaturePair>& default_ats_grid() {
    static const std::vector<scaling::TemperaturePair> grid = {
        {2.0, 1.0}, {3.0, 1.0}, {3.0, 2.0}, {4.0, 2.0}, {4.0, 3.0}, {5.0, 2.0}};
    return grid;
}

void parse_synthetic(const json& j, data::SyntheticSpec& out) {
    out.num_classes = j.value("num_classes", out.num_classes);
    out.input_dim = j.value("input_dim", out.input_dim);
    out.samples_per_class = j.value("samples_per_class", out.samples_per_class);
    out.cluster_spread = j.value("cluster_spread", out.cluster_spread);
    out.block_tightness = j.value("block_tightness", out.block_tightness);
    out.seed = j.value("seed", out.seed);
    if (j.contains("affinity_groups")) {
        out.affinity_groups =
            j.at("affinity_groups").get<std::vector<std::vector<int>>>();
    }
}

json synthetic_to_json(const data::SyntheticSpec& s) {
    return json{{"num_classes", s.num_classes},
                {"input_dim", s.input_dim},
                {"samples_per_class", s.samples_per_class},
                {"cluster_spread", s.cluster_spread},
                {"block_tightness", s.block_tightness},
                {"affinity_groups", s.affinity_groups},
                {"seed", s.seed}};
}

void parse_train(const json& j, nn::TrainConfig& out) {
    out.epochs = j.value("epochs", out.epochs);
    out.batch_size = j.value("batch_size", out.batch_size);
    out.learning_rate = j.value("learning_rate", out.learning_rate);
    out.momentum = j.value("momentum", out.momentum);
    out.seed = j.value("seed", out.seed);
    if (j.contains("lr_decay")) {
        const json& d = j.at("lr_decay");
        out.lr_decay.factor = d.value("factor", out.lr_decay.factor);
        if (d.contains("milestones")) {
            out.lr_decay.milestones = d.at("milestones").get<std::vector<int>>();
        }
    }
}

json train_to_json(const nn::TrainConfig& t) {
    return json{{"epochs", t.epochs},
                {"batch_size", t.batch_size},
                {"learning_rate", t.learning_rate},
                {"momentum", t.momentum},
                {"lr_decay",
                 {{"factor", t.lr_decay.factor}, {"milestones", t.lr_decay.milestones}}},
                {"seed", t.seed}};
}

void parse_loss(const json& j, LossSpec& out) {
    out.lambda = j.value("lambda", out.lambda);
    out.multiply_tau_squared = j.value("multiply_tau_squared", out.multiply_tau_squared);
    if (j.contains("student_temp")) {
        const json& st = j.at("student_temp");
        if (st.is_string()) {
            if (st.get<std::string>() != "match") {
                throw data::ParseError(0, "config: student_temp must be \"match\" or a number");
            }
            out.student_temp.match_teacher = true;
        } else {
            out.student_temp.match_teacher = false;
            out.student_temp.fixed = st.get<double>();
        }
    }
}

json loss_to_json(const LossSpec& l) {
    json st;
    if (l.student_temp.match_teacher) {
        st = "match";
    } else {
        st = l.student_temp.fixed;
    }
    return json{{"lambda", l.lambda},
                {"multiply_tau_squared", l.multiply_tau_squared},
                {"student_temp", st}};
}

void parse_grid(const json& j, GridSpec& out) {
    if (j.contains("ts")) {
        out.ts = j.at("ts").get<std::vector<double>>();
    }
    if (j.contains("ats")) {
        out.ats.clear();
        for (const json& pair : j.at("ats")) {
            if (!pair.is_array() || pair.size() != 2) {
                throw data::ParseError(0, "config: each ats grid entry must be [tau1, tau2]");
            }
            out.ats.emplace_back(pair[0].get<double>(), pair[1].get<double>());
        }
    }
}

json grid_to_json(const GridSpec& g) {
    json ats = json::array();
    for (const auto& p : g.ats) {
        ats.push_back({p.tau1, p.tau2});
    }
    return json{{"ts", g.ts}, {"ats", ats}};
}

}  // namespace

VerifyOptions::VerifyOptions() : ats_grid(default_ats_grid()) {}

double StudentTempPolicy::resolve(const scaling::TempSpec& teacher_temps) const {
    if (!match_teacher) {
        return fixed;
    }
    if (const double* tau = std::get_if<double>(&teacher_temps)) {
        return *tau;
    }
    return 1.0;
}

bool condition_is_valid(const std::string& condition) {
    return condition == "nokd" || condition == "kd-ts" || condition == "kd-ats" ||
           condition == "ils-ts" || condition == "ils-ats";
}

void ExperimentConfig::validate() const {
    teacher_train.validate();
    student_train.validate();
    if (!(loss.lambda >= 0.0 && loss.lambda <= 1.0)) {
        throw std::invalid_argument("loss.lambda must be in [0, 1]");
    }
    if (!loss.student_temp.match_teacher && !(loss.student_temp.fixed > 0.0)) {
        throw std::invalid_argument("loss.student_temp must be positive");
    }
    for (double tau : grid.ts) {
        if (!(tau > 0.0)) {
            throw std::invalid_argument("grid.ts temperatures must be positive");
        }
    }
    for (const auto& condition : conditions) {
        if (!condition_is_valid(condition)) {
            throw std::invalid_argument("unknown condition '" + condition + "'");
        }
    }
    if (seeds.empty()) {
        throw std::invalid_argument("seeds must not be empty");
    }
    if (topk < 1 || topk > data.num_classes) {
        throw std::invalid_argument("topk must be in [1, num_classes]");
    }
}

ExperimentConfig config_from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw data::ParseError(0, std::string("config: ") + e.what());
    }
    ExperimentConfig cfg;
    cfg.grid.ts = {1.0, 2.0, 4.0, 8.0, 12.0, 16.0};
    cfg.grid.ats = default_ats_grid();
    try {
        if (j.contains("data")) parse_synthetic(j.at("data"), cfg.data);
        if (j.contains("teacher_hidden")) {
            cfg.teacher_hidden = j.at("teacher_hidden").get<std::vector<int>>();
        }
        if (j.contains("baseline_teacher_hidden")) {
            cfg.baseline_teacher_hidden =
                j.at("baseline_teacher_hidden").get<std::vector<int>>();
        }
        if (j.contains("student_hidden")) {
            cfg.student_hidden = j.at("student_hidden").get<std::vector<int>>();
        }
        if (j.contains("teacher_train")) parse_train(j.at("teacher_train"), cfg.teacher_train);
        if (j.contains("student_train")) parse_train(j.at("student_train"), cfg.student_train);
        if (j.contains("loss")) parse_loss(j.at("loss"), cfg.loss);
        if (j.contains("grid")) parse_grid(j.at("grid"), cfg.grid);
        if (j.contains("conditions")) {
            cfg.conditions = j.at("conditions").get<std::vector<std::string>>();
        }
        if (j.contains("seeds")) {
            cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
        }
        cfg.topk = j.value("topk", cfg.topk);
        if (j.contains("output_dir")) {
            cfg.output_dir = j.at("output_dir").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw data::ParseError(0, std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data::ParseError(0, "cannot open " + path.string());
    }
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return config_from_json_text(text);
}

std::string config_hash(const ExperimentConfig& config) {
    json j{{"data", synthetic_to_json(config.data)},
           {"teacher_hidden", config.teacher_hidden},
           {"student_hidden", config.student_hidden},
           {"teacher_train", train_to_json(config.teacher_train)},
           {"student_train", train_to_json(config.student_train)},
           {"loss", loss_to_json(config.loss)},
           {"grid", grid_to_json(config.grid)},
           {"conditions", config.conditions},
           {"topk", config.topk}};
    if (config.baseline_teacher_hidden) {
        j["baseline_teacher_hidden"] = *config.baseline_teacher_hidden;
    }
    std::uint64_t h = detail::fnv1a(j.dump());
    char buf[17];
    static const char* digits = "0123456789abcdef";
    for (int i = 0; i < 16; ++i) {
        buf[15 - i] = digits[(h >> (4 * i)) & 0xF];
    }
    buf[16] = '\0';
    return std::string(buf);
}

}  // namespace kdlab::harness
