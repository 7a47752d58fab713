#include <stdexcept>
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "kdlab/data.hpp"

using kdlab::data::LogitDataset;
using kdlab::data::ParseError;
using kdlab::data::SyntheticSpec;
using kdlab::data::VectorDataset;

namespace {

std::filesystem::path write_file(const std::string& name, const std::string& text) {
    auto dir = std::filesystem::path("data_test_tmp");
    std::filesystem::create_directories(dir);
    auto p = dir / name;
    std::ofstream out(p, std::ios::binary);
    out << text;
    return p;
}

std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

ParseError expect_parse_error(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const ParseError& e) {
        return e;
    }
    throw std::runtime_error("expected a ParseError");
}

std::vector<std::vector<double>> class_means(const VectorDataset& ds) {
    std::vector<std::vector<double>> means(
        static_cast<std::size_t>(ds.num_classes),
        std::vector<double>(static_cast<std::size_t>(ds.input_dim), 0.0));
    std::vector<std::size_t> counts(static_cast<std::size_t>(ds.num_classes), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto row = ds.row(i);
        auto c = static_cast<std::size_t>(ds.labels[i]);
        for (std::size_t d = 0; d < row.size(); ++d) {
            means[c][d] += row[d];
        }
        ++counts[c];
    }
    for (std::size_t c = 0; c < means.size(); ++c) {
        for (double& v : means[c]) {
            v /= static_cast<double>(counts[c]);
        }
    }
    return means;
}

double mean_distance(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (std::size_t d = 0; d < a.size(); ++d) {
        double diff = a[d] - b[d];
        acc += diff * diff;
    }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("generate is deterministic in the seed") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.input_dim = 6;
    spec.samples_per_class = 20;
    spec.seed = 7;
    auto a = kdlab::data::generate(spec);
    auto b = kdlab::data::generate(spec);
    CHECK(a.train.features == b.train.features);
    CHECK(a.train.labels == b.train.labels);
    CHECK(a.test.features == b.test.features);

    spec.seed = 8;
    auto c = kdlab::data::generate(spec);
    CHECK(a.train.features != c.train.features);
}

TEST_CASE("generate shapes and label layout") {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.input_dim = 5;
    spec.samples_per_class = 7;
    auto split = kdlab::data::generate(spec);
    CHECK(split.train.size() == 21);
    CHECK(split.test.size() == 21);
    CHECK(split.train.features.size() == 21 * 5);
    CHECK(split.train.num_classes == 3);
    CHECK(split.train.input_dim == 5);
    // Samples are laid out class by class.
    for (std::size_t i = 0; i < split.train.size(); ++i) {
        CHECK(split.train.labels[i] == static_cast<int>(i / 7));
    }
    // Train and test are distinct draws from the same class means.
    CHECK(split.train.features != split.test.features);
}

TEST_CASE("affinity groups pull grouped classes together") {
    SyntheticSpec spec;
    spec.num_classes = 4;
    spec.input_dim = 16;
    spec.samples_per_class = 100;
    spec.cluster_spread = 0.5;
    spec.affinity_groups = {{0, 1}, {2, 3}};
    spec.block_tightness = 0.8;
    spec.seed = 3;
    auto split = kdlab::data::generate(spec);
    auto means = class_means(split.train);

    double within = 0.5 * (mean_distance(means[0], means[1]) +
                           mean_distance(means[2], means[3]));
    double cross = 0.25 * (mean_distance(means[0], means[2]) +
                           mean_distance(means[0], means[3]) +
                           mean_distance(means[1], means[2]) +
                           mean_distance(means[1], means[3]));
    CHECK(within < cross);
}

TEST_CASE("classes overlap but remain learnable") {
    SyntheticSpec spec;
    spec.num_classes = 6;
    spec.input_dim = 2;
    spec.samples_per_class = 200;
    spec.cluster_spread = 4.0;
    spec.seed = 5;
    auto split = kdlab::data::generate(spec);
    auto means = class_means(split.train);

    // Nearest-class-mean classification of the test split: above chance
    // (the class means differ) but below perfect (the clusters overlap).
    std::size_t correct = 0;
    for (std::size_t i = 0; i < split.test.size(); ++i) {
        auto row = split.test.row(i);
        std::vector<double> point(row.begin(), row.end());
        int best = 0;
        double best_d = mean_distance(point, means[0]);
        for (int c = 1; c < spec.num_classes; ++c) {
            double d = mean_distance(point, means[static_cast<std::size_t>(c)]);
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        if (best == split.test.labels[i]) {
            ++correct;
        }
    }
    double acc = static_cast<double>(correct) / static_cast<double>(split.test.size());
    CHECK(acc > 1.5 / 6.0);
    CHECK(acc < 1.0);
}

TEST_CASE("generate validates its spec") {
    SyntheticSpec spec;
    spec.num_classes = 1;
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.input_dim = 0;
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.samples_per_class = 0;
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.cluster_spread = 0.0;
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec = SyntheticSpec{};
    spec.block_tightness = 1.0;
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);

    spec = SyntheticSpec{};
    spec.num_classes = 4;
    spec.affinity_groups = {{0, 1}, {1, 2, 3}};
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec.affinity_groups = {{0, 1}, {2}};
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec.affinity_groups = {{0, 1}, {2, 4}};
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec.affinity_groups = {{0, 1}, {}, {2, 3}};
    CHECK_THROWS_AS(kdlab::data::generate(spec), std::invalid_argument);
    spec.affinity_groups = {{0, 1}, {2, 3}};
    CHECK_NOTHROW(kdlab::data::generate(spec));
}

TEST_CASE("logit files round-trip exactly") {
    LogitDataset ds;
    ds.num_classes = 3;
    ds.records.emplace_back(std::vector<double>{0.1, 1.0 / 3.0, -2.5}, 0);
    ds.records.emplace_back(std::vector<double>{1e-300, -1e300, 3.141592653589793}, 2);
    ds.records.emplace_back(std::vector<double>{-0.0, 7.25, 0.30000000000000004}, 1);

    auto p = write_file("roundtrip.csv", "");
    kdlab::data::write_logit_file(p, ds);
    LogitDataset back = kdlab::data::read_logit_file(p);
    REQUIRE(back.num_classes == 3);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        CHECK(back.records[i].label == ds.records[i].label);
        CHECK(back.records[i].logits == ds.records[i].logits);
    }

    // Writing the same dataset twice produces identical bytes.
    auto p2 = write_file("roundtrip2.csv", "");
    kdlab::data::write_logit_file(p2, ds);
    CHECK(read_bytes(p) == read_bytes(p2));
}

TEST_CASE("logit reader skips blanks and comments") {
    auto p = write_file("relaxed.csv",
                        "\n"
                        "#logits v1 classes=2\n"
                        "\n"
                        "# a comment\n"
                        "0,1.5,-0.5\n"
                        "   \n"
                        "1,0.25,0.75\n");
    LogitDataset ds = kdlab::data::read_logit_file(p);
    CHECK(ds.num_classes == 2);
    REQUIRE(ds.size() == 2);
    CHECK(ds.records[0].logits == std::vector<double>{1.5, -0.5});
    CHECK(ds.records[1].label == 1);
}

TEST_CASE("logit reader accepts a header-only file") {
    auto p = write_file("empty_ok.csv", "#logits v1 classes=4\n");
    LogitDataset ds = kdlab::data::read_logit_file(p);
    CHECK(ds.num_classes == 4);
    CHECK(ds.size() == 0);
}

TEST_CASE("logit reader errors carry line numbers") {
    auto missing = expect_parse_error(
        [] { kdlab::data::read_logit_file("data_test_tmp/nope.csv"); });
    CHECK(missing.line == 0);
    CHECK(std::string(missing.what()).find("cannot open") != std::string::npos);

    auto p_empty = write_file("empty.csv", "");
    auto empty = expect_parse_error([&] { kdlab::data::read_logit_file(p_empty); });
    CHECK(empty.line == 0);

    auto p_hdr = write_file("badheader.csv", "label,a,b\n0,1,2\n");
    auto hdr = expect_parse_error([&] { kdlab::data::read_logit_file(p_hdr); });
    CHECK(hdr.line == 1);

    auto p_arity = write_file("arity.csv",
                              "#logits v1 classes=3\n"
                              "0,1.0,2.0,3.0\n"
                              "1,1.0,2.0\n");
    auto arity = expect_parse_error([&] { kdlab::data::read_logit_file(p_arity); });
    CHECK(arity.line == 3);
    CHECK(std::string(arity.what()).find("line 3:") != std::string::npos);
    CHECK(std::string(arity.what()).find("expected 4 fields, got 3") !=
          std::string::npos);

    auto p_label = write_file("badlabel.csv",
                              "#logits v1 classes=3\n"
                              "7,1.0,2.0,3.0\n");
    auto label = expect_parse_error([&] { kdlab::data::read_logit_file(p_label); });
    CHECK(label.line == 2);
    CHECK(std::string(label.what()).find("out of range") != std::string::npos);

    auto p_num = write_file("badnumber.csv",
                            "#logits v1 classes=2\n"
                            "0,1.2.3,4\n");
    auto num = expect_parse_error([&] { kdlab::data::read_logit_file(p_num); });
    CHECK(num.line == 2);

    auto p_inf = write_file("nonfinite.csv",
                            "#logits v1 classes=2\n"
                            "0,inf,1.0\n");
    auto inf = expect_parse_error([&] { kdlab::data::read_logit_file(p_inf); });
    CHECK(inf.line == 2);
    CHECK(std::string(inf.what()).find("non-finite") != std::string::npos);

    // Padding around fields is tolerated, same as in CLI temperature lists.
    auto p_space = write_file("spaced.csv",
                              "#logits v1 classes=2\n"
                              "0, 1.0,2.0\n");
    auto spaced = kdlab::data::read_logit_file(p_space);
    CHECK(spaced.records.size() == 1);
    CHECK(spaced.records[0].logits[0] == 1.0);

    auto p_classes = write_file("oneclass.csv", "#logits v1 classes=1\n");
    CHECK_THROWS_AS(kdlab::data::read_logit_file(p_classes), ParseError);
}

TEST_CASE("vector files round-trip exactly") {
    VectorDataset ds;
    ds.num_classes = 3;
    ds.input_dim = 2;
    ds.features = {0.1, -0.2, 1.0 / 7.0, 5e-12, 100.0, -3.5};
    ds.labels = {0, 2, 1};

    auto p = write_file("vectors.csv", "");
    kdlab::data::write_vector_file(p, ds);
    VectorDataset back = kdlab::data::read_vector_file(p);
    CHECK(back.num_classes == 3);
    CHECK(back.input_dim == 2);
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
}

TEST_CASE("vector reader validates the header") {
    auto p_nodim = write_file("nodim.csv", "#vectors v1 classes=3\n");
    auto nodim = expect_parse_error([&] { kdlab::data::read_vector_file(p_nodim); });
    CHECK(nodim.line == 1);
    CHECK(std::string(nodim.what()).find("dim=") != std::string::npos);

    auto p_wrong = write_file("wrongkind.csv", "#logits v1 classes=3\n");
    CHECK_THROWS_AS(kdlab::data::read_vector_file(p_wrong), ParseError);

    auto p_arity = write_file("vec_arity.csv",
                              "#vectors v1 classes=2 dim=3\n"
                              "0,1.0,2.0\n");
    auto arity = expect_parse_error([&] { kdlab::data::read_vector_file(p_arity); });
    CHECK(arity.line == 2);
}

TEST_CASE("synthetic data survives a file round-trip") {
    SyntheticSpec spec;
    spec.num_classes = 3;
    spec.input_dim = 4;
    spec.samples_per_class = 10;
    auto split = kdlab::data::generate(spec);
    auto p = write_file("synth.csv", "");
    kdlab::data::write_vector_file(p, split.train);
    VectorDataset back = kdlab::data::read_vector_file(p);
    CHECK(back.features == split.train.features);
    CHECK(back.labels == split.train.labels);
}
