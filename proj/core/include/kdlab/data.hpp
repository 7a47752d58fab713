#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kdlab/scaling.hpp"

namespace kdlab::data {

/// Thrown by the file readers. `line` is 1-based and counts every physical
/// line of the file; 0 means the error is not tied to a line (e.g. the file
/// could not be opened).
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line_in, const std::string& message)
        : std::runtime_error(line_in == 0
                                 ? message
                                 : "line " + std::to_string(line_in) + ": " + message),
          line(line_in) {}

    std::size_t line;
};

/// Labeled feature vectors stored row-major in one flat buffer.
struct VectorDataset {
    int num_classes = 0;
    int input_dim = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * static_cast<std::size_t>(input_dim),
                static_cast<std::size_t>(input_dim)};
    }
};

/// Labeled logit rows, typically a model's outputs over a dataset.
struct LogitDataset {
    int num_classes = 0;
    std::vector<scaling::LogitRecord> records;

    std::size_t size() const { return records.size(); }
};

/// Recipe for the synthetic classification task. Classes are grouped into
/// affinity blocks; classes in the same block share a block center and so
/// sit closer to each other than to classes in other blocks, giving the
/// label space a coarse-to-fine structure. block_tightness in (0, 1)
/// controls how tightly a block's classes hug their shared center (1 means
/// they coincide); cluster_spread is the per-sample noise scale. Gaussian
/// class overlap keeps the Bayes error strictly positive.
struct SyntheticSpec {
    int num_classes = 10;
    int input_dim = 20;
    int samples_per_class = 100;
    double cluster_spread = 1.75;
    std::vector<std::vector<int>> affinity_groups;
    double block_tightness = 0.45;
    std::uint64_t seed = 1;
};

struct SplitDataset {
    VectorDataset train;
    VectorDataset test;
};

/// Draws the task deterministically from spec.seed: block centers first,
/// then class means, then train samples class by class, then test samples.
/// An empty affinity_groups means every class forms its own block.
SplitDataset generate(const SyntheticSpec& spec);

/// Reads a logit file:
///   #logits v1 classes=<C>
///   <label>,<f_1>,...,<f_C>
/// Blank lines and lines starting with '#' after the header are skipped.
/// Malformed rows raise ParseError with the 1-based line number.
LogitDataset read_logit_file(const std::filesystem::path& path);

/// Writes the same format with '\n' line endings. Doubles are printed in
/// shortest round-trip form, so reading the file back reproduces every
/// record bit for bit and the bytes are stable across runs and platforms.
void write_logit_file(const std::filesystem::path& path, const LogitDataset& ds);

/// Reads a feature-vector file:
///   #vectors v1 classes=<C> dim=<D>
///   <label>,<x_1>,...,<x_D>
VectorDataset read_vector_file(const std::filesystem::path& path);

void write_vector_file(const std::filesystem::path& path, const VectorDataset& ds);

}  // namespace kdlab::data
