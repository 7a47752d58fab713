#include "kdlab/data.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "kdlab/rng.hpp"
#include "kdlab/detail/text.hpp"

namespace kdlab::data {

namespace {

constexpr double kBlockCenterScale = 3.0;
constexpr double kClassOffsetScale = 2.0;

void validate_spec(const SyntheticSpec& spec) {
    if (spec.num_classes < 2) {
        throw std::invalid_argument("num_classes must be at least 2");
    }
    if (spec.input_dim < 1) {
        throw std::invalid_argument("input_dim must be at least 1");
    }
    if (spec.samples_per_class < 1) {
        throw std::invalid_argument("samples_per_class must be at least 1");
    }
    if (!(spec.cluster_spread > 0.0)) {
        throw std::invalid_argument("cluster_spread must be positive");
    }
    if (!(spec.block_tightness > 0.0 && spec.block_tightness < 1.0)) {
        throw std::invalid_argument("block_tightness must be in (0, 1)");
    }
    if (!spec.affinity_groups.empty()) {
        std::vector<int> seen(static_cast<std::size_t>(spec.num_classes), 0);
        for (const auto& group : spec.affinity_groups) {
            if (group.empty()) {
                throw std::invalid_argument("affinity group must not be empty");
            }
            for (int c : group) {
                if (c < 0 || c >= spec.num_classes) {
                    throw std::invalid_argument("affinity group class out of range");
                }
                if (seen[static_cast<std::size_t>(c)]++) {
                    throw std::invalid_argument("affinity groups must not overlap");
                }
            }
        }
        for (int c = 0; c < spec.num_classes; ++c) {
            if (!seen[static_cast<std::size_t>(c)]) {
                throw std::invalid_argument("affinity groups must cover every class");
            }
        }
    }
}

void draw_split(VectorDataset& out, const SyntheticSpec& spec,
                const std::vector<std::vector<double>>& means, rng::Engine& engine) {
    const auto dim = static_cast<std::size_t>(spec.input_dim);
    out.num_classes = spec.num_classes;
    out.input_dim = spec.input_dim;
    out.features.reserve(static_cast<std::size_t>(spec.num_classes) *
                         static_cast<std::size_t>(spec.samples_per_class) * dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        const auto& mean = means[static_cast<std::size_t>(c)];
        for (int s = 0; s < spec.samples_per_class; ++s) {
            for (std::size_t d = 0; d < dim; ++d) {
                out.features.push_back(mean[d] + spec.cluster_spread * engine.normal());
            }
            out.labels.push_back(c);
        }
    }
}

}  // namespace

SplitDataset generate(const SyntheticSpec& spec) {
    validate_spec(spec);
    rng::Engine engine(rng::mix_seed(spec.seed, 0x6b646c61ULL));
    const auto dim = static_cast<std::size_t>(spec.input_dim);

    std::vector<std::vector<int>> groups = spec.affinity_groups;
    if (groups.empty()) {
        for (int c = 0; c < spec.num_classes; ++c) {
            groups.push_back({c});
        }
    }

    std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.num_classes));
    for (const auto& group : groups) {
        std::vector<double> center(dim);
        for (double& v : center) {
            v = kBlockCenterScale * engine.normal();
        }
        for (int c : group) {
            auto& mean = means[static_cast<std::size_t>(c)];
            mean.resize(dim);
            double offset = kClassOffsetScale * (1.0 - spec.block_tightness);
            for (std::size_t d = 0; d < dim; ++d) {
                mean[d] = center[d] + offset * engine.normal();
            }
        }
    }

    SplitDataset split;
    draw_split(split.train, spec, means, engine);
    draw_split(split.test, spec, means, engine);
    return split;
}

namespace {

/// Shared line-oriented reader. Calls row(fields, line_no) for every data
/// row after validating the field count.
template <typename HeaderFn, typename RowFn>
void read_csv_lines(const std::filesystem::path& path, HeaderFn&& header,
                    RowFn&& row) {
    std::ifstream in(path);
    if (!in) {
        throw ParseError(0, "cannot open " + path.string());
    }
    std::string line;
    std::size_t line_no = 0;
    bool saw_header = false;
    std::vector<std::string_view> fields;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = detail::trim(line);
        if (view.empty()) {
            continue;
        }
        if (!saw_header) {
            header(view, line_no);
            saw_header = true;
            continue;
        }
        if (view.front() == '#') {
            continue;
        }
        fields.clear();
        std::size_t start = 0;
        const std::string_view raw = view;
        while (true) {
            std::size_t comma = raw.find(',', start);
            if (comma == std::string_view::npos) {
                fields.push_back(raw.substr(start));
                break;
            }
            fields.push_back(raw.substr(start, comma - start));
            start = comma + 1;
        }
        row(fields, line_no);
    }
    if (!saw_header) {
        throw ParseError(0, "empty file: " + path.string());
    }
}

long long parse_header_int(std::string_view header, std::string_view key,
                           std::size_t line_no) {
    std::size_t pos = header.find(key);
    if (pos == std::string_view::npos) {
        throw ParseError(line_no, "header is missing " + std::string(key));
    }
    std::string_view rest = header.substr(pos + key.size());
    std::size_t end = rest.find(' ');
    if (end != std::string_view::npos) {
        rest = rest.substr(0, end);
    }
    long long value = 0;
    if (!detail::parse_int(rest, value)) {
        throw ParseError(line_no, "malformed " + std::string(key) + " in header");
    }
    return value;
}

double parse_field_double(std::string_view token, std::size_t line_no,
                          std::size_t column) {
    double v = 0.0;
    if (!detail::parse_double(token, v)) {
        throw ParseError(line_no,
                         "malformed number in column " + std::to_string(column + 1));
    }
    if (!std::isfinite(v)) {
        throw ParseError(line_no,
                         "non-finite value in column " + std::to_string(column + 1));
    }
    return v;
}

int parse_field_label(std::string_view token, std::size_t line_no, int num_classes) {
    long long label = 0;
    if (!detail::parse_int(token, label)) {
        throw ParseError(line_no, "malformed label");
    }
    if (label < 0 || label >= num_classes) {
        throw ParseError(line_no, "label " + std::to_string(label) +
                                      " out of range [0, " +
                                      std::to_string(num_classes) + ")");
    }
    return static_cast<int>(label);
}

}  // namespace

LogitDataset read_logit_file(const std::filesystem::path& path) {
    LogitDataset ds;
    read_csv_lines(
        path,
        [&](std::string_view header, std::size_t line_no) {
            if (header.rfind("#logits v1 ", 0) != 0) {
                throw ParseError(line_no, "expected header '#logits v1 classes=<C>'");
            }
            long long classes = parse_header_int(header, "classes=", line_no);
            if (classes < 2) {
                throw ParseError(line_no, "classes must be at least 2");
            }
            ds.num_classes = static_cast<int>(classes);
        },
        [&](const std::vector<std::string_view>& fields, std::size_t line_no) {
            if (fields.size() != static_cast<std::size_t>(ds.num_classes) + 1) {
                throw ParseError(line_no, "expected " +
                                              std::to_string(ds.num_classes + 1) +
                                              " fields, got " +
                                              std::to_string(fields.size()));
            }
            int label = parse_field_label(fields[0], line_no, ds.num_classes);
            std::vector<double> logits(static_cast<std::size_t>(ds.num_classes));
            for (std::size_t i = 0; i < logits.size(); ++i) {
                logits[i] = parse_field_double(fields[i + 1], line_no, i + 1);
            }
            ds.records.emplace_back(std::move(logits), label);
        });
    return ds;
}

void write_logit_file(const std::filesystem::path& path, const LogitDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "#logits v1 classes=" << ds.num_classes << "\n";
    for (const auto& r : ds.records) {
        out << r.label;
        for (double f : r.logits) {
            out << ',' << detail::format_double(f);
        }
        out << "\n";
    }
    if (!out) {
        throw std::runtime_error("failed while writing " + path.string());
    }
}

VectorDataset read_vector_file(const std::filesystem::path& path) {
    VectorDataset ds;
    read_csv_lines(
        path,
        [&](std::string_view header, std::size_t line_no) {
            if (header.rfind("#vectors v1 ", 0) != 0) {
                throw ParseError(line_no,
                                 "expected header '#vectors v1 classes=<C> dim=<D>'");
            }
            long long classes = parse_header_int(header, "classes=", line_no);
            long long dim = parse_header_int(header, "dim=", line_no);
            if (classes < 2) {
                throw ParseError(line_no, "classes must be at least 2");
            }
            if (dim < 1) {
                throw ParseError(line_no, "dim must be at least 1");
            }
            ds.num_classes = static_cast<int>(classes);
            ds.input_dim = static_cast<int>(dim);
        },
        [&](const std::vector<std::string_view>& fields, std::size_t line_no) {
            if (fields.size() != static_cast<std::size_t>(ds.input_dim) + 1) {
                throw ParseError(line_no, "expected " +
                                              std::to_string(ds.input_dim + 1) +
                                              " fields, got " +
                                              std::to_string(fields.size()));
            }
            ds.labels.push_back(parse_field_label(fields[0], line_no, ds.num_classes));
            for (std::size_t i = 0; i < static_cast<std::size_t>(ds.input_dim); ++i) {
                ds.features.push_back(parse_field_double(fields[i + 1], line_no, i + 1));
            }
        });
    return ds;
}

void write_vector_file(const std::filesystem::path& path, const VectorDataset& ds) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "#vectors v1 classes=" << ds.num_classes << " dim=" << ds.input_dim << "\n";
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out << ds.labels[i];
        auto row = ds.row(i);
        for (double x : row) {
            out << ',' << detail::format_double(x);
        }
        out << "\n";
    }
    if (!out) {
        throw std::runtime_error("failed while writing " + path.string());
    }
}

}  // namespace kdlab::data
