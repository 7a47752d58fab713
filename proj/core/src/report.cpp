#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "kdlab/harness.hpp"
#include "kdlab/detail/text.hpp"

namespace kdlab::harness {

namespace {

using nlohmann::json;
using detail::format_double;
using detail::format_fixed;

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> points;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

/// Hand-written line chart. Output is a pure function of the inputs: every
/// coordinate is formatted with a fixed number of decimals and series keep
/// their given order.
void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series, bool log2_x) {
    const double width = 760.0;
    const double height = 480.0;
    const double ml = 74.0;
    const double mr = 180.0;
    const double mt = 48.0;
    const double mb = 56.0;

    double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
    bool first = true;
    for (const auto& s : series) {
        for (auto [x, y] : s.points) {
            double xv = log2_x ? std::log2(x) : x;
            if (first) {
                x_min = x_max = xv;
                y_min = y_max = y;
                first = false;
            } else {
                x_min = std::min(x_min, xv);
                x_max = std::max(x_max, xv);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        }
    }
    if (x_max - x_min < 1e-12) {
        x_min -= 0.5;
        x_max += 0.5;
    }
    if (y_max - y_min < 1e-12) {
        y_min -= 0.5;
        y_max += 0.5;
    }
    double y_pad = 0.05 * (y_max - y_min);
    y_min -= y_pad;
    y_max += y_pad;
    double x_pad = 0.04 * (x_max - x_min);
    x_min -= x_pad;
    x_max += x_pad;

    auto px = [&](double x) {
        double xv = log2_x ? std::log2(x) : x;
        return ml + (xv - x_min) / (x_max - x_min) * (width - ml - mr);
    };
    auto py = [&](double y) {
        return height - mb - (y - y_min) / (y_max - y_min) * (height - mt - mb);
    };

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           format_fixed(width, 0) + "\" height=\"" + format_fixed(height, 0) +
           "\" viewBox=\"0 0 " + format_fixed(width, 0) + " " +
           format_fixed(height, 0) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + format_fixed(ml, 1) + "\" y=\"24\" font-family=\"sans-serif\" "
           "font-size=\"16\">" + title + "</text>\n";

    // Axes.
    svg += "<line x1=\"" + format_fixed(ml, 1) + "\" y1=\"" + format_fixed(mt, 1) +
           "\" x2=\"" + format_fixed(ml, 1) + "\" y2=\"" +
           format_fixed(height - mb, 1) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + format_fixed(ml, 1) + "\" y1=\"" +
           format_fixed(height - mb, 1) + "\" x2=\"" + format_fixed(width - mr, 1) +
           "\" y2=\"" + format_fixed(height - mb, 1) + "\" stroke=\"black\"/>\n";

    // X ticks: powers of two on a log axis, five linear ticks otherwise.
    std::vector<double> xticks;
    if (log2_x) {
        for (int e = -6; e <= 10; ++e) {
            double v = std::ldexp(1.0, e);
            double lv = static_cast<double>(e);
            if (lv >= x_min - 1e-9 && lv <= x_max + 1e-9) {
                xticks.push_back(v);
            }
        }
    } else {
        for (int i = 0; i <= 4; ++i) {
            double lv = x_min + (x_max - x_min) * i / 4.0;
            xticks.push_back(lv);
        }
    }
    for (double t : xticks) {
        double x = log2_x ? px(t) : ml + (t - x_min) / (x_max - x_min) * (width - ml - mr);
        svg += "<line x1=\"" + format_fixed(x, 1) + "\" y1=\"" +
               format_fixed(height - mb, 1) + "\" x2=\"" + format_fixed(x, 1) +
               "\" y2=\"" + format_fixed(height - mb + 5, 1) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_fixed(x, 1) + "\" y=\"" +
               format_fixed(height - mb + 20, 1) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" +
               format_double(t, 4) + "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        double v = y_min + (y_max - y_min) * i / 4.0;
        double y = py(v);
        svg += "<line x1=\"" + format_fixed(ml - 5, 1) + "\" y1=\"" +
               format_fixed(y, 1) + "\" x2=\"" + format_fixed(ml, 1) + "\" y2=\"" +
               format_fixed(y, 1) + "\" stroke=\"black\"/>\n";
        svg += "<text x=\"" + format_fixed(ml - 8, 1) + "\" y=\"" +
               format_fixed(y + 4, 1) +
               "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" +
               format_double(v, 4) + "</text>\n";
    }

    svg += "<text x=\"" + format_fixed((ml + width - mr) / 2.0, 1) + "\" y=\"" +
           format_fixed(height - 12, 1) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">" +
           x_label + "</text>\n";
    svg += "<text x=\"18\" y=\"" + format_fixed((mt + height - mb) / 2.0, 1) +
           "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
           "transform=\"rotate(-90 18 " +
           format_fixed((mt + height - mb) / 2.0, 1) + ")\">" + y_label + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        auto points = series[s].points;
        std::stable_sort(points.begin(), points.end(),
                         [](const auto& a, const auto& b) { return a.first < b.first; });
        if (points.size() > 1) {
            std::string poly = "<polyline fill=\"none\" stroke=\"";
            poly += color;
            poly += "\" stroke-width=\"1.8\" points=\"";
            for (std::size_t i = 0; i < points.size(); ++i) {
                if (i) poly += ' ';
                poly += format_fixed(px(points[i].first), 2) + "," +
                        format_fixed(py(points[i].second), 2);
            }
            poly += "\"/>\n";
            svg += poly;
        }
        for (const auto& [x, y] : points) {
            svg += "<circle cx=\"" + format_fixed(px(x), 2) + "\" cy=\"" +
                   format_fixed(py(y), 2) + "\" r=\"2.6\" fill=\"" + color + "\"/>\n";
        }
        double ly = mt + 16.0 * static_cast<double>(s);
        svg += "<line x1=\"" + format_fixed(width - mr + 10, 1) + "\" y1=\"" +
               format_fixed(ly, 1) + "\" x2=\"" + format_fixed(width - mr + 34, 1) +
               "\" y2=\"" + format_fixed(ly, 1) + "\" stroke=\"" + color +
               "\" stroke-width=\"1.8\"/>\n";
        svg += "<text x=\"" + format_fixed(width - mr + 40, 1) + "\" y=\"" +
               format_fixed(ly + 4, 1) +
               "\" font-family=\"sans-serif\" font-size=\"12\">" + series[s].label +
               "</text>\n";
    }
    svg += "</svg>\n";

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << svg;
    if (!out) {
        throw std::runtime_error("failed while writing " + path.string());
    }
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct MedianRow {
    std::string condition;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double student_test_acc = 0.0;
    double da_mean = 0.0;
    double dv_mean = 0.0;
    double iv_mean = 0.0;
};

/// Collapses rows over seeds, preserving the order grid points first
/// appear in.
std::vector<MedianRow> median_rows(const std::vector<ReportRow>& rows) {
    std::vector<MedianRow> out;
    std::vector<std::vector<const ReportRow*>> groups;
    auto key_index = [&](const ReportRow& r) -> std::size_t {
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (out[i].condition == r.condition && out[i].tau1 == r.tau1 &&
                out[i].tau2 == r.tau2) {
                return i;
            }
        }
        out.push_back({r.condition, r.tau1, r.tau2, 0.0, 0.0, 0.0, 0.0});
        groups.emplace_back();
        return out.size() - 1;
    };
    for (const auto& r : rows) {
        groups[key_index(r)].push_back(&r);
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        std::vector<double> acc, da, dv, iv;
        for (const ReportRow* r : groups[i]) {
            acc.push_back(r->student_test_acc);
            da.push_back(r->da_mean);
            dv.push_back(r->dv_mean);
            iv.push_back(r->iv_mean);
        }
        out[i].student_test_acc = median_of(acc);
        out[i].da_mean = median_of(da);
        out[i].dv_mean = median_of(dv);
        out[i].iv_mean = median_of(iv);
    }
    return out;
}

json teacher_summaries_json(const std::vector<TeacherSummary>& teachers) {
    json arr = json::array();
    for (const auto& t : teachers) {
        arr.push_back({{"seed", t.seed},
                       {"train_acc", t.train_acc},
                       {"test_acc", t.test_acc},
                       {"mean_target_logit", t.mean_target_logit}});
    }
    return arr;
}

}  // namespace

void emit_report(const RunReport& report, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);

    {
        std::ofstream out(out_dir / "results.csv", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write results.csv");
        }
        out << "condition,tau1,tau2,seed,teacher_train_acc,teacher_test_acc,"
               "student_test_acc,da_mean,dv_mean,iv_mean\n";
        for (const auto& r : report.rows) {
            out << r.condition << ',' << format_double(r.tau1) << ','
                << format_double(r.tau2) << ',' << r.seed << ','
                << format_double(r.teacher_train_acc) << ','
                << format_double(r.teacher_test_acc) << ','
                << format_double(r.student_test_acc) << ','
                << format_double(r.da_mean) << ',' << format_double(r.dv_mean) << ','
                << format_double(r.iv_mean) << "\n";
        }
        if (!out) {
            throw std::runtime_error("failed while writing results.csv");
        }
    }

    std::vector<MedianRow> medians = median_rows(report.rows);

    {
        json j;
        j["config_hash"] = report.hash;
        j["seeds"] = report.seeds;
        j["row_count"] = report.rows.size();
        j["teachers"] = teacher_summaries_json(report.teachers);
        j["baseline_teachers"] = teacher_summaries_json(report.baseline_teachers);
        j["target_logit_ratio"] =
            report.target_logit_ratio ? json(*report.target_logit_ratio) : json();
        j["over_confident"] =
            report.over_confident ? json(*report.over_confident) : json();
        if (report.teacher_agreement) {
            j["teacher_agreement"] = {
                {"spearman", report.teacher_agreement->spearman},
                {"kendall", report.teacher_agreement->kendall},
                {"topk_overlap", report.teacher_agreement->topk_overlap},
                {"l1_distance", report.teacher_agreement->l1_distance}};
        } else {
            j["teacher_agreement"] = json();
        }
        json med = json::array();
        for (const auto& m : medians) {
            med.push_back({{"condition", m.condition},
                           {"tau1", m.tau1},
                           {"tau2", m.tau2},
                           {"student_test_acc", m.student_test_acc},
                           {"da_mean", m.da_mean},
                           {"dv_mean", m.dv_mean},
                           {"iv_mean", m.iv_mean}});
        }
        j["median_rows"] = med;

        json best = json::array();
        std::vector<std::string> seen;
        for (const auto& m : medians) {
            if (std::find(seen.begin(), seen.end(), m.condition) != seen.end()) {
                continue;
            }
            seen.push_back(m.condition);
            const MedianRow* best_row = &m;
            for (const auto& other : medians) {
                if (other.condition == m.condition &&
                    other.student_test_acc > best_row->student_test_acc) {
                    best_row = &other;
                }
            }
            best.push_back({{"condition", best_row->condition},
                            {"tau1", best_row->tau1},
                            {"tau2", best_row->tau2},
                            {"median_student_test_acc", best_row->student_test_acc}});
        }
        j["best_by_condition"] = best;

        std::ofstream out(out_dir / "summary.json", std::ios::binary);
        if (!out) {
            throw std::runtime_error("cannot write summary.json");
        }
        out << j.dump(2) << "\n";
        if (!out) {
            throw std::runtime_error("failed while writing summary.json");
        }
    }

    if (!medians.empty()) {
        std::vector<Series> acc_series;
        std::vector<std::string> conditions;
        for (const auto& m : medians) {
            if (std::find(conditions.begin(), conditions.end(), m.condition) ==
                conditions.end()) {
                conditions.push_back(m.condition);
            }
        }
        for (const auto& condition : conditions) {
            Series s;
            s.label = condition;
            for (const auto& m : medians) {
                if (m.condition == condition) {
                    s.points.emplace_back(m.tau1, m.student_test_acc);
                }
            }
            acc_series.push_back(std::move(s));
        }
        write_line_chart(out_dir / "accuracy_vs_tau.svg",
                         "Median student test accuracy", "tau1",
                         "test accuracy", acc_series, true);

        std::vector<Series> stat_series;
        for (std::size_t c = 0; c < conditions.size(); ++c) {
            Series dv;
            dv.label = conditions[c] + " dv";
            for (const auto& m : medians) {
                if (m.condition == conditions[c]) {
                    dv.points.emplace_back(m.tau1, m.dv_mean);
                }
            }
            stat_series.push_back(std::move(dv));
        }
        write_line_chart(out_dir / "stats_vs_tau.svg",
                         "Soft-label derived variance (median over seeds)", "tau1",
                         "derived variance", stat_series, true);
    }

    if (!report.curves.empty()) {
        {
            std::ofstream out(out_dir / "temperature_curves.csv", std::ios::binary);
            if (!out) {
                throw std::runtime_error("cannot write temperature_curves.csv");
            }
            out << "tau,ts_da,ts_dv,ts_iv,ats_da,ats_dv,ats_iv\n";
            for (const auto& p : report.curves) {
                out << format_double(p.tau) << ',' << format_double(p.ts_da) << ','
                    << format_double(p.ts_dv) << ',' << format_double(p.ts_iv) << ','
                    << format_double(p.ats_da) << ',' << format_double(p.ats_dv) << ','
                    << format_double(p.ats_iv) << "\n";
            }
        }
        std::vector<Series> curve_series(2);
        curve_series[0].label = "uniform dv";
        curve_series[1].label = "asymmetric dv";
        for (const auto& p : report.curves) {
            curve_series[0].points.emplace_back(p.tau, p.ts_dv);
            curve_series[1].points.emplace_back(p.tau, p.ats_dv);
        }
        write_line_chart(out_dir / "temperature_curves.svg",
                         "Derived variance of the first teacher's soft labels", "tau",
                         "derived variance", curve_series, true);
    }
}

}  // namespace kdlab::harness
