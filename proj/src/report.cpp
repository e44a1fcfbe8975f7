#include "evseg/report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "evseg/common.hpp"

namespace evseg {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

// Non-finite metrics are serialized as JSON null; read them back as NaN.
double jnum(const nlohmann::json& v) {
    return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
}

std::string fixed(double v, int decimals) {
    std::ostringstream s;
    s.setf(std::ios::fixed);
    s.precision(decimals);
    s << v;
    return s.str();
}

std::string pad(const std::string& s, size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

struct Extent {
    double lo = 0.0, hi = 1.0;
    bool any = false;

    void add(double v) {
        if (!std::isfinite(v)) return;
        if (!any) {
            lo = hi = v;
            any = true;
        } else {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
};

}  // namespace

std::string render_table(const nlohmann::json& results) {
    const std::vector<std::string> headers = {"arrangement", "seed",  "mIoU",   "wIoU",
                                              "mVC8",        "mVC16", "params", "GFLOPs",
                                              "loss",        "min"};
    std::vector<std::vector<std::string>> rows;
    for (const nlohmann::json& run : results.at("runs")) {
        rows.push_back({run.at("arrangement").get<std::string>(),
                        std::to_string(run.at("seed").get<uint64_t>()),
                        fixed(jnum(run.at("mean_iou")), 4),
                        fixed(jnum(run.at("weighted_iou")), 4),
                        fixed(jnum(run.at("mvc8")), 4),
                        fixed(jnum(run.at("mvc16")), 4),
                        std::to_string(run.at("params").get<int64_t>()),
                        fixed(run.at("flops").get<double>() / 1e9, 3),
                        fixed(run.at("final_loss").get<double>(), 4),
                        fixed(run.at("seconds").get<double>() / 60.0, 1)});
    }

    std::vector<size_t> widths(headers.size());
    for (size_t c = 0; c < headers.size(); ++c) {
        widths[c] = headers[c].size();
        for (const auto& row : rows) widths[c] = std::max(widths[c], row[c].size());
    }
    std::ostringstream out;
    for (size_t c = 0; c < headers.size(); ++c)
        out << pad(headers[c], widths[c]) << (c + 1 < headers.size() ? "  " : "");
    out << "\n";
    for (const auto& row : rows) {
        for (size_t c = 0; c < row.size(); ++c)
            out << pad(row[c], widths[c]) << (c + 1 < row.size() ? "  " : "");
        out << "\n";
    }
    return out.str();
}

std::string render_loss_svg(
    const std::vector<std::pair<std::string, std::vector<double>>>& curves) {
    const int w = 860, h = 420, ml = 60, mr = 160, mt = 20, mb = 40;
    const int pw = w - ml - mr, ph = h - mt - mb;

    Extent ye;
    size_t longest = 1;
    for (const auto& [name, ys] : curves) {
        longest = std::max(longest, ys.size());
        for (double v : ys) ye.add(v);
    }
    if (!ye.any) ye = {0.0, 1.0, true};
    if (ye.hi == ye.lo) ye.hi = ye.lo + 1.0;

    auto sx = [&](size_t i) {
        const double t = longest < 2 ? 0.0 : static_cast<double>(i) / (longest - 1);
        return ml + t * pw;
    };
    auto sy = [&](double v) { return mt + (1.0 - (v - ye.lo) / (ye.hi - ye.lo)) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << mt + 5
        << "\" font-size=\"12\" text-anchor=\"end\">" << fixed(ye.hi, 3) << "</text>\n";
    out << "<text x=\"" << ml - 8 << "\" y=\"" << mt + ph
        << "\" font-size=\"12\" text-anchor=\"end\">" << fixed(ye.lo, 3) << "</text>\n";
    out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 8
        << "\" font-size=\"12\" text-anchor=\"middle\">iteration (max " << longest
        << ")</text>\n";

    int ci = 0;
    for (const auto& [name, ys] : curves) {
        const std::string color = kPalette[ci % kPaletteSize];
        // Subsample long curves; the plot cannot resolve more points anyway.
        const size_t stride = std::max<size_t>(1, ys.size() / 1000);
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (size_t i = 0; i < ys.size(); i += stride) {
            if (!std::isfinite(ys[i])) continue;
            out << fixed(sx(i), 1) << "," << fixed(sy(ys[i]), 1) << " ";
        }
        out << "\"/>\n";
        const int ly = mt + 16 + 18 * ci;
        out << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
            << ml + pw + 30 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << ml + pw + 36 << "\" y=\"" << ly << "\" font-size=\"12\">" << name
            << "</text>\n";
        ++ci;
    }
    out << "</svg>\n";
    return out.str();
}

std::string render_metric_svg(const nlohmann::json& results) {
    // Seed-averaged headline metrics per arrangement, in first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::pair<double, double>> sums;
    std::map<std::string, int> counts;
    for (const nlohmann::json& run : results.at("runs")) {
        const std::string arr = run.at("arrangement").get<std::string>();
        if (!counts.count(arr)) order.push_back(arr);
        sums[arr].first += jnum(run.at("mean_iou"));
        sums[arr].second += jnum(run.at("mvc8"));
        counts[arr] += 1;
    }

    const int w = 720, h = 360, ml = 60, mt = 20, mb = 70;
    const int ph = h - mt - mb;
    const int group_w = order.empty() ? 1 : (w - ml - 20) / static_cast<int>(order.size());
    const int bar_w = std::max(10, group_w / 3);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
        << "\" viewBox=\"0 0 " << w << " " << h << "\">\n";
    out << "<rect width=\"" << w << "\" height=\"" << h << "\" fill=\"white\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << w - 10 << "\" y2=\""
        << mt + ph << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = tick / 4.0;
        const double y = mt + (1.0 - v) * ph;
        out << "<text x=\"" << ml - 8 << "\" y=\"" << y + 4
            << "\" font-size=\"11\" text-anchor=\"end\">" << fixed(v, 2) << "</text>\n";
    }

    int gi = 0;
    for (const std::string& arr : order) {
        const double miou = sums[arr].first / counts[arr];
        const double mvc = sums[arr].second / counts[arr];
        const int gx = ml + gi * group_w + group_w / 2;
        const double clamped_iou = std::isfinite(miou) ? std::clamp(miou, 0.0, 1.0) : 0.0;
        const double clamped_vc = std::isfinite(mvc) ? std::clamp(mvc, 0.0, 1.0) : 0.0;
        out << "<rect x=\"" << gx - bar_w - 2 << "\" y=\"" << mt + (1.0 - clamped_iou) * ph
            << "\" width=\"" << bar_w << "\" height=\"" << clamped_iou * ph
            << "\" fill=\"#1f77b4\"/>\n";
        out << "<rect x=\"" << gx + 2 << "\" y=\"" << mt + (1.0 - clamped_vc) * ph
            << "\" width=\"" << bar_w << "\" height=\"" << clamped_vc * ph
            << "\" fill=\"#d62728\"/>\n";
        out << "<text x=\"" << gx << "\" y=\"" << mt + ph + 16
            << "\" font-size=\"11\" text-anchor=\"middle\">" << arr << "</text>\n";
        out << "<text x=\"" << gx - bar_w / 2 - 2 << "\" y=\""
            << mt + (1.0 - clamped_iou) * ph - 4
            << "\" font-size=\"10\" text-anchor=\"middle\">" << fixed(miou, 3) << "</text>\n";
        out << "<text x=\"" << gx + bar_w / 2 + 2 << "\" y=\"" << mt + (1.0 - clamped_vc) * ph - 4
            << "\" font-size=\"10\" text-anchor=\"middle\">" << fixed(mvc, 3) << "</text>\n";
        ++gi;
    }
    out << "<rect x=\"" << ml << "\" y=\"" << h - 28
        << "\" width=\"12\" height=\"12\" fill=\"#1f77b4\"/>\n";
    out << "<text x=\"" << ml + 18 << "\" y=\"" << h - 18 << "\" font-size=\"12\">mean IoU"
        << "</text>\n";
    out << "<rect x=\"" << ml + 110 << "\" y=\"" << h - 28
        << "\" width=\"12\" height=\"12\" fill=\"#d62728\"/>\n";
    out << "<text x=\"" << ml + 128 << "\" y=\"" << h - 18 << "\" font-size=\"12\">mVC8"
        << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

std::vector<double> read_loss_csv(const std::string& path) {
    std::ifstream in(path);
    check_data(in.good(), "cannot open " + path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<double> losses;
    while (std::getline(in, line)) {
        const size_t a = line.find(',');
        if (a == std::string::npos) continue;
        const size_t b = line.find(',', a + 1);
        try {
            losses.push_back(std::stod(line.substr(a + 1, b - a - 1)));
        } catch (const std::logic_error&) {
            throw DataError("bad loss value in " + path + ": " + line);
        }
    }
    return losses;
}

std::string write_report(const std::string& results_path, const std::string& out_dir) {
    std::ifstream in(results_path);
    check_data(in.good(), "cannot open " + results_path);
    nlohmann::json results;
    try {
        in >> results;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad results file " + results_path + ": " + e.what());
    }

    std::filesystem::create_directories(out_dir);
    const std::string table = render_table(results);
    {
        std::ofstream out(out_dir + "/report.txt");
        check_data(out.good(), "cannot write " + out_dir + "/report.txt");
        out << table;
    }

    std::vector<std::pair<std::string, std::vector<double>>> curves;
    for (const nlohmann::json& run : results.at("runs")) {
        const std::string log = run.at("run_dir").get<std::string>() + "/train_log.csv";
        if (!std::filesystem::exists(log)) continue;
        curves.emplace_back(run.at("arrangement").get<std::string>() + " seed " +
                                std::to_string(run.at("seed").get<uint64_t>()),
                            read_loss_csv(log));
    }
    {
        std::ofstream out(out_dir + "/loss_curves.svg");
        out << render_loss_svg(curves);
    }
    {
        std::ofstream out(out_dir + "/metrics.svg");
        out << render_metric_svg(results);
    }
    return table;
}

}  // namespace evseg
