// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "harness.hpp"

namespace dcbleo::harness {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 400;
constexpr int kLeft = 70;
constexpr int kRight = 20;
constexpr int kTop = 30;
constexpr int kBottom = 50;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"};

std::string escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string header(const std::string& title) {
    return fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
        "font-family=\"sans-serif\" font-size=\"11\">\n"
        "<rect width=\"{0}\" height=\"{1}\" fill=\"white\"/>\n"
        "<text x=\"{2}\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">{3}</text>\n",
        kWidth, kHeight, kWidth / 2, escape(title));
}

struct Axes {
    double x0, x1, y0, y1;

    [[nodiscard]] double px(double x) const {
        return kLeft + (x - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
    }
    [[nodiscard]] double py(double y) const {
        return kHeight - kBottom - (y - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
    }
};

std::string frame(const Axes& a, const std::string& xlabel, const std::string& ylabel) {
    std::string s = fmt::format(
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft, kTop,
        kWidth - kLeft - kRight, kHeight - kTop - kBottom);
    for (int i = 0; i <= 4; ++i) {
        const double yv = a.y0 + (a.y1 - a.y0) * i / 4.0;
        const double xv = a.x0 + (a.x1 - a.x0) * i / 4.0;
        s += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\">{:.3g}</text>\n", kLeft - 4.0,
                         a.py(yv) + 4.0, yv);
        s += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{:.3g}</text>\n", a.px(xv),
                         kHeight - kBottom + 15, xv);
    }
    s += fmt::format("<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n", (kLeft + kWidth - kRight) / 2,
                     kHeight - 12, escape(xlabel));
    s += fmt::format(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{}</text>\n",
        (kTop + kHeight - kBottom) / 2, (kTop + kHeight - kBottom) / 2, escape(ylabel));
    return s;
}

double nice_max(double v) { return v > 0.0 ? v * 1.1 : 1.0; }

}  // namespace

std::string rate_svg(const std::vector<RateSeries>& series, double threshold) {
    std::size_t n = 1;
    double ymax = threshold;
    for (const auto& s : series) {
        n = std::max(n, s.rates.size());
        for (double r : s.rates) ymax = std::max(ymax, r);
    }
    const Axes a{0.0, static_cast<double>(std::max<std::size_t>(n - 1, 1)), 0.0, nice_max(ymax)};
    std::string out = header("Per-slot uplink rate");
    out += frame(a, "slot", "rate (bps)");
    out += fmt::format(
        "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"gray\" stroke-dasharray=\"6 4\"/>\n",
        a.px(a.x0), a.py(threshold), a.px(a.x1), a.py(threshold));
    out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\" text-anchor=\"end\" fill=\"gray\">threshold</text>\n",
                       a.px(a.x1) - 4.0, a.py(threshold) - 4.0);
    for (std::size_t k = 0; k < series.size(); ++k) {
        const auto* color = kPalette[k % std::size(kPalette)];
        std::string pts;
        for (std::size_t t = 0; t < series[k].rates.size(); ++t)
            pts += fmt::format("{:.1f},{:.1f} ", a.px(static_cast<double>(t)), a.py(series[k].rates[t]));
        out += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"{}\"/>\n", color, pts);
        out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\">{}</text>\n", kLeft + 8, kTop + 14 + 14 * k, color,
                           escape(series[k].label));
    }
    return out + "</svg>\n";
}

std::string pareto_svg(const std::vector<Objectives>& objectives) {
    // Oblique projection of (f1, f2, f3), each scaled to [0, 1] over the archive.
    Objectives lo{}, hi{};
    for (std::size_t i = 0; i < 3; ++i) {
        lo[i] = hi[i] = objectives.empty() ? 0.0 : objectives.front()[i];
        for (const auto& o : objectives) {
            lo[i] = std::min(lo[i], o[i]);
            hi[i] = std::max(hi[i], o[i]);
        }
    }
    auto unit = [&](const Objectives& o, std::size_t i) { return hi[i] > lo[i] ? (o[i] - lo[i]) / (hi[i] - lo[i]) : 0.5; };
    const double cx = kLeft + 60.0, cy = kHeight - kBottom - 20.0, len = 240.0;
    auto project = [&](double u, double v, double w) {
        return std::pair{cx + len * u + 0.5 * len * w * std::cos(0.6), cy - len * 0.8 * v - 0.5 * len * w * std::sin(0.6)};
    };
    std::string out = header("Pareto archive");
    const char* labels[] = {"f1 rate (bps)", "f2 energy (J)", "f3 switching"};
    const std::array<Objectives, 3> axes{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    const auto [ox, oy] = project(0, 0, 0);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto [ex, ey] = project(axes[i][0], axes[i][1], axes[i][2]);
        out += fmt::format("<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"black\"/>\n", ox,
                           oy, ex, ey);
        out += fmt::format("<text x=\"{:.1f}\" y=\"{:.1f}\">{} [{:.4g}, {:.4g}]</text>\n", ex + 4.0, ey - 4.0,
                           labels[i], lo[i], hi[i]);
    }
    for (const auto& o : objectives) {
        const auto [x, y] = project(unit(o, 0), unit(o, 1), unit(o, 2));
        const auto [bx, by] = project(unit(o, 0), 0.0, unit(o, 2));
        out += fmt::format(
            "<line x1=\"{:.1f}\" y1=\"{:.1f}\" x2=\"{:.1f}\" y2=\"{:.1f}\" stroke=\"#bbbbbb\" stroke-dasharray=\"2 2\"/>\n",
            bx, by, x, y);
        out += fmt::format("<circle cx=\"{:.1f}\" cy=\"{:.1f}\" r=\"4\" fill=\"{}\"/>\n", x, y, kPalette[0]);
    }
    return out + "</svg>\n";
}

std::string objectives_svg(const std::vector<NamedObjectives>& rows) {
    // Three groups of bars; each objective is scaled by its largest value across the policies.
    std::string out = header("Objectives by policy (scaled per objective)");
    const Axes a{0.0, 3.0, 0.0, 1.1};
    out += frame(a, "", "fraction of max");
    const char* groups[] = {"f1 rate", "f2 energy", "f3 switching"};
    const double group_w = (kWidth - kLeft - kRight) / 3.0;
    const double bar_w = rows.empty() ? 0.0 : (group_w * 0.8) / static_cast<double>(rows.size());
    for (std::size_t g = 0; g < 3; ++g) {
        double mx = 0.0;
        for (const auto& r : rows) mx = std::max(mx, r.objectives[g]);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            const double v = mx > 0.0 ? rows[k].objectives[g] / mx : 0.0;
            const double x = kLeft + g * group_w + 0.1 * group_w + k * bar_w;
            out += fmt::format(
                "<rect x=\"{:.1f}\" y=\"{:.1f}\" width=\"{:.1f}\" height=\"{:.1f}\" fill=\"{}\"><title>{}: {:.6g}</title></rect>\n",
                x, a.py(v), bar_w * 0.9, a.py(0.0) - a.py(v), kPalette[k % std::size(kPalette)], escape(rows[k].name),
                rows[k].objectives[g]);
        }
        out += fmt::format("<text x=\"{:.1f}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
                           kLeft + (g + 0.5) * group_w, kHeight - kBottom + 30, groups[g]);
    }
    for (std::size_t k = 0; k < rows.size(); ++k)
        out += fmt::format("<text x=\"{}\" y=\"{}\" fill=\"{}\" text-anchor=\"end\">{}</text>\n", kWidth - kRight - 6,
                           kTop + 14 + 13 * k, kPalette[k % std::size(kPalette)], escape(rows[k].name));
    return out + "</svg>\n";
}

}  // namespace dcbleo::harness
