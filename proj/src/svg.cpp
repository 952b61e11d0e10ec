#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>

#include "moe/experiments.hpp"

namespace moe {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string decade_label(int e) { return "1e" + std::to_string(e); }

}  // namespace

std::string svg_loglog(const SweepResult& result, const SvgStyle& style) {
    const auto stats = per_n_stats(result.rows, style.column);
    std::optional<SlopeFit> line;
    try {
        SlopeOptions so;
        so.column = style.column;
        line = fit_slope(result.rows, so);
    } catch (const InsufficientData&) {
        if (!style.allow_missing_line) throw;
    }

    struct Point {
        double lx, ly, llo, lhi;
    };
    std::vector<Point> pts;
    for (const auto& s : stats) {
        if (!(s.mean > 0.0)) continue;
        const double lo = s.mean - 2.0 * s.sd > 0.0 ? s.mean - 2.0 * s.sd : s.mean / 10.0;
        pts.push_back({std::log10(static_cast<double>(s.n)), std::log10(s.mean), std::log10(lo),
                       std::log10(s.mean + 2.0 * s.sd)});
    }

    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (!pts.empty()) {
        x0 = x1 = pts.front().lx;
        y0 = pts.front().llo;
        y1 = pts.front().lhi;
        for (const auto& p : pts) {
            x0 = std::min(x0, p.lx);
            x1 = std::max(x1, p.lx);
            y0 = std::min(y0, p.llo);
            y1 = std::max(y1, p.lhi);
        }
    }
    x0 = std::floor(x0 - 0.05);
    x1 = std::ceil(x1 + 0.05);
    y0 = std::floor(y0);
    y1 = std::ceil(y1);
    if (y1 <= y0) y1 = y0 + 1.0;

    const double W = style.width, H = style.height;
    const double ml = 70, mr = 20, mt = 40, mb = 50;
    const auto px = [&](double lx) { return ml + (lx - x0) / (x1 - x0) * (W - ml - mr); };
    const auto py = [&](double ly) { return H - mb - (ly - y0) / (y1 - y0) * (H - mt - mb); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(style.width) + "\" height=\"" +
         std::to_string(style.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(style.title) +
         "</text>\n";
    s += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(W - ml - mr) + "\" height=\"" +
         num(H - mt - mb) + "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int e = static_cast<int>(x0); e <= static_cast<int>(x1); ++e) {
        const double x = px(e);
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(H - mb) + "\" x2=\"" + num(x) + "\" y2=\"" + num(mt) +
             "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + num(x) + "\" y=\"" + num(H - mb + 16) + "\" text-anchor=\"middle\">" + decade_label(e) +
             "</text>\n";
    }
    for (int e = static_cast<int>(y0); e <= static_cast<int>(y1); ++e) {
        const double y = py(e);
        s += "<line x1=\"" + num(ml) + "\" y1=\"" + num(y) + "\" x2=\"" + num(W - mr) + "\" y2=\"" + num(y) +
             "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(y + 4) + "\" text-anchor=\"end\">" + decade_label(e) +
             "</text>\n";
    }
    s += "<text x=\"" + num(W / 2) + "\" y=\"" + num(H - 12) + "\" text-anchor=\"middle\">n</text>\n";
    s += "<text x=\"16\" y=\"" + num(H / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + num(H / 2) +
         ")\">" + escape(style.y_label) + "</text>\n";

    for (const auto& p : pts) {
        const double x = px(p.lx);
        s += "<line x1=\"" + num(x) + "\" y1=\"" + num(py(p.llo)) + "\" x2=\"" + num(x) + "\" y2=\"" + num(py(p.lhi)) +
             "\" stroke=\"#1f77b4\"/>\n";
        s += "<circle cx=\"" + num(x) + "\" cy=\"" + num(py(p.ly)) + "\" r=\"3.5\" fill=\"#1f77b4\"/>\n";
    }
    if (line) {
        // log10 mean = (intercept + slope ln n) / ln 10
        const auto fy = [&](double lx) { return (line->intercept + line->slope * lx * std::log(10.0)) / std::log(10.0); };
        s += "<line x1=\"" + num(px(x0)) + "\" y1=\"" + num(py(fy(x0))) + "\" x2=\"" + num(px(x1)) + "\" y2=\"" +
             num(py(fy(x1))) + "\" stroke=\"#d62728\" stroke-dasharray=\"6,4\"/>\n";
        char label[64];
        std::snprintf(label, sizeof label, "slope = %.3f", line->slope);
        s += "<text x=\"" + num(W - mr - 8) + "\" y=\"" + num(mt + 18) + "\" text-anchor=\"end\" fill=\"#d62728\">" +
             label + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace moe
