#include "singular_bound/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace sb {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

bool usable(double x, double y) { return std::isfinite(x) && std::isfinite(y) && x > 0.0 && y > 0.0; }

}  // namespace

LogLogPlot::LogLogPlot(std::string title, std::string x_label, std::string y_label)
    : title_(std::move(title)), x_label_(std::move(x_label)), y_label_(std::move(y_label)) {}

std::string LogLogPlot::to_svg(int width, int height) const {
    const double left = 70, right = 150, top = 40, bottom = 55;
    const double pw = width - left - right, ph = height - top - bottom;

    double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
    double y_lo = x_lo, y_hi = -x_lo;
    for (const auto& s : series_)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x_lo = std::min(x_lo, std::log10(s.x[i]));
            x_hi = std::max(x_hi, std::log10(s.x[i]));
            y_lo = std::min(y_lo, std::log10(s.y[i]));
            y_hi = std::max(y_hi, std::log10(s.y[i]));
        }
    if (!std::isfinite(x_lo)) x_lo = 0, x_hi = 1, y_lo = 0, y_hi = 1;
    x_lo = std::floor(x_lo), x_hi = std::max(std::ceil(x_hi), x_lo + 1);
    y_lo = std::floor(y_lo), y_hi = std::max(std::ceil(y_hi), y_lo + 1);

    auto px = [&](double lx) { return left + (lx - x_lo) / (x_hi - x_lo) * pw; };
    auto py = [&](double ly) { return top + ph - (ly - y_lo) / (y_hi - y_lo) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(title_) << "</text>\n";
    os << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw) << "\" height=\""
       << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";

    for (double d = x_lo; d <= x_hi + 1e-9; d += 1.0) {
        os << "<line x1=\"" << num(px(d)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(d)) << "\" y2=\""
           << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(px(d)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">1e"
           << static_cast<int>(d) << "</text>\n";
    }
    for (double d = y_lo; d <= y_hi + 1e-9; d += 1.0) {
        os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(py(d)) << "\" x2=\"" << num(left) << "\" y2=\""
           << num(py(d)) << "\" stroke=\"black\"/>\n";
        os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(d) + 4) << "\" text-anchor=\"end\">1e"
           << static_cast<int>(d) << "</text>\n";
    }
    os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(height - 12.0) << "\" text-anchor=\"middle\">"
       << escape(x_label_) << "</text>\n";
    os << "<text transform=\"translate(16," << num(top + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(y_label_) << "</text>\n";

    double legend_y = top + 10;
    for (const auto& s : series_) {
        std::ostringstream pts;
        std::vector<std::pair<double, double>> kept;
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
            if (usable(s.x[i], s.y[i])) kept.emplace_back(px(std::log10(s.x[i])), py(std::log10(s.y[i])));
        for (const auto& [x, y] : kept) pts << num(x) << ',' << num(y) << ' ';
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << " points=\"" << pts.str() << "\"/>\n";
        for (const auto& [x, y] : kept)
            os << "<circle cx=\"" << num(x) << "\" cy=\"" << num(y) << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        const double lx = left + pw + 12;
        os << "<line x1=\"" << num(lx) << "\" y1=\"" << num(legend_y) << "\" x2=\"" << num(lx + 24) << "\" y2=\""
           << num(legend_y) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6,4\"" : "") << "/>\n";
        os << "<text x=\"" << num(lx + 30) << "\" y=\"" << num(legend_y + 4) << "\">" << escape(s.name)
           << "</text>\n";
        legend_y += 18;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace sb
