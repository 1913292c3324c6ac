#pragma once

#include <string>
#include <vector>

namespace sb {

struct PlotSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool dashed = false;
};

/// Minimal log-log line plot written as standalone SVG: axes with decade
/// ticks, one polyline plus point markers per series, and a legend.
/// Non-positive or nonfinite points are skipped.
class LogLogPlot {
public:
    LogLogPlot(std::string title, std::string x_label, std::string y_label);

    void add(PlotSeries series) { series_.push_back(std::move(series)); }
    std::string to_svg(int width = 640, int height = 440) const;

private:
    std::string title_;
    std::string x_label_;
    std::string y_label_;
    std::vector<PlotSeries> series_;
};

}  // namespace sb
