#include "nqm/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "nqm/error.hpp"

namespace nqm {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 460.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"};

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

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

// round step of 1, 2 or 5 times a power of ten giving about `target` ticks
double nice_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) return m * mag;
    return 10.0 * mag;
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
    if (plot.columns.size() < 2) throw ValidationError("columns", "a line plot needs an abscissa and one series");
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& row : plot.rows) {
        if (row.size() != plot.columns.size()) throw ValidationError("rows", "row length differs from the column count");
        x0 = std::min(x0, row[0]);
        x1 = std::max(x1, row[0]);
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (!std::isfinite(row[c])) continue;
            y0 = std::min(y0, row[c]);
            y1 = std::max(y1, row[c]);
        }
    }
    if (!(x1 > x0)) throw ValidationError("rows", "a line plot needs at least two distinct abscissae");
    if (!(y1 > y0)) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    const double ystep = nice_step(y1 - y0, 6);
    y0 = std::floor(y0 / ystep) * ystep;
    y1 = std::ceil(y1 / ystep) * ystep;
    const double xstep = nice_step(x1 - x0, 8);

    const double pw = kWidth - kLeft - kRight;
    const double ph = kHeight - kTop - kBottom;
    const auto px = [&](double x) { return kLeft + (x - x0) / (x1 - x0) * pw; };
    const auto py = [&](double y) { return kTop + (y1 - y) / (y1 - y0) * ph; };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
       << escape(plot.title) << "</text>\n";

    // grid and ticks
    for (double y = y0; y <= y1 + 1e-9 * ystep; y += ystep) {
        os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(y)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
           << num(py(y)) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << num(kLeft - 6) << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
           << tick_label(y) << "</text>\n";
    }
    for (double x = std::ceil(x0 / xstep) * xstep; x <= x1 + 1e-9 * xstep; x += xstep) {
        os << "<line x1=\"" << num(px(x)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(px(x)) << "\" y2=\""
           << num(kTop + ph) << "\" stroke=\"#e0e0e0\"/>\n";
        os << "<text x=\"" << num(px(x)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">"
           << tick_label(x) << "</text>\n";
    }
    if (y0 < 0.0 && y1 > 0.0)
        os << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
           << num(py(0)) << "\" stroke=\"#808080\"/>\n";
    os << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 14) << "\" text-anchor=\"middle\">"
       << escape(plot.x_label) << "</text>\n";
    os << "<text transform=\"translate(18," << num(kTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
       << escape(plot.y_label) << "</text>\n";

    for (std::size_t c = 1; c < plot.columns.size(); ++c) {
        const char* color = kPalette[(c - 1) % std::size(kPalette)];
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        bool first = true;
        for (const auto& row : plot.rows) {
            if (!std::isfinite(row[c])) continue;
            os << (first ? "" : " ") << num(px(row[0])) << ',' << num(py(row[c]));
            first = false;
        }
        os << "\"/>\n";
        const double ly = kTop + 10 + 20.0 * double(c - 1);
        os << "<line x1=\"" << num(kLeft + pw + 14) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kLeft + pw + 38)
           << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        os << "<text x=\"" << num(kLeft + pw + 44) << "\" y=\"" << num(ly + 4) << "\">" << escape(plot.columns[c])
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace nqm
