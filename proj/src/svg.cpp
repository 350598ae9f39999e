#include "gih/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gih/error.hpp"

namespace gih::svg {

namespace {

constexpr int kWidth = 720, kHeight = 480;
constexpr int kLeft = 70, kRight = 160, kTop = 44, kBottom = 56;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string esc(const std::string& s) {
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

std::string fmt(double v) {
    std::ostringstream ss;
    ss.precision(6);
    ss << v;
    return ss.str();
}

struct Range {
    double lo, hi;
};

Range padded_range(double lo, double hi) {
    if (!(hi > lo)) {
        double c = lo;
        lo = c - 1.0;
        hi = c + 1.0;
    }
    double pad = 0.05 * (hi - lo);
    return {lo - pad, hi + pad};
}

std::vector<double> nice_ticks(double lo, double hi, int target = 6) {
    double span = hi - lo;
    double raw = span / target;
    double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double mult : {1.0, 2.0, 5.0, 10.0}) {
        if (mag * mult >= raw) {
            step = mag * mult;
            break;
        }
    }
    std::vector<double> ticks;
    double first = std::ceil(lo / step) * step;
    for (double t = first; t <= hi + 1e-12 * span; t += step) ticks.push_back(t);
    return ticks;
}

}  // namespace

void write_line_chart(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series) {
    if (series.empty()) throw Error("line chart: no series");
    for (const Series& s : series) {
        if (s.x.empty() || s.x.size() != s.y.size())
            throw Error("line chart: empty or ragged series '" + s.label + "'");
        for (double v : s.y)
            if (!std::isfinite(v)) throw Error("line chart: non-finite value");
    }

    double xlo = series[0].x.front(), xhi = xlo, ylo = series[0].y.front(), yhi = ylo;
    for (const Series& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            xlo = std::min(xlo, s.x[i]);
            xhi = std::max(xhi, s.x[i]);
            ylo = std::min(ylo, s.y[i]);
            yhi = std::max(yhi, s.y[i]);
        }
    Range xr = padded_range(xlo, xhi), yr = padded_range(ylo, yhi);

    const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
    auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
    auto py = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\">"
        << esc(title) << "</text>\n";

    out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
        << ph << "\" fill=\"none\" stroke=\"#333\"/>\n";
    for (double t : nice_ticks(xr.lo, xr.hi)) {
        double x = px(t);
        out << "<line x1=\"" << x << "\" y1=\"" << kTop + ph << "\" x2=\"" << x << "\" y2=\""
            << kTop + ph + 5 << "\" stroke=\"#333\"/>\n";
        out << "<text x=\"" << x << "\" y=\"" << kTop + ph + 20
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    for (double t : nice_ticks(yr.lo, yr.hi)) {
        double y = py(t);
        out << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << y << "\" x2=\"" << kLeft << "\" y2=\""
            << y << "\" stroke=\"#333\"/>\n";
        out << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\""
            << y << "\" stroke=\"#eee\"/>\n";
        out << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t)
            << "</text>\n";
    }
    out << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" << esc(x_label)
        << "</text>\n";
    out << "<text x=\"18\" y=\"" << kTop + ph / 2
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 "
        << kTop + ph / 2 << ")\">" << esc(y_label) << "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
        for (std::size_t i = 0; i < series[s].x.size(); ++i)
            out << px(series[s].x[i]) << ',' << py(series[s].y[i]) << ' ';
        out << "\"/>\n";
        double ly = kTop + 14 + 20.0 * double(s);
        out << "<line x1=\"" << kLeft + pw + 12 << "\" y1=\"" << ly << "\" x2=\""
            << kLeft + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
            << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4
            << "\" font-family=\"sans-serif\" font-size=\"12\">" << esc(series[s].label)
            << "</text>\n";
    }
    out << "</svg>\n";

    std::ofstream f(path);
    if (!f) throw IoError("cannot write SVG: " + path.string());
    f << out.str();
}

void write_heatmap(const std::filesystem::path& path, const std::string& title, const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw Error("heatmap: empty matrix");
    if (!m.all_finite()) throw Error("heatmap: non-finite value");

    double amax = 0.0;
    for (double v : m.data()) amax = std::max(amax, std::abs(v));
    if (amax == 0.0) amax = 1.0;

    const int cells_w = 560, legend = 90, margin = 50;
    double cell = double(cells_w) / double(std::max(m.rows(), m.cols()));
    int width = int(margin * 2 + m.cols() * cell) + legend;
    int height = int(margin * 2 + m.rows() * cell);

    // Diverging scale symmetric around 0: blue (negative) - white - red (positive).
    auto color = [amax](double v) {
        double t = std::clamp(v / amax, -1.0, 1.0);
        auto lerp = [](int from, int to, double u) { return int(from + (to - from) * u); };
        int r, g, b;
        if (t >= 0) {  // white -> red
            r = lerp(255, 178, t);
            g = lerp(255, 24, t);
            b = lerp(255, 43, t);
        } else {  // white -> blue
            r = lerp(255, 33, -t);
            g = lerp(255, 102, -t);
            b = lerp(255, 172, -t);
        }
        char buf[8];
        std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
        return std::string(buf);
    };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"15\">"
        << esc(title) << "</text>\n";
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out << "<rect x=\"" << margin + double(j) * cell << "\" y=\""
                << margin + double(i) * cell << "\" width=\"" << cell << "\" height=\"" << cell
                << "\" fill=\"" << color(m(i, j)) << "\"/>\n";
    // Legend: vertical gradient bar with end labels.
    double bx = margin + m.cols() * cell + 24;
    const int steps = 32;
    double bh = m.rows() * cell;
    for (int s = 0; s < steps; ++s) {
        double v = amax - 2.0 * amax * (double(s) + 0.5) / steps;
        out << "<rect x=\"" << bx << "\" y=\"" << margin + bh * s / steps << "\" width=\"16\" "
            << "height=\"" << bh / steps + 0.5 << "\" fill=\"" << color(v) << "\"/>\n";
    }
    out << "<text x=\"" << bx + 20 << "\" y=\"" << margin + 8
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(amax) << "</text>\n";
    out << "<text x=\"" << bx + 20 << "\" y=\"" << margin + bh
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(-amax) << "</text>\n";
    out << "</svg>\n";

    std::ofstream f(path);
    if (!f) throw IoError("cannot write SVG: " + path.string());
    f << out.str();
}

}  // namespace gih::svg
