#include <algorithm>
#include <cmath>
#include <sstream>

#include "eivlpe/bench.hpp"

namespace eivlpe {

namespace {

std::string escape(const std::string& s)
{
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

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string render_svg(const std::string& title, const std::vector<PlotSeries>& series)
{
    const double W = 720, H = 440, L = 70, R = 150, T = 40, B = 50;
    double xmax = 10, ymax = 0;
    for (const auto& s : series) {
        for (const auto& [x, y] : s.points) {
            if (x >= 1 && std::isfinite(y)) {
                xmax = std::max(xmax, x);
                ymax = std::max(ymax, y);
            }
        }
    }
    if (ymax <= 0)
        ymax = 1;
    const double decades = std::ceil(std::log10(xmax));
    auto px = [&](double x) { return L + (W - L - R) * std::log10(std::max(x, 1.0)) / decades; };
    auto py = [&](double y) { return T + (H - T - B) * (1.0 - std::min(y, ymax) / ymax); };

    std::ostringstream os;
    os.precision(6);
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 - R / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
       << "</text>\n";
    os << "<g stroke=\"#ccc\" font-size=\"11\">\n";
    for (int d = 0; d <= static_cast<int>(decades); ++d) {
        const double x = px(std::pow(10.0, d));
        os << "<line x1=\"" << x << "\" y1=\"" << T << "\" x2=\"" << x << "\" y2=\"" << H - B << "\"/>"
           << "<text x=\"" << x << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" stroke=\"none\">1e" << d
           << "</text>\n";
    }
    for (int k = 0; k <= 4; ++k) {
        const double v = ymax * k / 4.0;
        os << "<line x1=\"" << L << "\" y1=\"" << py(v) << "\" x2=\"" << W - R << "\" y2=\"" << py(v) << "\"/>"
           << "<text x=\"" << L - 6 << "\" y=\"" << py(v) + 4 << "\" text-anchor=\"end\" stroke=\"none\">" << v
           << "</text>\n";
    }
    os << "</g>\n";
    os << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">"
       << "iteration</text>\n"
       << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" transform=\"rotate(-90 16 " << (T + H - B) / 2
       << ")\" text-anchor=\"middle\" font-size=\"12\">%ARE(r)</text>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const char* color = kColors[k % std::size(kColors)];
        os << "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" << color << "\" points=\"";
        for (const auto& [x, y] : series[k].points) {
            if (x >= 1 && std::isfinite(y))
                os << px(x) << ',' << py(y) << ' ';
        }
        os << "\"/>\n";
        const double ly = T + 18.0 * static_cast<double>(k) + 10;
        os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 30 << "\" y2=\"" << ly
           << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
           << "<text x=\"" << W - R + 36 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << escape(series[k].name)
           << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace eivlpe
