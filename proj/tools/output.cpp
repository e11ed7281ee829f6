#include "output.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace hlock::cli
{
namespace
{
std::string fixed(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string escape_xml(const std::string &s)
{
    std::string out;
    for (char c : s) {
        switch (c) {
        case '<':
            out += "&lt;";
            break;
        case '>':
            out += "&gt;";
            break;
        case '&':
            out += "&amp;";
            break;
        default:
            out += c;
        }
    }
    return out;
}

const char *kColours[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
}  // namespace

std::string format_number(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12e", x);
    return buf;
}

std::string render_csv(const Provenance &prov, const std::vector<Column> &columns)
{
    if (columns.empty()) {
        throw std::invalid_argument("csv needs at least one column");
    }
    const std::size_t rows = columns.front().values.size();
    for (const auto &c : columns) {
        if (c.values.size() != rows) {
            throw std::logic_error("csv column '" + c.name + "' has a different length");
        }
    }
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016" PRIx64, prov.config_hash);

    std::string out;
    out += "# hlock " + std::string(kVersion) + "\n";
    out += "# command: " + prov.command + "\n";
    out += "# config_hash: fnv1a64:" + std::string(hash) + "\n";
    out += "# seed: " + std::to_string(prov.seed) + "\n";
    for (const auto &n : prov.notes) {
        out += "# " + n + "\n";
    }
    for (std::size_t c = 0; c < columns.size(); ++c) {
        out += (c ? "," : "") + columns[c].name;
    }
    out += "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < columns.size(); ++c) {
            if (c) out += ',';
            out += format_number(columns[c].values[r]);
        }
        out += '\n';
    }
    return out;
}

void write_text(const std::filesystem::path &path, const std::string &content)
{
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) {
        throw std::runtime_error("cannot write " + path.string());
    }
    f << content;
    if (!f) {
        throw std::runtime_error("write failed for " + path.string());
    }
}

std::string render_svg(const std::string &title, const std::string &x_label,
                       const std::vector<double> &x, const std::vector<Series> &series)
{
    constexpr double w = 720.0, h = 440.0, left = 70.0, right = 20.0, top = 40.0, bottom = 50.0;
    double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
    if (!x.empty()) {
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        x0 = *lo;
        x1 = *hi;
    }
    bool first = true;
    for (const auto &s : series) {
        for (double v : *s.y) {
            if (!std::isfinite(v)) continue;
            y0 = first ? v : std::min(y0, v);
            y1 = first ? v : std::max(y1, v);
            first = false;
        }
    }
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
        y0 -= 0.5;
        y1 += 0.5;
    }
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;
    auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (w - left - right); };
    auto py = [&](double v) { return h - bottom - (v - y0) / (y1 - y0) * (h - top - bottom); };

    std::string out;
    out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"720\" height=\"440\" "
           "font-family=\"sans-serif\" font-size=\"12\">\n";
    out += "<rect width=\"720\" height=\"440\" fill=\"white\"/>\n";
    out += "<text x=\"360\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + escape_xml(title) +
           "</text>\n";
    out += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" +
           fixed(w - left - right) + "\" height=\"" + fixed(h - top - bottom) +
           "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double xv = x0 + (x1 - x0) * i / 4.0;
        const double yv = y0 + (y1 - y0) * i / 4.0;
        char lx[32], ly[32];
        std::snprintf(lx, sizeof lx, "%.3g", xv);
        std::snprintf(ly, sizeof ly, "%.3g", yv);
        out += "<text x=\"" + fixed(px(xv)) + "\" y=\"" + fixed(h - bottom + 16) +
               "\" text-anchor=\"middle\">" + lx + "</text>\n";
        out += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(py(yv) + 4) +
               "\" text-anchor=\"end\">" + ly + "</text>\n";
    }
    out += "<text x=\"" + fixed(left + (w - left - right) / 2) + "\" y=\"" + fixed(h - 12) +
           "\" text-anchor=\"middle\">" + escape_xml(x_label) + "</text>\n";
    for (std::size_t s = 0; s < series.size(); ++s) {
        const char *colour = kColours[s % (sizeof kColours / sizeof kColours[0])];
        out += "<polyline fill=\"none\" stroke-width=\"1.5\" stroke=\"" + std::string(colour) +
               "\" points=\"";
        const auto &y = *series[s].y;
        for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
            if (!std::isfinite(y[i])) continue;
            out += fixed(px(x[i])) + "," + fixed(py(y[i])) + " ";
        }
        out += "\"/>\n";
        out += "<text x=\"" + fixed(w - right - 6) + "\" y=\"" + fixed(top + 16 + 14.0 * s) +
               "\" text-anchor=\"end\" fill=\"" + colour + "\">" + escape_xml(series[s].name) +
               "</text>\n";
    }
    out += "</svg>\n";
    return out;
}

}  // namespace hlock::cli
