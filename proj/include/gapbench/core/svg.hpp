#pragma once

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gapbench/core/csv.hpp"
#include "gapbench/core/error.hpp"

namespace gapbench {

// Minimal deterministic SVG plotting: line charts with shaded envelopes and
// scatter plots. Data coordinates are mapped to a fixed-size canvas with
// margins; output bytes depend only on the input data.
class SvgFigure {
public:
    SvgFigure(double xmin, double xmax, double ymin, double ymax,
              int width = 640, int height = 420)
        : xmin_(xmin), xmax_(xmax), ymin_(ymin), ymax_(ymax), w_(width), h_(height) {
        if (xmax_ <= xmin_) xmax_ = xmin_ + 1.0;
        if (ymax_ <= ymin_) ymax_ = ymin_ + 1.0;
    }

    void polyline(const std::vector<double>& xs, const std::vector<double>& ys,
                  const std::string& color, double stroke_width = 1.5,
                  const std::string& dash = "") {
        require(xs.size() == ys.size(), "polyline: x/y size mismatch");
        std::ostringstream p;
        for (std::size_t i = 0; i < xs.size(); ++i)
            p << fmt_double(px(xs[i])) << ',' << fmt_double(py(ys[i])) << ' ';
        body_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\""
              << fmt_double(stroke_width) << "\"";
        if (!dash.empty()) body_ << " stroke-dasharray=\"" << dash << "\"";
        body_ << " points=\"" << p.str() << "\"/>\n";
    }

    // Shaded band between (xs, lo) and (xs, hi).
    void envelope(const std::vector<double>& xs, const std::vector<double>& lo,
                  const std::vector<double>& hi, const std::string& color,
                  double opacity = 0.25) {
        require(xs.size() == lo.size() && xs.size() == hi.size(), "envelope: size mismatch");
        std::ostringstream p;
        for (std::size_t i = 0; i < xs.size(); ++i)
            p << fmt_double(px(xs[i])) << ',' << fmt_double(py(hi[i])) << ' ';
        for (std::size_t i = xs.size(); i-- > 0;)
            p << fmt_double(px(xs[i])) << ',' << fmt_double(py(lo[i])) << ' ';
        body_ << "<polygon fill=\"" << color << "\" fill-opacity=\"" << fmt_double(opacity)
              << "\" stroke=\"none\" points=\"" << p.str() << "\"/>\n";
    }

    void scatter(const std::vector<double>& xs, const std::vector<double>& ys,
                 const std::string& color, double radius = 3.0) {
        require(xs.size() == ys.size(), "scatter: x/y size mismatch");
        for (std::size_t i = 0; i < xs.size(); ++i)
            body_ << "<circle cx=\"" << fmt_double(px(xs[i])) << "\" cy=\"" << fmt_double(py(ys[i]))
                  << "\" r=\"" << fmt_double(radius) << "\" fill=\"" << color
                  << "\" fill-opacity=\"0.7\"/>\n";
    }

    void marker(double x, double y, const std::string& color, double radius = 5.0) {
        body_ << "<circle cx=\"" << fmt_double(px(x)) << "\" cy=\"" << fmt_double(py(y))
              << "\" r=\"" << fmt_double(radius) << "\" fill=\"none\" stroke=\"" << color
              << "\" stroke-width=\"2\"/>\n";
    }

    void text(double x, double y, const std::string& s, int font_px = 12,
              const std::string& color = "#333333") {
        body_ << "<text x=\"" << fmt_double(px(x)) << "\" y=\"" << fmt_double(py(y))
              << "\" font-size=\"" << font_px << "\" font-family=\"sans-serif\" fill=\""
              << color << "\">" << s << "</text>\n";
    }

    void title(const std::string& s) { title_ = s; }
    void xlabel(const std::string& s) { xlabel_ = s; }
    void ylabel(const std::string& s) { ylabel_ = s; }

    void legend_entry(const std::string& label, const std::string& color) {
        legend_.emplace_back(label, color);
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        require(out.good(), "cannot open SVG for writing: " + path);
        out << render();
    }

    std::string render() const {
        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
            << "\" viewBox=\"0 0 " << w_ << ' ' << h_ << "\">\n";
        out << "<rect x=\"0\" y=\"0\" width=\"" << w_ << "\" height=\"" << h_
            << "\" fill=\"white\"/>\n";
        // frame + ticks
        out << "<rect x=\"" << margin_ << "\" y=\"" << margin_ << "\" width=\"" << (w_ - 2 * margin_)
            << "\" height=\"" << (h_ - 2 * margin_)
            << "\" fill=\"none\" stroke=\"#888888\" stroke-width=\"1\"/>\n";
        for (int i = 0; i <= 4; ++i) {
            const double fx = xmin_ + (xmax_ - xmin_) * i / 4.0;
            const double fy = ymin_ + (ymax_ - ymin_) * i / 4.0;
            out << "<text x=\"" << fmt_double(px(fx)) << "\" y=\"" << (h_ - margin_ + 16)
                << "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#555555\" "
                   "text-anchor=\"middle\">"
                << fmt_double(round3(fx)) << "</text>\n";
            out << "<text x=\"" << (margin_ - 6) << "\" y=\"" << fmt_double(py(fy) + 3)
                << "\" font-size=\"10\" font-family=\"sans-serif\" fill=\"#555555\" "
                   "text-anchor=\"end\">"
                << fmt_double(round3(fy)) << "</text>\n";
        }
        if (!title_.empty())
            out << "<text x=\"" << (w_ / 2) << "\" y=\"" << (margin_ - 8)
                << "\" font-size=\"14\" font-family=\"sans-serif\" fill=\"#222222\" "
                   "text-anchor=\"middle\">"
                << title_ << "</text>\n";
        if (!xlabel_.empty())
            out << "<text x=\"" << (w_ / 2) << "\" y=\"" << (h_ - 6)
                << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"#333333\" "
                   "text-anchor=\"middle\">"
                << xlabel_ << "</text>\n";
        if (!ylabel_.empty())
            out << "<text x=\"14\" y=\"" << (h_ / 2)
                << "\" font-size=\"12\" font-family=\"sans-serif\" fill=\"#333333\" "
                   "text-anchor=\"middle\" transform=\"rotate(-90 14 "
                << (h_ / 2) << ")\">" << ylabel_ << "</text>\n";
        int ly = margin_ + 14;
        for (const auto& [label, color] : legend_) {
            out << "<rect x=\"" << (w_ - margin_ - 110) << "\" y=\"" << (ly - 9)
                << "\" width=\"18\" height=\"6\" fill=\"" << color << "\"/>\n";
            out << "<text x=\"" << (w_ - margin_ - 86) << "\" y=\"" << ly
                << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#333333\">" << label
                << "</text>\n";
            ly += 16;
        }
        out << body_.str();
        out << "</svg>\n";
        return out.str();
    }

private:
    double px(double x) const { return margin_ + (x - xmin_) / (xmax_ - xmin_) * (w_ - 2 * margin_); }
    double py(double y) const { return h_ - margin_ - (y - ymin_) / (ymax_ - ymin_) * (h_ - 2 * margin_); }
    static double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

    double xmin_, xmax_, ymin_, ymax_;
    int w_, h_;
    int margin_ = 46;
    std::string title_, xlabel_, ylabel_;
    std::vector<std::pair<std::string, std::string>> legend_;
    std::ostringstream body_;
};

}  // namespace gapbench
