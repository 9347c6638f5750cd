#pragma once

// Minimal SVG writer for line plots. Output is plain deterministic text with
// fixed number formatting; no timestamps.

#include <string>
#include <vector>

#include "crlm/core/text.hpp"

namespace crlm::svg {

inline std::string num(double v) { return format_fixed(v, 2); }

inline std::string escape(std::string_view s) {
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

inline const char* palette(std::size_t i) {
    static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
    return colors[i % 6];
}

// Data-space to pixel mapping for one plot panel.
struct Frame {
    double left = 70, top = 40, width = 520, height = 300;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * width; }
    double py(double y) const { return top + (y1 - y) / (y1 - y0) * height; }
};

class Document {
public:
    Document(double width, double height) : width_(width), height_(height) {}

    void comment(const std::string& text) { body_ += "<!-- " + escape(text) + " -->\n"; }

    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double w = 1.0,
              const std::string& dash = "") {
        body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" + num(y2) +
                 "\" stroke=\"" + stroke + "\" stroke-width=\"" + num(w) + "\"" +
                 (dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"") + "/>\n";
    }

    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke, double w = 1.5,
                  const std::string& dash = "") {
        std::string p;
        for (const auto& [x, y] : pts) p += num(x) + "," + num(y) + " ";
        if (!p.empty()) p.pop_back();
        body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" + num(w) + "\"" +
                 (dash.empty() ? "" : " stroke-dasharray=\"" + dash + "\"") + " points=\"" + p + "\"/>\n";
    }

    void text(double x, double y, const std::string& s, const std::string& anchor = "start", int size = 12,
              const std::string& fill = "#000") {
        body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-family=\"sans-serif\" font-size=\"" +
                 std::to_string(size) + "\" text-anchor=\"" + anchor + "\" fill=\"" + fill + "\">" + escape(s) +
                 "</text>\n";
    }

    // Box, ticks and labels for a frame.
    void axes(const Frame& f, const std::vector<double>& xticks, const std::vector<double>& yticks,
              const std::string& xlabel, const std::string& ylabel) {
        body_ += "<rect x=\"" + num(f.left) + "\" y=\"" + num(f.top) + "\" width=\"" + num(f.width) + "\" height=\"" +
                 num(f.height) + "\" fill=\"none\" stroke=\"#000\"/>\n";
        for (double t : xticks) {
            line(f.px(t), f.top + f.height, f.px(t), f.top + f.height + 5, "#000");
            text(f.px(t), f.top + f.height + 18, format_double(t), "middle", 11);
        }
        for (double t : yticks) {
            line(f.left - 5, f.py(t), f.left, f.py(t), "#000");
            text(f.left - 8, f.py(t) + 4, format_double(t), "end", 11);
        }
        text(f.left + f.width / 2, f.top + f.height + 36, xlabel, "middle", 12);
        body_ += "<text x=\"" + num(f.left - 48) + "\" y=\"" + num(f.top + f.height / 2) +
                 "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 " +
                 num(f.left - 48) + " " + num(f.top + f.height / 2) + ")\">" + escape(ylabel) + "</text>\n";
    }

    std::string str() const {
        return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width_) + "\" height=\"" + num(height_) +
               "\" viewBox=\"0 0 " + num(width_) + " " + num(height_) + "\">\n<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" +
               body_ + "</svg>\n";
    }

private:
    double width_, height_;
    std::string body_;
};

inline std::vector<double> ticks(double lo, double hi, std::size_t count) {
    std::vector<double> t;
    for (std::size_t i = 0; i <= count; ++i) t.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count));
    return t;
}

}  // namespace crlm::svg
