#include "fpv/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fpv/graph.hpp"  // fpv::Error

namespace fpv::io {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("FileNotFound", "cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("FileWriteError", "cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("FileWriteError", "short write on " + path);
}

// ---------------------------------------------------------------------------
// SHA-256 (FIPS 180-4), self-contained
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kK[64] = {
    0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1, 0x923f82a4,
    0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3, 0x72be5d74, 0x80deb1fe,
    0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786, 0x0fc19dc6, 0x240ca1cc, 0x2de92c6f,
    0x4a7484aa, 0x5cb0a9dc, 0x76f988da, 0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7,
    0xc6e00bf3, 0xd5a79147, 0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc,
    0x53380d13, 0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
    0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070, 0x19a4c116,
    0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a, 0x5b9cca4f, 0x682e6ff3,
    0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208, 0x90befffa, 0xa4506ceb, 0xbef9a3f7,
    0xc67178f2};

inline std::uint32_t rotr(std::uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

}  // namespace

std::string sha256_hex(const std::string& bytes) {
    std::uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                          0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    std::string msg = bytes;
    std::uint64_t bit_len = static_cast<std::uint64_t>(msg.size()) * 8;
    msg.push_back(static_cast<char>(0x80));
    while (msg.size() % 64 != 56) msg.push_back('\0');
    for (int i = 7; i >= 0; --i) msg.push_back(static_cast<char>((bit_len >> (i * 8)) & 0xff));

    std::uint32_t w[64];
    for (size_t block = 0; block < msg.size(); block += 64) {
        const unsigned char* p = reinterpret_cast<const unsigned char*>(msg.data() + block);
        for (int t = 0; t < 16; ++t)
            w[t] = (p[t * 4] << 24) | (p[t * 4 + 1] << 16) | (p[t * 4 + 2] << 8) | p[t * 4 + 3];
        for (int t = 16; t < 64; ++t) {
            std::uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
            std::uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
            w[t] = w[t - 16] + s0 + w[t - 7] + s1;
        }
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4], f = h[5], g = h[6],
                      hh = h[7];
        for (int t = 0; t < 64; ++t) {
            std::uint32_t s1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
            std::uint32_t ch = (e & f) ^ (~e & g);
            std::uint32_t temp1 = hh + s1 + ch + kK[t] + w[t];
            std::uint32_t s0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
            std::uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
            std::uint32_t temp2 = s0 + maj;
            hh = g;
            g = f;
            f = e;
            e = d + temp1;
            d = c;
            c = b;
            b = a;
            a = temp1 + temp2;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
        h[5] += f;
        h[6] += g;
        h[7] += hh;
    }

    char out[65];
    for (int i = 0; i < 8; ++i) std::snprintf(out + i * 8, 9, "%08x", h[i]);
    return std::string(out, 64);
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_file(path)); }

// ---------------------------------------------------------------------------
// SVG
// ---------------------------------------------------------------------------

namespace {
constexpr int kMarginLeft = 70, kMarginRight = 20, kMarginTop = 40, kMarginBottom = 70;

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}
}  // namespace

SvgCanvas::SvgCanvas(int width, int height, double x_min, double x_max, double y_min, double y_max,
                     std::string title)
    : width_(width), height_(height), x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max) {
    if (x_max_ == x_min_) x_max_ = x_min_ + 1;
    if (y_max_ == y_min_) y_max_ = y_min_ + 1;
    body_ += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width_) +
             "\" height=\"" + std::to_string(height_) + "\" font-family=\"sans-serif\">\n";
    body_ += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    if (!title.empty())
        body_ += "<text x=\"" + num(width_ / 2.0) + "\" y=\"20\" text-anchor=\"middle\" "
                 "font-size=\"14\">" + title + "</text>\n";
    // Axes.
    line(x_min_, y_min_, x_max_, y_min_, "#333", 1.0);
    line(x_min_, y_min_, x_min_, y_max_, "#333", 1.0);
}

double SvgCanvas::px(double x) const {
    return kMarginLeft + (x - x_min_) / (x_max_ - x_min_) * (width_ - kMarginLeft - kMarginRight);
}

double SvgCanvas::py(double y) const {
    return height_ - kMarginBottom -
           (y - y_min_) / (y_max_ - y_min_) * (height_ - kMarginTop - kMarginBottom);
}

void SvgCanvas::line(double x1, double y1, double x2, double y2, const std::string& color,
                     double width, bool dashed) {
    body_ += "<line x1=\"" + num(px(x1)) + "\" y1=\"" + num(py(y1)) + "\" x2=\"" + num(px(x2)) +
             "\" y2=\"" + num(py(y2)) + "\" stroke=\"" + color + "\" stroke-width=\"" +
             num(width) + "\"" + (dashed ? " stroke-dasharray=\"4 3\"" : "") + "/>\n";
}

void SvgCanvas::polyline(const std::vector<std::pair<double, double>>& pts,
                         const std::string& color, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"" + num(width) +
             "\" points=\"";
    for (const auto& [x, y] : pts) body_ += num(px(x)) + "," + num(py(y)) + " ";
    body_ += "\"/>\n";
}

void SvgCanvas::rect(double x1, double y1, double x2, double y2, const std::string& fill,
                     const std::string& stroke) {
    double rx = std::min(px(x1), px(x2)), ry = std::min(py(y1), py(y2));
    double w = std::fabs(px(x2) - px(x1)), h = std::fabs(py(y2) - py(y1));
    body_ += "<rect x=\"" + num(rx) + "\" y=\"" + num(ry) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke + "\"/>\n";
}

void SvgCanvas::circle(double x, double y, double radius_px, const std::string& color) {
    body_ += "<circle cx=\"" + num(px(x)) + "\" cy=\"" + num(py(y)) + "\" r=\"" + num(radius_px) +
             "\" fill=\"" + color + "\"/>\n";
}

void SvgCanvas::text(double x, double y, const std::string& label, int size,
                     const std::string& anchor, double rotate_deg) {
    double cx = px(x), cy = py(y);
    body_ += "<text x=\"" + num(cx) + "\" y=\"" + num(cy) + "\" font-size=\"" +
             std::to_string(size) + "\" text-anchor=\"" + anchor + "\"";
    if (rotate_deg != 0.0)
        body_ += " transform=\"rotate(" + num(rotate_deg) + " " + num(cx) + " " + num(cy) + ")\"";
    body_ += ">" + label + "</text>\n";
}

void SvgCanvas::x_axis_labels(const std::vector<std::pair<double, std::string>>& ticks,
                              double rotate_deg) {
    double y_offset = (y_max_ - y_min_) * 0.06;
    for (const auto& [x, label] : ticks)
        text(x, y_min_ - y_offset, label, 10, rotate_deg == 0.0 ? "middle" : "end", rotate_deg);
}

void SvgCanvas::y_axis_labels(int n_ticks) {
    for (int i = 0; i <= n_ticks; ++i) {
        double y = y_min_ + (y_max_ - y_min_) * i / n_ticks;
        double x_offset = (x_max_ - x_min_) * 0.01;
        text(x_min_ - x_offset, y, num(y), 10, "end");
        if (i > 0) line(x_min_, y, x_max_, y, "#eee", 0.5);
    }
}

std::string SvgCanvas::finish() { return body_ + "</svg>\n"; }

std::string boxplot_svg(const std::string& title,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    double lo = 1e300, hi = -1e300;
    for (const auto& [name, values] : series)
        for (double v : values) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (series.empty() || lo > hi) throw Error("BadInput", "boxplot needs data");
    double pad = (hi - lo) * 0.08 + 1e-12;
    SvgCanvas svg(120 + static_cast<int>(series.size()) * 110, 360, 0,
                  static_cast<double>(series.size()), lo - pad, hi + pad, title);
    svg.y_axis_labels();

    auto quantile = [](std::vector<double> v, double q) {
        std::sort(v.begin(), v.end());
        double pos = q * (v.size() - 1);
        size_t i = static_cast<size_t>(pos);
        double frac = pos - i;
        return i + 1 < v.size() ? v[i] * (1 - frac) + v[i + 1] * frac : v[i];
    };

    std::vector<std::pair<double, std::string>> ticks;
    for (size_t s = 0; s < series.size(); ++s) {
        const auto& values = series[s].second;
        double center = s + 0.5;
        ticks.emplace_back(center, series[s].first);
        if (values.empty()) continue;
        double q1 = quantile(values, 0.25), q2 = quantile(values, 0.5), q3 = quantile(values, 0.75);
        double mn = *std::min_element(values.begin(), values.end());
        double mx = *std::max_element(values.begin(), values.end());
        svg.line(center, mn, center, q1, "#555", 1.0);
        svg.line(center, q3, center, mx, "#555", 1.0);
        svg.rect(center - 0.25, q1, center + 0.25, q3, "#9ecae1", "#333");
        svg.line(center - 0.25, q2, center + 0.25, q2, "#333", 1.5);
    }
    svg.x_axis_labels(ticks);
    return svg.finish();
}

}  // namespace fpv::io
