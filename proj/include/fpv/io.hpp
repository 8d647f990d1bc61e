#pragma once

#include <string>
#include <vector>

namespace fpv::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

/// SHA-256 hex digest (input manifests and report provenance).
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::string& path);

/// Minimal SVG chart canvas with a linear data-to-pixel mapping.
class SvgCanvas {
public:
    SvgCanvas(int width, int height, double x_min, double x_max, double y_min, double y_max,
              std::string title = "");

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width = 1.0, bool dashed = false);
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& color,
                  double width = 1.5);
    void rect(double x1, double y1, double x2, double y2, const std::string& fill,
              const std::string& stroke);
    void circle(double x, double y, double radius_px, const std::string& color);
    void text(double x, double y, const std::string& label, int size = 11,
              const std::string& anchor = "middle", double rotate_deg = 0.0);
    void x_axis_labels(const std::vector<std::pair<double, std::string>>& ticks,
                       double rotate_deg = 0.0);
    void y_axis_labels(int n_ticks = 5);

    std::string finish();

private:
    double px(double x) const;
    double py(double y) const;

    int width_, height_;
    double x_min_, x_max_, y_min_, y_max_;
    std::string body_;
};

/// Box plot (quartiles, whiskers at min/max) of one series per named group.
std::string boxplot_svg(const std::string& title,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series);

}  // namespace fpv::io
