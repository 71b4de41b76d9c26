#include "ros/svg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ros/config.hpp"
#include "ros/csv.hpp"

namespace ros {

namespace {

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b"};

std::string fmt(double x) {
  std::ostringstream ss;
  ss.precision(6);
  ss << x;
  return ss.str();
}

}  // namespace

SvgPlot::SvgPlot(std::string title, std::string xlabel, std::string ylabel,
                 int width, int height)
    : title_(std::move(title)),
      xlabel_(std::move(xlabel)),
      ylabel_(std::move(ylabel)),
      width_(width),
      height_(height) {}

void SvgPlot::add_line(const std::string& name, const std::vector<double>& xs,
                       const std::vector<double>& ys) {
  series_.push_back({name, xs, ys, false});
}

void SvgPlot::add_points(const std::string& name, const std::vector<double>& xs,
                         const std::vector<double>& ys) {
  series_.push_back({name, xs, ys, true});
}

void SvgPlot::add_hline(const std::string& name, double y) {
  hlines_.push_back({name, y});
}

std::string SvgPlot::render() const {
  double xmin = 0.0, xmax = 1.0, ymin = 0.0, ymax = 1.0;
  bool first = true;
  for (const auto& s : series_) {
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      if (first) {
        xmin = xmax = s.xs[i];
        ymin = ymax = s.ys[i];
        first = false;
      }
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      ymin = std::min(ymin, s.ys[i]);
      ymax = std::max(ymax, s.ys[i]);
    }
  }
  for (const auto& h : hlines_) {
    if (first) {
      ymin = ymax = h.second;
      first = false;
    }
    ymin = std::min(ymin, h.second);
    ymax = std::max(ymax, h.second);
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) ymax = ymin + 1.0;
  double ypad = 0.06 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double ml = 70, mr = 20, mt = 40, mb = 50;
  double pw = width_ - ml - mr, ph = height_ - mt - mb;
  auto X = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto Y = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width_
      << "\" height=\"" << height_ << "\" viewBox=\"0 0 " << width_ << " "
      << height_ << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width_ / 2 << "\" y=\"22\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"15\">" << title_ << "</text>\n";
  // Axes box and ticks.
  out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double fx = xmin + (xmax - xmin) * i / 4.0;
    double fy = ymin + (ymax - ymin) * i / 4.0;
    out << "<text x=\"" << X(fx) << "\" y=\"" << height_ - mb + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << fmt(fx) << "</text>\n";
    out << "<text x=\"" << ml - 6 << "\" y=\"" << Y(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(fy) << "</text>\n";
    out << "<line x1=\"" << X(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(fx)
        << "\" y2=\"" << mt + ph + 4 << "\" stroke=\"#444\"/>\n";
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << Y(fy) << "\" x2=\"" << ml
        << "\" y2=\"" << Y(fy) << "\" stroke=\"#444\"/>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height_ - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
      << xlabel_ << "</text>\n";
  out << "<text x=\"16\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 16 " << mt + ph / 2 << ")\">" << ylabel_
      << "</text>\n";

  int color_i = 0;
  for (const auto& h : hlines_) {
    const char* c = kPalette[color_i++ % 6];
    out << "<line x1=\"" << ml << "\" y1=\"" << Y(h.second) << "\" x2=\""
        << ml + pw << "\" y2=\"" << Y(h.second) << "\" stroke=\"" << c
        << "\" stroke-dasharray=\"6 4\"/>\n";
  }
  for (const auto& s : series_) {
    const char* c = kPalette[color_i++ % 6];
    if (s.points) {
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        out << "<circle cx=\"" << X(s.xs[i]) << "\" cy=\"" << Y(s.ys[i])
            << "\" r=\"2.5\" fill=\"" << c << "\"/>\n";
    } else {
      out << "<polyline fill=\"none\" stroke=\"" << c
          << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        out << X(s.xs[i]) << "," << Y(s.ys[i]) << " ";
      out << "\"/>\n";
    }
  }
  // Legend.
  double ly = mt + 14;
  color_i = static_cast<int>(hlines_.size());
  for (const auto& h : hlines_) {
    int idx = static_cast<int>(&h - hlines_.data());
    out << "<text x=\"" << ml + 10 << "\" y=\"" << mt + 14 + 16 * idx
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << kPalette[idx % 6] << "\">" << h.first << " = " << fmt(h.second)
        << "</text>\n";
    ly += 16;
  }
  for (const auto& s : series_) {
    int idx = static_cast<int>(&s - series_.data());
    out << "<text x=\"" << ml + 10 << "\" y=\"" << ly + 16 * idx
        << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\""
        << kPalette[(static_cast<int>(hlines_.size()) + idx) % 6] << "\">"
        << s.name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void SvgPlot::save(const std::string& path) const {
  write_file_atomic(path, render());
}

}  // namespace ros
