#pragma once

#include <string>
#include <vector>

namespace ros {

// Self-contained SVG line/scatter plots: fixed-size canvas, numeric axis
// labels, legend; no external resources, so the files render anywhere.
class SvgPlot {
 public:
  SvgPlot(std::string title, std::string xlabel, std::string ylabel,
          int width = 720, int height = 480);

  void add_line(const std::string& name, const std::vector<double>& xs,
                const std::vector<double>& ys);
  void add_points(const std::string& name, const std::vector<double>& xs,
                  const std::vector<double>& ys);
  void add_hline(const std::string& name, double y);

  std::string render() const;
  void save(const std::string& path) const;

 private:
  struct Series {
    std::string name;
    std::vector<double> xs, ys;
    bool points = false;
  };
  std::string title_, xlabel_, ylabel_;
  int width_, height_;
  std::vector<Series> series_;
  std::vector<std::pair<std::string, double>> hlines_;
};

}  // namespace ros
