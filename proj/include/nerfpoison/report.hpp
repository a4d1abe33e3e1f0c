#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nerfpoison/errors.hpp"

namespace nerfpoison {

struct ReportRun {
  std::string arm;
  double rho = 0.0;
  std::string csv_path;
};

struct MetricRow {
  std::string scene, view;
  double psnr = 0.0, ssim = 0.0;
};

inline std::vector<MetricRow> read_metrics_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("read_metrics_csv: cannot open " + path);
  std::vector<MetricRow> rows;
  std::string line;
  if (!std::getline(f, line) || line != "scene,view,psnr_db,ssim")
    throw DataError("read_metrics_csv: bad header in " + path);
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    MetricRow r;
    std::string psnr, ssim;
    if (!std::getline(ss, r.scene, ',') || !std::getline(ss, r.view, ',') ||
        !std::getline(ss, psnr, ',') || !std::getline(ss, ssim, ','))
      throw DataError("read_metrics_csv: malformed row in " + path);
    try {
      r.psnr = std::stod(psnr);
      r.ssim = std::stod(ssim);
    } catch (const std::exception&) {
      throw DataError("read_metrics_csv: non-numeric metric in " + path);
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DataError("read_metrics_csv: no rows in " + path);
  return rows;
}

inline double mean_psnr(const std::vector<MetricRow>& rows) {
  for (const MetricRow& r : rows)
    if (r.view == "mean") return r.psnr;
  throw DataError("read_metrics_csv: missing mean row");
}

// Line chart of mean held-out PSNR vs rho, one polyline per arm, plus a
// merged CSV alongside (svg path with ".csv" appended).
inline void write_report(const std::vector<ReportRun>& runs, const std::string& svg_path) {
  if (runs.empty()) throw ConfigError("write_report: need at least one run");

  std::map<std::string, std::vector<std::pair<double, double>>> series;  // arm -> (rho, psnr)
  std::ofstream merged(svg_path + ".csv");
  if (!merged) throw DataError("write_report: cannot open " + svg_path + ".csv");
  merged << "arm,rho,scene,view,psnr_db,ssim\n";
  for (const ReportRun& run : runs) {
    auto rows = read_metrics_csv(run.csv_path);
    for (const MetricRow& r : rows)
      merged << run.arm << ',' << run.rho << ',' << r.scene << ',' << r.view << ',' << r.psnr
             << ',' << r.ssim << '\n';
    series[run.arm].emplace_back(run.rho, mean_psnr(rows));
  }

  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (auto& [arm, pts] : series) {
    std::sort(pts.begin(), pts.end());
    for (auto [x, y] : pts) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) ymax = ymin + 1.0;

  const double w = 640, h = 420, ml = 60, mr = 20, mt = 20, mb = 50;
  auto sx = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr); };
  auto sy = [&](double y) { return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb); };
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  std::ofstream svg(svg_path);
  if (!svg) throw DataError("write_report: cannot open " + svg_path);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << h - mb
      << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\" font-size=\"14\">perturbation budget rho (px)</text>\n";
  svg << "<text x=\"16\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 16 "
      << (mt + h - mb) / 2 << ")\">held-out PSNR (dB)</text>\n";

  int ci = 0;
  for (const auto& [arm, pts] : series) {
    const char* color = colors[ci % 5];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (auto [x, y] : pts) svg << sx(x) << ',' << sy(y) << ' ';
    svg << "\"/>\n";
    for (auto [x, y] : pts)
      svg << "<circle cx=\"" << sx(x) << "\" cy=\"" << sy(y) << "\" r=\"3\" fill=\"" << color
          << "\"/>\n";
    svg << "<text x=\"" << w - mr - 10 << "\" y=\"" << mt + 18 + 18 * ci
        << "\" text-anchor=\"end\" font-size=\"13\" fill=\"" << color << "\">" << arm
        << "</text>\n";
    ++ci;
  }
  svg << "</svg>\n";
}

}  // namespace nerfpoison
