#include "gce/plot.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "gce/error.hpp"
#include "gce/io.hpp"

namespace gce {
namespace {

constexpr std::array<const char*, 10> kPalette = {
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

const char* GroupColor(int group) {
  if (group < 0) return "#cccccc";
  return kPalette[static_cast<std::size_t>(group) % kPalette.size()];
}

std::string Fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

void WriteText(const std::filesystem::path& path, const std::string& text,
               PlotOutput& out) {
  std::ofstream file(path, std::ios::binary);
  if (!file) ThrowConfig("cannot write " + path.string());
  file << text;
  out.files.push_back(path);
}

std::string SvgOpen(int width, int height) {
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
    << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  return s.str();
}

std::string Heatmap(const Matrix& values, const std::string& title) {
  constexpr int kCell = 60;
  constexpr int kMargin = 50;
  const int l = static_cast<int>(values.rows());
  const int size = 2 * kMargin + l * kCell;
  std::ostringstream s;
  s << SvgOpen(size, size + 20);
  s << "<text x=\"" << size / 2 << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  for (int i = 0; i < l; ++i) {
    for (int j = 0; j < l; ++j) {
      const double v = std::clamp(values(i, j), 0.0, 1.0);
      const int shade = static_cast<int>(255.0 * (1.0 - v));
      const int x = kMargin + j * kCell;
      const int y = kMargin + i * kCell;
      s << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
        << "\" height=\"" << kCell << "\" fill=\"rgb(" << shade << ',' << shade
        << ",255)\" stroke=\"#444\"/>\n";
      s << "<text x=\"" << x + kCell / 2 << "\" y=\"" << y + kCell / 2 + 5
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" fill=\""
        << (v > 0.6 ? "white" : "black") << "\">" << Fixed(values(i, j)) << "</text>\n";
    }
    s << "<text x=\"" << kMargin - 10 << "\" y=\"" << kMargin + i * kCell + kCell / 2 + 5
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << i
      << "</text>\n";
    s << "<text x=\"" << kMargin + i * kCell + kCell / 2 << "\" y=\"" << kMargin - 8
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << i
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

struct Frame {
  double x_min, x_max, y_min, y_max;
  int left = 60, top = 40, width = 480, height = 360;

  double X(double v) const { return left + (v - x_min) / (x_max - x_min) * width; }
  double Y(double v) const { return top + height - (v - y_min) / (y_max - y_min) * height; }
};

Frame FitFrame(double x_min, double x_max, double y_min, double y_max) {
  const double pad_x = std::max((x_max - x_min) * 0.05, 1e-9);
  const double pad_y = std::max((y_max - y_min) * 0.05, 1e-9);
  return Frame{x_min - pad_x, x_max + pad_x, y_min - pad_y, y_max + pad_y};
}

std::string Axes(const Frame& f, const std::string& title, const std::string& x_label,
                 const std::string& y_label) {
  std::ostringstream s;
  s << "<text x=\"" << f.left + f.width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
    << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";
  s << "<rect x=\"" << f.left << "\" y=\"" << f.top << "\" width=\"" << f.width
    << "\" height=\"" << f.height << "\" fill=\"none\" stroke=\"#444\"/>\n";
  s << "<text x=\"" << f.left + f.width / 2 << "\" y=\"" << f.top + f.height + 35
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << x_label
    << "</text>\n";
  s << "<text x=\"15\" y=\"" << f.top + f.height / 2
    << "\" font-family=\"sans-serif\" font-size=\"12\">" << y_label << "</text>\n";
  for (int t = 0; t <= 4; ++t) {
    const double xv = f.x_min + (f.x_max - f.x_min) * t / 4.0;
    const double yv = f.y_min + (f.y_max - f.y_min) * t / 4.0;
    s << "<text x=\"" << Fixed(f.X(xv), 1) << "\" y=\"" << f.top + f.height + 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
      << Fixed(xv) << "</text>\n";
    s << "<text x=\"" << f.left - 5 << "\" y=\"" << Fixed(f.Y(yv) + 3, 1)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << Fixed(yv)
      << "</text>\n";
  }
  return s.str();
}

}  // namespace

PlotOutput EmitReportPlots(const MetricsReport& report,
                           const std::filesystem::path& dir, const std::string& stem) {
  PlotOutput out;
  WriteText(dir / (stem + "_correctness.svg"),
            Heatmap(report.correctness, "Correctness (row: from, column: to)"), out);
  WriteText(dir / (stem + "_coverage.svg"),
            Heatmap(report.coverage, "Coverage (row: from, column: to)"), out);
  Json spec;
  spec["type"] = "heatmap";
  spec["series"] = MetricsToJson(report);
  const auto spec_path = dir / (stem + "_heatmap.json");
  WriteJson(spec, spec_path);
  out.files.push_back(spec_path);
  return out;
}

PlotOutput EmitCurvePlots(const SweepResult& sweep, const std::filesystem::path& dir,
                          const std::string& stem) {
  PlotOutput out;
  for (const auto* curve : {&sweep.tgt, &sweep.dbm}) {
    const auto path = dir / (stem + "_" + std::string(MethodName(curve->method)) + ".csv");
    WriteTradeoffCsv(*curve, path);
    out.files.push_back(path);
  }
  Json spec;
  spec["type"] = "tradeoff";
  spec["x"] = "k";
  spec["series"] = {TradeoffToJson(sweep.tgt), TradeoffToJson(sweep.dbm)};
  const auto spec_path = dir / (stem + "_tradeoff.json");
  WriteJson(spec, spec_path);
  out.files.push_back(spec_path);

  if (sweep.tgt.points.empty()) return out;
  double k_min = sweep.tgt.points.front().k;
  double k_max = sweep.tgt.points.back().k;
  if (k_max == k_min) k_max = k_min + 1;
  Frame f = FitFrame(k_min, k_max, 0.0, 1.0);
  std::ostringstream s;
  s << SvgOpen(f.left + f.width + 160, f.top + f.height + 60);
  s << Axes(f, "Explanation quality vs sparsity", "k (features kept)", "");
  struct Series {
    const TradeoffCurve* curve;
    const char* metric;
    const char* color;
    const char* dash;
  };
  const Series series[] = {
      {&sweep.tgt, "correctness", "#1f77b4", ""},
      {&sweep.tgt, "coverage", "#1f77b4", "6,3"},
      {&sweep.tgt, "similarity", "#1f77b4", "2,3"},
      {&sweep.dbm, "correctness", "#d62728", ""},
      {&sweep.dbm, "coverage", "#d62728", "6,3"},
      {&sweep.dbm, "similarity", "#d62728", "2,3"},
  };
  int legend_y = f.top + 10;
  for (const auto& ser : series) {
    s << "<polyline fill=\"none\" stroke=\"" << ser.color << "\" stroke-width=\"2\"";
    if (*ser.dash) s << " stroke-dasharray=\"" << ser.dash << '"';
    s << " points=\"";
    for (const auto& p : ser.curve->points) {
      const double v = std::string_view(ser.metric) == "correctness" ? p.mean_correctness
                       : std::string_view(ser.metric) == "coverage"  ? p.mean_coverage
                                                                     : p.similarity;
      s << Fixed(f.X(p.k), 1) << ',' << Fixed(f.Y(v), 1) << ' ';
    }
    s << "\"/>\n";
    s << "<text x=\"" << f.left + f.width + 10 << "\" y=\"" << legend_y
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"" << ser.color << "\">"
      << MethodName(ser.curve->method) << ' ' << ser.metric << "</text>\n";
    legend_y += 16;
  }
  s << "</svg>\n";
  WriteText(dir / (stem + "_tradeoff.svg"), s.str(), out);
  return out;
}

PlotOutput EmitScatterPlots(const Matrix& reps, const std::vector<int>& labels,
                            const std::vector<Overlay>& overlays,
                            const std::filesystem::path& dir, const std::string& stem) {
  PlotOutput out;
  if (reps.cols() != 2) {
    out.warnings.push_back("representation is " + std::to_string(reps.cols()) +
                           "-dimensional; scatter plots skipped");
    return out;
  }
  if (static_cast<Eigen::Index>(labels.size()) != reps.rows()) {
    ThrowConfig("scatter labels do not match the representation rows");
  }

  {
    std::ostringstream csv;
    csv << "series,group,x,y\n";
    for (Eigen::Index p = 0; p < reps.rows(); ++p) {
      csv << "points," << labels[static_cast<std::size_t>(p)] << ','
          << FormatDouble(reps(p, 0)) << ',' << FormatDouble(reps(p, 1)) << '\n';
    }
    for (const auto& o : overlays) {
      for (Eigen::Index p = 0; p < o.points.rows(); ++p) {
        csv << "translated_" << o.from << "_to_" << o.to << ',' << o.from << ','
            << FormatDouble(o.points(p, 0)) << ',' << FormatDouble(o.points(p, 1)) << '\n';
      }
    }
    WriteText(dir / (stem + "_scatter.csv"), csv.str(), out);
  }

  double x_min = reps.col(0).minCoeff(), x_max = reps.col(0).maxCoeff();
  double y_min = reps.col(1).minCoeff(), y_max = reps.col(1).maxCoeff();
  for (const auto& o : overlays) {
    if (o.points.rows() == 0) continue;
    x_min = std::min(x_min, o.points.col(0).minCoeff());
    x_max = std::max(x_max, o.points.col(0).maxCoeff());
    y_min = std::min(y_min, o.points.col(1).minCoeff());
    y_max = std::max(y_max, o.points.col(1).maxCoeff());
  }
  const Frame f = FitFrame(x_min, x_max, y_min, y_max);

  auto render = [&](const std::vector<const Overlay*>& shown, const std::string& title) {
    std::ostringstream s;
    s << SvgOpen(f.left + f.width + 40, f.top + f.height + 60);
    s << Axes(f, title, "r1", "r2");
    for (Eigen::Index p = 0; p < reps.rows(); ++p) {
      s << "<circle cx=\"" << Fixed(f.X(reps(p, 0)), 1) << "\" cy=\""
        << Fixed(f.Y(reps(p, 1)), 1) << "\" r=\"2.5\" fill=\""
        << GroupColor(labels[static_cast<std::size_t>(p)]) << "\" fill-opacity=\"0.6\"/>\n";
    }
    for (const auto* o : shown) {
      for (Eigen::Index p = 0; p < o->points.rows(); ++p) {
        s << "<path class=\"translated\" d=\"M" << Fixed(f.X(o->points(p, 0)) - 3, 1) << ','
          << Fixed(f.Y(o->points(p, 1)) - 3, 1) << " l6,6 m-6,0 l6,-6\" stroke=\""
          << GroupColor(o->to) << "\" stroke-width=\"1.2\"/>\n";
      }
    }
    s << "</svg>\n";
    return s.str();
  };

  WriteText(dir / (stem + "_scatter.svg"), render({}, "Representation by group"), out);
  for (const auto& o : overlays) {
    WriteText(dir / (stem + "_overlay_" + std::to_string(o.from) + "_" +
                     std::to_string(o.to) + ".svg"),
              render({&o}, "Group " + std::to_string(o.from) + " translated to group " +
                               std::to_string(o.to)),
              out);
  }

  Json spec;
  spec["type"] = "scatter";
  spec["data"] = stem + "_scatter.csv";
  Json ov = Json::array();
  for (const auto& o : overlays) ov.push_back({{"from", o.from}, {"to", o.to}, {"points", o.points.rows()}});
  spec["overlays"] = std::move(ov);
  const auto spec_path = dir / (stem + "_scatter.json");
  WriteJson(spec, spec_path);
  out.files.push_back(spec_path);
  return out;
}

}  // namespace gce
