#include "rulebo/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "rulebo/artifacts.hpp"
#include "rulebo/errors.hpp"

namespace rulebo {

namespace {

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", precision, v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<Series>& series,
                          int width, int height) {
  const double left = 64, right = 16, top = 36, bottom = 48;
  const double pw = width - left - right, ph = height - top - bottom;

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& s : series) {
    n = std::max(n, s.values.size());
    for (double v : s.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;

  auto px = [&](double i) { return left + pw * i / xmax; };
  auto py = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";

  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = py(v);
    os << "<line x1=\"" << left << "\" y1=\"" << fmt(y, 6) << "\" x2=\"" << left + pw << "\" y2=\""
       << fmt(y, 6) << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(y + 4, 6) << "\" text-anchor=\"end\">" << fmt(v, 3)
       << "</text>\n";
  }
  const std::size_t xticks = std::min<std::size_t>(n > 0 ? n - 1 : 1, 10);
  for (std::size_t k = 0; k <= xticks; ++k) {
    const double i = std::round(xmax * static_cast<double>(k) / static_cast<double>(std::max<std::size_t>(xticks, 1)));
    os << "<text x=\"" << fmt(px(i), 6) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">"
       << static_cast<long>(i) << "</text>\n";
  }
  os << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10 << "\" text-anchor=\"middle\">"
     << xml_escape(x_label) << "</text>\n";
  os << "<text transform=\"translate(16," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    os << "<polyline fill=\"none\" stroke=\"" << xml_escape(sr.color) << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < sr.values.size(); ++i) {
      if (!std::isfinite(sr.values[i])) continue;
      os << fmt(px(static_cast<double>(i)), 6) << ',' << fmt(py(sr.values[i]), 6) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 14 + 16.0 * static_cast<double>(s);
    os << "<line x1=\"" << left + pw - 110 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw - 90
       << "\" y2=\"" << ly - 4 << "\" stroke=\"" << xml_escape(sr.color) << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw - 84 << "\" y=\"" << ly << "\">" << xml_escape(sr.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

RunArtifacts load_run(const std::filesystem::path& dir) {
  const auto cfg_path = dir / run_files::kConfig;
  const auto ckpt_path = dir / run_files::kCheckpoint;
  if (!std::filesystem::exists(cfg_path)) throw MissingArtifact("missing " + cfg_path.string());
  if (!std::filesystem::exists(ckpt_path)) throw MissingArtifact("missing " + ckpt_path.string());
  RunArtifacts run;
  run.dir = dir;
  run.config = load_config(cfg_path);
  run.checkpoint = load_checkpoint(ckpt_path);
  return run;
}

std::vector<std::filesystem::path> write_cycle_plots(const RunArtifacts& run) {
  const auto plots = run.dir / "plots";
  std::filesystem::create_directories(plots);
  std::vector<std::filesystem::path> written;
  for (const auto& r : run.checkpoint.records) {
    if (r.cycle < 1) continue;
    const std::string stem = "cycle_" + std::to_string(r.cycle);
    const std::string suffix = r.failed ? " (failed)" : "";
    const auto acc = plots / (stem + "_accuracy.svg");
    write_text(acc, line_plot_svg("Cycle " + std::to_string(r.cycle) + " accuracy" + suffix, "epoch", "accuracy",
                                  {{"train", "#ff7f0e", r.history.train_acc},
                                   {"validation", "#1f77b4", r.history.val_acc}}));
    const auto loss = plots / (stem + "_loss.svg");
    write_text(loss, line_plot_svg("Cycle " + std::to_string(r.cycle) + " loss" + suffix, "epoch", "loss",
                                   {{"train", "#ff7f0e", r.history.train_loss},
                                    {"validation", "#1f77b4", r.history.val_loss}}));
    written.push_back(acc);
    written.push_back(loss);
  }
  return written;
}

ComparisonTable compare_runs(const std::vector<RunArtifacts>& runs) {
  ComparisonTable t;
  std::map<std::string, int> seen;
  for (const auto& r : runs) seen[std::string(mode_name(r.config.mode))]++;
  std::set<int> cycles;
  for (const auto& r : runs) {
    std::string name(mode_name(r.config.mode));
    if (seen[name] > 1) name += "@" + r.dir.filename().string();
    // Still ambiguous when the same directory is listed twice.
    const std::string base = name;
    for (int k = 2; std::find(t.columns.begin(), t.columns.end(), name) != t.columns.end(); ++k)
      name = base + "#" + std::to_string(k);
    t.columns.push_back(name);
    double wall = 0.0;
    for (const auto& rec : r.checkpoint.records) {
      cycles.insert(rec.cycle);
      wall += rec.wall_clock_s;
    }
    t.wall_clock_s.push_back(wall);
  }
  t.cycles.assign(cycles.begin(), cycles.end());
  for (int c : t.cycles) {
    std::vector<double> row;
    for (const auto& r : runs) {
      double v = std::numeric_limits<double>::quiet_NaN();
      for (const auto& rec : r.checkpoint.records)
        if (rec.cycle == c) v = rec.best_objective;
      row.push_back(v);
    }
    t.best.push_back(std::move(row));
  }
  return t;
}

std::string comparison_csv(const ComparisonTable& t) {
  std::ostringstream os;
  os << "cycle";
  for (const auto& c : t.columns) os << ',' << csv_escape(c);
  os << '\n';
  for (std::size_t i = 0; i < t.cycles.size(); ++i) {
    os << t.cycles[i];
    for (double v : t.best[i]) {
      os << ',';
      if (std::isfinite(v)) os << format_value(Value(v));
    }
    os << '\n';
  }
  return os.str();
}

std::string comparison_text(const ComparisonTable& t) {
  std::ostringstream os;
  char buf[64];
  os << "best objective per cycle\n";
  std::snprintf(buf, sizeof buf, "%-6s", "cycle");
  os << buf;
  for (const auto& c : t.columns) {
    std::snprintf(buf, sizeof buf, " %14s", c.c_str());
    os << buf;
  }
  os << '\n';
  for (std::size_t i = 0; i < t.cycles.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%-6d", t.cycles[i]);
    os << buf;
    for (double v : t.best[i]) {
      if (std::isfinite(v)) std::snprintf(buf, sizeof buf, " %14.6g", v);
      else std::snprintf(buf, sizeof buf, " %14s", "-");
      os << buf;
    }
    os << '\n';
  }
  os << "wall clock total (s)\n";
  for (std::size_t j = 0; j < t.columns.size(); ++j) {
    std::snprintf(buf, sizeof buf, "  %-20s %.3f\n", t.columns[j].c_str(), t.wall_clock_s[j]);
    os << buf;
  }
  return os.str();
}

}  // namespace rulebo
