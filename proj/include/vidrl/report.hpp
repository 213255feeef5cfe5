#pragma once
// Report rendering: training curves as a hand-rolled SVG (no plotting
// dependency, deterministic bytes) and the metric table as aligned text.
// Comparison mode overlays a second run's series.

#include <algorithm>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "vidrl/errors.hpp"
#include "vidrl/experiment.hpp"

namespace vidrl {

struct RunSeries {
  std::string label;
  std::vector<TrainStepRecord> records;  // one query's series, step-ordered
};

// Restricts a mixed per-query log to its first query's series.
inline std::vector<TrainStepRecord> first_query_series(
    const std::vector<TrainStepRecord>& log) {
  std::vector<TrainStepRecord> out;
  if (log.empty()) return out;
  const std::string& id = log.front().query_id;
  for (const TrainStepRecord& rec : log)
    if (rec.query_id == id) out.push_back(rec);
  return out;
}

namespace detail {

inline std::string fmt2(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(2) << v;
  return out.str();
}

struct Panel {
  const char* title;
  double (*value)(const TrainStepRecord&);
};

inline const Panel kPanels[] = {
    {"mean_total_reward", [](const TrainStepRecord& r) { return r.mean_total_reward; }},
    {"mean_r_acc", [](const TrainStepRecord& r) { return r.mean_r_acc; }},
    {"tool_call_ratio", [](const TrainStepRecord& r) { return r.tool_call_ratio; }},
    {"prob_mass_on_gt_window",
     [](const TrainStepRecord& r) { return r.prob_mass_on_gt_window; }},
};

inline const char* kRunColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};

}  // namespace detail

// Four stacked panels (reward, accuracy, tool ratio, grounding mass), one
// polyline per run.
inline std::string render_curves_svg(const std::vector<RunSeries>& runs) {
  if (runs.empty() || runs.front().records.empty())
    throw Error("nothing to plot: empty training log");
  constexpr double kWidth = 720.0, kPanelHeight = 160.0, kMarginX = 60.0, kMarginY = 28.0;
  const std::size_t n_panels = std::size(detail::kPanels);
  const double total_height = n_panels * (kPanelHeight + kMarginY) + kMarginY;

  int max_step = 1;
  for (const RunSeries& run : runs)
    for (const TrainStepRecord& rec : run.records) max_step = std::max(max_step, rec.step);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << detail::fmt2(kWidth)
      << "\" height=\"" << detail::fmt2(total_height) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

  for (std::size_t p = 0; p < n_panels; ++p) {
    const auto& panel = detail::kPanels[p];
    const double top = kMarginY + p * (kPanelHeight + kMarginY);
    double lo = 0.0, hi = 1.0;
    bool first = true;
    for (const RunSeries& run : runs)
      for (const TrainStepRecord& rec : run.records) {
        const double v = panel.value(rec);
        lo = first ? v : std::min(lo, v);
        hi = first ? v : std::max(hi, v);
        first = false;
      }
    if (hi - lo < 1e-12) {
      hi += 0.5;
      lo -= 0.5;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;

    svg << "<text x=\"" << detail::fmt2(kMarginX) << "\" y=\"" << detail::fmt2(top - 8.0)
        << "\" font-family=\"monospace\" font-size=\"12\">" << panel.title << "</text>\n";
    svg << "<rect x=\"" << detail::fmt2(kMarginX) << "\" y=\"" << detail::fmt2(top)
        << "\" width=\"" << detail::fmt2(kWidth - 2 * kMarginX) << "\" height=\""
        << detail::fmt2(kPanelHeight) << "\" fill=\"none\" stroke=\"#cccccc\"/>\n";
    svg << "<text x=\"4\" y=\"" << detail::fmt2(top + 12.0)
        << "\" font-family=\"monospace\" font-size=\"10\">" << detail::fmt2(hi)
        << "</text>\n";
    svg << "<text x=\"4\" y=\"" << detail::fmt2(top + kPanelHeight)
        << "\" font-family=\"monospace\" font-size=\"10\">" << detail::fmt2(lo)
        << "</text>\n";

    for (std::size_t r = 0; r < runs.size(); ++r) {
      const auto& records = runs[r].records;
      if (records.empty()) continue;
      svg << "<polyline fill=\"none\" stroke=\""
          << detail::kRunColors[r % std::size(detail::kRunColors)]
          << "\" stroke-width=\"1.5\" points=\"";
      for (const TrainStepRecord& rec : records) {
        const double x =
            kMarginX + (kWidth - 2 * kMarginX) * (rec.step - 1) / std::max(1, max_step - 1);
        const double v = panel.value(rec);
        const double y = top + kPanelHeight - kPanelHeight * (v - lo) / (hi - lo);
        svg << detail::fmt2(x) << "," << detail::fmt2(y) << " ";
      }
      svg << "\"/>\n";
    }
  }

  // legend
  for (std::size_t r = 0; r < runs.size(); ++r) {
    const double y = 14.0 + 14.0 * r;
    svg << "<rect x=\"" << detail::fmt2(kWidth - 220.0) << "\" y=\"" << detail::fmt2(y - 9.0)
        << "\" width=\"10\" height=\"10\" fill=\""
        << detail::kRunColors[r % std::size(detail::kRunColors)] << "\"/>\n";
    svg << "<text x=\"" << detail::fmt2(kWidth - 205.0) << "\" y=\"" << detail::fmt2(y)
        << "\" font-family=\"monospace\" font-size=\"11\">" << runs[r].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

// Renders curves.svg and metrics.txt from a run directory; optional second
// run overlays its curves.
inline void render_run_report(const std::string& run_dir, const std::string& out_dir,
                              const std::string& compare_dir = "") {
  namespace fs = std::filesystem;
  auto log = load_training_log((fs::path(run_dir) / "training_log.jsonl").string());
  if (log.empty()) throw Error("training log is empty: " + run_dir);
  std::vector<RunSeries> runs;
  runs.push_back({fs::path(run_dir).filename().string(), first_query_series(log)});
  if (!compare_dir.empty()) {
    auto other = load_training_log((fs::path(compare_dir) / "training_log.jsonl").string());
    if (other.empty()) throw Error("training log is empty: " + compare_dir);
    runs.push_back({fs::path(compare_dir).filename().string(), first_query_series(other)});
  }

  fs::create_directories(out_dir);
  {
    std::ofstream out(fs::path(out_dir) / "curves.svg", std::ios::binary);
    if (!out) throw IoError("cannot write curves.svg");
    out << render_curves_svg(runs);
  }
  {
    std::ifstream in(fs::path(run_dir) / "eval_report.txt", std::ios::binary);
    std::ofstream out(fs::path(out_dir) / "metrics.txt", std::ios::binary);
    if (!out) throw IoError("cannot write metrics.txt");
    out << "run: " << run_dir << "\n";
    if (in) out << in.rdbuf();
    if (!compare_dir.empty()) {
      std::ifstream other(fs::path(compare_dir) / "eval_report.txt", std::ios::binary);
      out << "run: " << compare_dir << "\n";
      if (other) out << other.rdbuf();
    }
  }
}

}  // namespace vidrl
