#pragma once

#include "rtt/scenario.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rtt {

inline constexpr int kCsvSchemaVersion = 1;

inline std::string fmt_num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::string edge_list(const std::vector<Edge>& edges) {
  std::string s;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (k) s += ';';
    s += std::to_string(edges[k].a) + "-" + std::to_string(edges[k].b);
  }
  return s;
}

/// Per-epoch trial rows. The first line carries the schema version.
inline void write_trial_csv(std::ostream& os, const TrialTrace& t) {
  os << "# rtt trial schema " << kCsvSchemaVersion << " seed " << t.seed << " strategy " << to_string(t.strategy)
     << " n " << t.n << "\n";
  os << "epoch,truth_x,truth_y,truth_theta,truth_v,max_trace_p,max_est_error,min_eig_p,edges";
  for (int i = 0; i < t.n; ++i) {
    os << ",r" << i << "_x,r" << i << "_y,r" << i << "_theta,r" << i << "_v,r" << i << "_trace_p,r" << i
       << "_px,r" << i << "_py,r" << i << "_pz";
  }
  os << "\n";
  for (const auto& r : t.rows) {
    os << r.epoch;
    for (Eigen::Index a = 0; a < r.truth.size(); ++a) os << ',' << fmt_num(r.truth(a));
    os << ',' << fmt_num(r.max_trace_P) << ',' << fmt_num(r.max_est_error) << ',' << fmt_num(r.min_eig_P) << ','
       << edge_list(r.edges);
    for (std::size_t i = 0; i < r.estimates.size(); ++i) {
      for (Eigen::Index a = 0; a < r.estimates[i].size(); ++a) os << ',' << fmt_num(r.estimates[i](a));
      os << ',' << fmt_num(r.trace_P[i]);
      for (int a = 0; a < 3; ++a) os << ',' << fmt_num(r.positions[i](a));
    }
    os << "\n";
  }
}

inline void write_events_csv(std::ostream& os, const TrialTrace& t) {
  os << "# rtt events schema " << kCsvSchemaVersion << " seed " << t.seed << "\n";
  os << "epoch,robot,trace_r_before,trace_r_after,strategy,objective,team_trace_one_step,topologies_evaluated,"
        "inner_iterations,wall_time_s,edges\n";
  for (const auto& e : t.events) {
    os << e.epoch << ',' << e.robot_id << ',' << fmt_num(e.trace_R_before) << ',' << fmt_num(e.trace_R_after) << ','
       << to_string(e.strategy) << ',' << fmt_num(e.objective) << ',' << fmt_num(e.team_trace_one_step) << ','
       << e.topologies_evaluated << ',' << e.inner_iterations << ',' << fmt_num(e.wall_time) << ','
       << edge_list(e.edges) << "\n";
  }
}

inline void write_aggregate_csv(std::ostream& os, const std::vector<CampaignResult>& results) {
  os << "# rtt aggregate schema " << kCsvSchemaVersion << "\n";
  os << "strategy,n,epoch,trials,max_trace_p_q1,max_trace_p_median,max_trace_p_q3,max_est_error_q1,"
        "max_est_error_median,max_est_error_q3\n";
  for (const auto& c : results) {
    for (const auto& r : c.aggregate) {
      os << to_string(c.strategy) << ',' << c.n << ',' << r.epoch << ',' << r.trials << ',' << fmt_num(r.trace_q1)
         << ',' << fmt_num(r.trace_median) << ',' << fmt_num(r.trace_q3) << ',' << fmt_num(r.error_q1) << ','
         << fmt_num(r.error_median) << ',' << fmt_num(r.error_q3) << "\n";
    }
  }
}

/// One row per (trial, epoch) plus a trailing status row for failed trials.
inline void write_campaign_trials_csv(std::ostream& os, const std::vector<CampaignResult>& results) {
  os << "# rtt campaign-trials schema " << kCsvSchemaVersion << "\n";
  os << "strategy,n,seed,epoch,max_trace_p,max_est_error,status\n";
  for (const auto& c : results) {
    for (const auto& t : c.trials) {
      for (std::size_t k = 0; k < t.max_trace_P.size(); ++k) {
        os << to_string(c.strategy) << ',' << c.n << ',' << t.seed << ',' << (k + 1) << ','
           << fmt_num(t.max_trace_P[k]) << ',' << fmt_num(t.max_est_error[k]) << ",ok\n";
      }
      if (t.failed) os << to_string(c.strategy) << ',' << c.n << ',' << t.seed << ",,,,failed\n";
    }
  }
}

namespace detail {

struct Series {
  std::string label;
  std::string color;
  std::vector<double> y;
};

/// Minimal SVG line chart with a log10 y axis.
inline std::string svg_log_chart(const std::string& title, const std::string& y_label,
                                 const std::vector<Series>& series) {
  constexpr double W = 800, H = 480, L = 70, R = 150, T = 40, B = 50;
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  std::size_t xmax = 1;
  for (const auto& s : series) {
    xmax = std::max(xmax, s.y.size());
    for (double v : s.y) {
      if (v > 0.0 && std::isfinite(v)) {
        ymin = std::min(ymin, v);
        ymax = std::max(ymax, v);
      }
    }
  }
  if (!std::isfinite(ymin)) ymin = 1.0, ymax = 10.0;
  double lo = std::floor(std::log10(ymin)), hi = std::ceil(std::log10(ymax));
  if (hi <= lo) hi = lo + 1.0;
  auto px = [&](double k) { return L + (W - L - R) * (k / static_cast<double>(std::max<std::size_t>(1, xmax - 1))); };
  auto py = [&](double v) { return T + (H - T - B) * (1.0 - (std::log10(v) - lo) / (hi - lo)); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
     << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\" font-size=\"13\">" << y_label << "</text>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">epoch</text>\n";
  for (double d = lo; d <= hi; d += 1.0) {
    const double y = py(std::pow(10.0, d));
    os << "<line x1=\"" << L << "\" x2=\"" << W - R << "\" y1=\"" << y << "\" y2=\"" << y
       << "\" stroke=\"#ddd\"/>\n<text x=\"" << L - 6 << "\" y=\"" << y + 4
       << "\" text-anchor=\"end\" font-size=\"11\">1e" << static_cast<int>(d) << "</text>\n";
  }
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    os << "<polyline fill=\"none\" stroke=\"" << series[s].color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < series[s].y.size(); ++k) {
      const double v = series[s].y[k];
      if (v > 0.0 && std::isfinite(v)) os << px(static_cast<double>(k)) << ',' << py(v) << ' ';
    }
    os << "\"/>\n<text x=\"" << W - R + 10 << "\" y=\"" << T + 20 + 18 * static_cast<double>(s) << "\" fill=\""
       << series[s].color << "\" font-size=\"13\">" << series[s].label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline std::string strategy_color(Strategy s) {
  switch (s) {
    case Strategy::accg: return "#1f77b4";
    case Strategy::tccg: return "#2ca02c";
    case Strategy::greedy: return "#ff7f0e";
  }
  return "black";
}

}  // namespace detail

/// Writes aggregate.csv, campaign_trials.csv and, per team size, log-scale
/// median charts of both metrics.
inline std::vector<std::filesystem::path> emit_plots(const std::vector<CampaignResult>& results,
                                                     const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  std::vector<std::filesystem::path> written;
  {
    std::ofstream f(out_dir / "aggregate.csv");
    write_aggregate_csv(f, results);
    written.push_back(out_dir / "aggregate.csv");
  }
  {
    std::ofstream f(out_dir / "campaign_trials.csv");
    write_campaign_trials_csv(f, results);
    written.push_back(out_dir / "campaign_trials.csv");
  }
  std::vector<int> sizes;
  for (const auto& c : results)
    if (std::find(sizes.begin(), sizes.end(), c.n) == sizes.end()) sizes.push_back(c.n);
  for (int n : sizes) {
    std::vector<detail::Series> trace_series, error_series;
    for (const auto& c : results) {
      if (c.n != n) continue;
      detail::Series st{to_string(c.strategy), detail::strategy_color(c.strategy), {}};
      detail::Series se = st;
      for (const auto& r : c.aggregate) {
        st.y.push_back(r.trace_median);
        se.y.push_back(r.error_median);
      }
      trace_series.push_back(std::move(st));
      error_series.push_back(std::move(se));
    }
    const auto tp = out_dir / ("max_trace_p_n" + std::to_string(n) + ".svg");
    const auto ep = out_dir / ("max_est_error_n" + std::to_string(n) + ".svg");
    std::ofstream(tp) << detail::svg_log_chart("median max Tr(P), n = " + std::to_string(n), "max Tr(P)", trace_series);
    std::ofstream(ep) << detail::svg_log_chart("median max estimation error, n = " + std::to_string(n),
                                               "max estimation error", error_series);
    written.push_back(tp);
    written.push_back(ep);
  }
  return written;
}

}  // namespace rtt
