#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "apac/harness.hpp"

namespace apac {

namespace {

namespace fs = std::filesystem;

constexpr const char* kCsvHeader =
    "seed,condition,model,episode,success,steps,habitual_steps,"
    "planning_steps,time_cost,final_distance";

constexpr int kSmoothingWindow = 50;

}  // namespace

void export_csv(const std::vector<EpisodeRecord>& records,
                const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << kCsvHeader << '\n';
  char line[512];
  for (const EpisodeRecord& r : records) {
    std::snprintf(line, sizeof(line), "%d,%s,%s,%d,%d,%d,%d,%d,%.17g,%.17g",
                  r.seed, r.condition.c_str(), r.model.c_str(), r.episode,
                  r.success ? 1 : 0, r.steps, r.habitual_steps,
                  r.planning_steps, r.time_cost, r.final_distance);
    f << line << '\n';
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::vector<EpisodeRecord> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  std::string line;
  if (!std::getline(f, line) || line != kCsvHeader)
    throw std::runtime_error("unexpected CSV header in " + path);
  std::vector<EpisodeRecord> records;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw std::runtime_error("malformed CSV row in " + path + ": " + line);
    EpisodeRecord r;
    r.seed = std::stoi(fields[0]);
    r.condition = fields[1];
    r.model = fields[2];
    r.episode = std::stoi(fields[3]);
    r.success = std::stoi(fields[4]) != 0;
    r.steps = std::stoi(fields[5]);
    r.habitual_steps = std::stoi(fields[6]);
    r.planning_steps = std::stoi(fields[7]);
    r.time_cost = std::stod(fields[8]);
    r.final_distance = std::stod(fields[9]);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<double> moving_average(const std::vector<double>& xs, int window) {
  if (window <= 0) throw std::invalid_argument("window must be positive");
  std::vector<double> out(xs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sum += xs[i];
    if (i >= static_cast<std::size_t>(window)) sum -= xs[i - window];
    const std::size_t n = std::min<std::size_t>(i + 1, window);
    out[i] = sum / static_cast<double>(n);
  }
  return out;
}

namespace {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Band {
  std::vector<double> x;
  std::vector<double> lo;
  std::vector<double> hi;
  std::string color;
};

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b",
                                    "#e377c2", "#7f7f7f"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

/// Minimal standalone SVG line chart: axes, gridlines, optional shaded
/// bands, one polyline per series, and a swatch legend.
void write_line_chart(const fs::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<Series>& series,
                      const std::vector<Band>& bands) {
  const double width = 960, height = 540;
  const double left = 70, right = 930, top = 50, bottom = 495;

  double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
  bool found = false;
  const auto stretch = [&](double x, double y) {
    if (!found) {
      x_min = x_max = x;
      y_min = y_max = y;
      found = true;
      return;
    }
    x_min = std::min(x_min, x);
    x_max = std::max(x_max, x);
    y_min = std::min(y_min, y);
    y_max = std::max(y_max, y);
  };
  for (const Series& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) stretch(s.x[i], s.y[i]);
  for (const Band& b : bands)
    for (std::size_t i = 0; i < b.x.size(); ++i) {
      stretch(b.x[i], b.lo[i]);
      stretch(b.x[i], b.hi[i]);
    }
  if (x_max == x_min) x_max = x_min + 1;
  if (y_max == y_min) y_max = y_min + 1;
  const double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const auto px = [&](double x) {
    return left + (x - x_min) / (x_max - x_min) * (right - left);
  };
  const auto py = [&](double y) {
    return bottom - (y - y_min) / (y_max - y_min) * (bottom - top);
  };

  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
    << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << ' '
    << height << "\">\n";
  f << "<rect width=\"" << width << "\" height=\"" << height
    << "\" fill=\"white\"/>\n";
  f << "<text x=\"" << width / 2
    << "\" y=\"28\" font-size=\"16\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\">"
    << title << "</text>\n";

  const int ticks = 6;
  for (int i = 0; i < ticks; ++i) {
    const double tx = x_min + (x_max - x_min) * i / (ticks - 1);
    const double ty = y_min + (y_max - y_min) * i / (ticks - 1);
    f << "<line x1=\"" << px(tx) << "\" y1=\"" << top << "\" x2=\"" << px(tx)
      << "\" y2=\"" << bottom << "\" stroke=\"#dddddd\"/>\n";
    f << "<line x1=\"" << left << "\" y1=\"" << py(ty) << "\" x2=\"" << right
      << "\" y2=\"" << py(ty) << "\" stroke=\"#dddddd\"/>\n";
    f << "<text x=\"" << px(tx) << "\" y=\"" << bottom + 18
      << "\" font-size=\"11\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\">"
      << fmt(tx) << "</text>\n";
    f << "<text x=\"" << left - 8 << "\" y=\"" << py(ty) + 4
      << "\" font-size=\"11\" text-anchor=\"end\" "
         "font-family=\"sans-serif\">"
      << fmt(ty) << "</text>\n";
  }
  f << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\""
    << right - left << "\" height=\"" << bottom - top
    << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  f << "<text x=\"" << (left + right) / 2 << "\" y=\"" << height - 8
    << "\" font-size=\"12\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\">"
    << x_label << "</text>\n";
  f << "<text x=\"18\" y=\"" << (top + bottom) / 2
    << "\" font-size=\"12\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" transform=\"rotate(-90 18 "
    << (top + bottom) / 2 << ")\">" << y_label << "</text>\n";

  for (const Band& b : bands) {
    if (b.x.empty()) continue;
    f << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.15\" "
         "stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < b.x.size(); ++i)
      f << px(b.x[i]) << ',' << py(b.hi[i]) << ' ';
    for (std::size_t i = b.x.size(); i-- > 0;)
      f << px(b.x[i]) << ',' << py(b.lo[i]) << ' ';
    f << "\"/>\n";
  }

  std::size_t color_index = 0;
  for (const Series& s : series) {
    const char* color = kPalette[color_index % std::size(kPalette)];
    if (!s.x.empty()) {
      f << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < s.x.size(); ++i)
        f << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
      f << "\"/>\n";
    }
    const double ly = top + 16 + 18.0 * static_cast<double>(color_index);
    f << "<rect x=\"" << left + 10 << "\" y=\"" << ly - 10
      << "\" width=\"12\" height=\"12\" fill=\"" << color << "\"/>\n";
    f << "<text x=\"" << left + 28 << "\" y=\"" << ly
      << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label
      << "</text>\n";
    ++color_index;
  }
  f << "</svg>\n";
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

using EpisodeSlice = std::map<int, std::vector<const EpisodeRecord*>>;
using Groups = std::map<std::string, EpisodeSlice>;  // key "condition/model"

Groups group_records(const std::vector<EpisodeRecord>& records) {
  Groups groups;
  for (const EpisodeRecord& r : records)
    groups[r.condition + "/" + r.model][r.episode].push_back(&r);
  return groups;
}

Series smoothed_series(const std::string& label, const EpisodeSlice& slice,
                       double (*value)(const EpisodeRecord&)) {
  Series s;
  s.label = label;
  std::vector<double> raw;
  for (const auto& [episode, records] : slice) {
    double sum = 0.0;
    for (const EpisodeRecord* r : records) sum += value(*r);
    s.x.push_back(episode);
    raw.push_back(sum / static_cast<double>(records.size()));
  }
  s.y = moving_average(raw, kSmoothingWindow);
  return s;
}

}  // namespace

void emit_plots(const std::vector<std::string>& csv_paths,
                const std::string& out_dir) {
  std::vector<EpisodeRecord> records;
  for (const std::string& path : csv_paths) {
    std::vector<EpisodeRecord> part = read_csv(path);
    records.insert(records.end(), part.begin(), part.end());
  }
  if (records.empty()) throw std::runtime_error("no records to plot");
  fs::create_directories(out_dir);
  const Groups groups = group_records(records);
  const fs::path out(out_dir);

  std::vector<Series> success;
  std::vector<Series> fractions;
  std::vector<Series> cost;
  std::vector<Series> distance;
  std::vector<Band> distance_bands;
  std::size_t color_index = 0;
  for (const auto& [key, slice] : groups) {
    success.push_back(smoothed_series(key, slice, [](const EpisodeRecord& r) {
      return r.success ? 1.0 : 0.0;
    }));
    cost.push_back(smoothed_series(
        key, slice, [](const EpisodeRecord& r) { return r.time_cost; }));

    // Source fractions skip episodes without attributed steps (babbling).
    Series habitual_frac{key + " habitual", {}, {}};
    Series planning_frac{key + " planning", {}, {}};
    std::vector<double> hab_raw, plan_raw;
    for (const auto& [episode, recs] : slice) {
      double hab = 0.0, attributed = 0.0;
      for (const EpisodeRecord* r : recs) {
        hab += r->habitual_steps;
        attributed += r->habitual_steps + r->planning_steps;
      }
      if (attributed == 0.0) continue;
      habitual_frac.x.push_back(episode);
      planning_frac.x.push_back(episode);
      hab_raw.push_back(hab / attributed);
      plan_raw.push_back(1.0 - hab / attributed);
    }
    habitual_frac.y = moving_average(hab_raw, kSmoothingWindow);
    planning_frac.y = moving_average(plan_raw, kSmoothingWindow);
    fractions.push_back(std::move(habitual_frac));
    fractions.push_back(std::move(planning_frac));

    Series mean_distance{key, {}, {}};
    Band band;
    band.color = kPalette[color_index % std::size(kPalette)];
    for (const auto& [episode, recs] : slice) {
      double sum = 0.0;
      double lo = recs.front()->final_distance;
      double hi = lo;
      for (const EpisodeRecord* r : recs) {
        sum += r->final_distance;
        lo = std::min(lo, r->final_distance);
        hi = std::max(hi, r->final_distance);
      }
      mean_distance.x.push_back(episode);
      mean_distance.y.push_back(sum / static_cast<double>(recs.size()));
      band.x.push_back(episode);
      band.lo.push_back(lo);
      band.hi.push_back(hi);
    }
    distance.push_back(std::move(mean_distance));
    distance_bands.push_back(std::move(band));
    ++color_index;
  }

  write_line_chart(out / "success_rate.svg", "Success rate (smoothed)",
                   "episode", "success rate", success, {});
  write_line_chart(out / "source_fractions.svg",
                   "Action source fractions (smoothed)", "episode", "fraction",
                   fractions, {});
  write_line_chart(out / "time_cost.svg", "Episode time cost (smoothed)",
                   "episode", "time cost", cost, {});
  write_line_chart(out / "final_distance.svg",
                   "Final distance to target (band: min to max across seeds)",
                   "episode", "distance [cm]", distance, distance_bands);
}

}  // namespace apac
