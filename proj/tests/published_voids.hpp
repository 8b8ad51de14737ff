#pragma once

#include <string>
#include <vector>

#include "rubblevoid/report.hpp"

// Six surveyed void records (volume, heights, cross-section widths, cause)
// used as fixtures for the summary and table export.
namespace published {

struct Row {
  const char* name;
  double volume, max_h, min_h, xz, yz;
  rubblevoid::Cause cause;
};

inline const std::vector<Row>& rows() {
  using rubblevoid::Cause;
  static const std::vector<Row> r = {
      {"Yellow", 29.10, 2.28, 0.37, 4.23, 2.87, Cause::Excavation},
      {"Cyan", 34.53, 1.88, 0.33, 4.25, 6.25, Cause::Excavation},
      {"Orange", 41.71, 1.45, 0.15, 5.03, 6.91, Cause::Excavation},
      {"Purple", 28.71, 1.19, 0.20, 6.37, 5.06, Cause::Excavation},
      {"Pink", 10.94, 1.14, 0.26, 3.41, 5.73, Cause::Natural},
      {"Green", 10.33, 0.82, 0.23, 2.69, 5.91, Cause::Natural},
  };
  return r;
}

// The same records as they read in the survey table.
inline const std::vector<std::string>& printed_lines() {
  static const std::vector<std::string> l = {
      "Yellow,29.10,2.28,0.37,4.23,2.87,Excavation",
      "Cyan,34.53,1.88,0.33,4.25,6.25,Excavation",
      "Orange,41.71,1.45,0.15,5.03,6.91,Excavation",
      "Purple,28.71,1.19,0.20,6.37,5.06,Excavation",
      "Pink,10.94,1.14,0.26,3.41,5.73,Naturally Formed",
      "Green,10.33,0.82,0.23,2.69,5.91,Naturally Formed",
  };
  return l;
}

inline std::vector<rubblevoid::VoidMetrics> metrics() {
  std::vector<rubblevoid::VoidMetrics> out;
  for (const auto& r : rows()) {
    rubblevoid::VoidMetrics m;
    m.approx_volume = r.volume;
    m.max_height = r.max_h;
    m.min_height = r.min_h;
    m.xz_width = r.xz;
    m.yz_width = r.yz;
    m.cause = r.cause;
    m.cause_source = rubblevoid::CauseSource::Human;
    out.push_back(m);
  }
  return out;
}

inline rubblevoid::ReportBundle report() {
  using namespace rubblevoid;
  ReportBundle rep;
  rep.run.config_hash = "0000000000000000";
  rep.run.started_at = rep.run.finished_at = "2021-07-01T00:00:00Z";
  rep.grid = GridSpec{0.0, 0.0, 0.25, 240, 240};
  rep.epochs = {parse_epoch("2021-06-25T12:00:00Z"), parse_epoch("2021-06-27T12:00:00Z")};
  const auto ms = metrics();
  for (std::size_t k = 0; k < ms.size(); ++k) {
    VoidRecord v;
    v.id = static_cast<int>(k + 1);
    v.name = rows()[k].name;
    v.earlier = rep.epochs[0];
    v.later = rep.epochs[1];
    v.centroid = {10.0 * static_cast<double>(k + 1), 20.0, 3.0};
    v.bounds = {{v.centroid.x - 0.5 * ms[k].xz_width, 20.0 - 0.5 * ms[k].yz_width, 2.0},
                {v.centroid.x + 0.5 * ms[k].xz_width, 20.0 + 0.5 * ms[k].yz_width, 2.0 + ms[k].max_height}};
    v.metrics = ms[k];
    v.component = static_cast<int>(k);
    v.slices = {static_cast<int>(k + 1)};
    rep.voids.push_back(v);
  }
  rep.summary = summarize(ms, 6.0, static_cast<int>(ms.size()));
  return rep;
}

}  // namespace published
