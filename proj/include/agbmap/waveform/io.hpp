#pragma once

// Newline-delimited JSON waveform records and the per-footprint metrics CSV.

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agbmap/text.hpp"
#include "agbmap/waveform/types.hpp"

namespace agb::waveform {

inline nlohmann::json to_json(const WaveformRecord& w) {
  nlohmann::json j;
  j["id"] = w.id;
  j["lon"] = w.lon;
  j["lat"] = w.lat;
  j["bin_top_elev"] = w.bin_top_elev;
  j["bin_size"] = w.bin_size;
  j["intensities"] = w.intensities;
  j["sat_ndx"] = w.sat_ndx;
  j["cloud_flag"] = w.cloud_flag;
  j["srtm_elev"] = w.srtm_elev;
  if (w.acquired_at) j["acquired_at"] = *w.acquired_at;
  return j;
}

inline WaveformRecord waveform_from_json(const nlohmann::json& j) {
  WaveformRecord w;
  try {
    w.id = j.at("id").get<std::string>();
    w.lon = j.at("lon").get<double>();
    w.lat = j.at("lat").get<double>();
    w.bin_top_elev = j.at("bin_top_elev").get<double>();
    w.bin_size = j.at("bin_size").get<double>();
    w.intensities = j.at("intensities").get<std::vector<double>>();
    w.sat_ndx = j.value("sat_ndx", 0);
    w.cloud_flag = j.value("cloud_flag", 15);
    w.srtm_elev = j.at("srtm_elev").get<double>();
    if (j.contains("acquired_at") && !j["acquired_at"].is_null())
      w.acquired_at = j["acquired_at"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::ParseError, std::string("waveform record: ") + e.what());
  }
  w.validate();
  return w;
}

inline std::vector<WaveformRecord> read_waveforms(std::istream& in, const std::string& source = "<stream>") {
  std::vector<WaveformRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(Errc::ParseError, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(waveform_from_json(j));
  }
  return out;
}

inline std::vector<WaveformRecord> read_waveforms(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::IoError, "cannot open " + path);
  return read_waveforms(in, path);
}

inline void write_waveforms(std::ostream& out, const std::vector<WaveformRecord>& records) {
  for (const auto& w : records) out << to_json(w).dump() << '\n';
}

inline void write_waveforms(const std::string& path, const std::vector<WaveformRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::IoError, "cannot write " + path);
  write_waveforms(out, records);
}

/// A kept footprint with its metrics, as stored in metrics CSV files.
struct FootprintMetrics {
  std::string id;
  double lon = 0.0;
  double lat = 0.0;
  WaveformMetrics metrics;
};

inline text::CsvTable metrics_table(const std::vector<FootprintMetrics>& rows) {
  std::vector<std::string> header = {"id", "lon", "lat"};
  for (const auto& n : metric_names()) header.push_back(n);
  header.insert(header.end(), {"begin_elev", "end_elev", "ground_elev", "reject_reason"});
  text::CsvTable t(header);
  for (const auto& r : rows) {
    std::vector<std::string> row = {r.id, text::format_exact(r.lon), text::format_exact(r.lat)};
    for (double v : metric_values(r.metrics)) row.push_back(text::format_exact(v));
    row.push_back(text::format_exact(r.metrics.begin_elev));
    row.push_back(text::format_exact(r.metrics.end_elev));
    row.push_back(text::format_exact(r.metrics.ground_elev));
    row.emplace_back();
    t.add_row(std::move(row));
  }
  return t;
}

inline std::vector<FootprintMetrics> metrics_from_table(const text::CsvTable& t) {
  std::vector<FootprintMetrics> out;
  const auto& names = metric_names();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.has("reject_reason") && !t.at(i, "reject_reason").empty()) continue;
    FootprintMetrics f;
    f.id = t.at(i, "id");
    f.lon = t.number(i, "lon");
    f.lat = t.number(i, "lat");
    std::vector<double> v;
    for (const auto& n : names) v.push_back(t.number(i, n));
    f.metrics.wext = v[0];
    f.metrics.tch = v[1];
    f.metrics.lead = v[2];
    f.metrics.trail = v[3];
    for (std::size_t q = 0; q < 9; ++q) f.metrics.h[q] = v[4 + q];
    f.metrics.ti = v[13];
    f.metrics.slope = v[14];
    if (t.has("begin_elev")) f.metrics.begin_elev = t.number(i, "begin_elev");
    if (t.has("end_elev")) f.metrics.end_elev = t.number(i, "end_elev");
    if (t.has("ground_elev")) f.metrics.ground_elev = t.number(i, "ground_elev");
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace agb::waveform
