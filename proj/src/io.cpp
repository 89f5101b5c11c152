#include "mtg/io.hpp"

#include <cstdio>
#include <fstream>

#include "mtg/errors.hpp"

namespace mtg::io {

namespace {

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open '" + path + "' for writing");
  return out;
}

void write_coords(std::ofstream& out, const MultitimeGrid& grid,
                  std::size_t tflat, std::size_t sflat) {
  MultiIndex j = grid.time_unflat(tflat);
  MultiIndex k = grid.state_unflat(sflat);
  for (int a = 0; a < grid.m(); ++a)
    out << format_double(grid.time_axis(a).coord(j[static_cast<std::size_t>(a)]))
        << ',';
  for (int i = 0; i < grid.n(); ++i)
    out << format_double(
               grid.state_axis(i).coord(k[static_cast<std::size_t>(i)]))
        << ',';
}

void write_header(std::ofstream& out, const MultitimeGrid& grid) {
  for (int a = 0; a < grid.m(); ++a) out << 't' << (a + 1) << ',';
  for (int i = 0; i < grid.n(); ++i) out << 'x' << (i + 1) << ',';
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

void write_value_csv(const std::string& path, const ValueField& field,
                     const std::string& config_hash) {
  std::ofstream out = open_out(path);
  const MultitimeGrid& grid = field.grid();
  out << "# field=" << field.name() << " config=" << config_hash << '\n';
  write_header(out, grid);
  out << "value\n";
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (std::size_t sf = 0; sf < grid.state_count(); ++sf) {
      write_coords(out, grid, tf, sf);
      out << format_double(field.at(tf, sf)) << '\n';
    }
}

void write_components_csv(const std::string& path,
                          const GeneratingField& field,
                          const std::string& config_hash) {
  std::ofstream out = open_out(path);
  const MultitimeGrid& grid = field.grid();
  out << "# field=" << field.name() << " config=" << config_hash << '\n';
  write_header(out, grid);
  for (int a = 0; a < grid.m(); ++a) {
    out << "component" << (a + 1);
    out << (a + 1 < grid.m() ? ',' : '\n');
  }
  for (std::size_t tf = 0; tf < grid.time_count(); ++tf)
    for (std::size_t sf = 0; sf < grid.state_count(); ++sf) {
      write_coords(out, grid, tf, sf);
      for (int a = 0; a < grid.m(); ++a) {
        out << format_double(field.at(a, tf, sf));
        out << (a + 1 < grid.m() ? ',' : '\n');
      }
    }
}

void write_sheet_csv(const std::string& path, const Sheet& sheet,
                     int u_dim, int v_dim, const std::string& config_hash) {
  std::ofstream out = open_out(path);
  out << "# sheet config=" << config_hash << '\n';
  out << "step,";
  const int m = sheet.samples.empty()
                    ? 0
                    : static_cast<int>(sheet.samples.front().time.size());
  const int n = sheet.samples.empty()
                    ? 0
                    : static_cast<int>(sheet.samples.front().state.size());
  for (int a = 0; a < m; ++a) out << 't' << (a + 1) << ',';
  for (int i = 0; i < n; ++i) out << 'x' << (i + 1) << ',';
  for (int i = 0; i < u_dim; ++i) out << 'u' << (i + 1) << ',';
  for (int i = 0; i < v_dim; ++i) out << 'v' << (i + 1) << ',';
  out << "accumulated_cost\n";
  for (std::size_t s = 0; s < sheet.samples.size(); ++s) {
    const SheetSample& sample = sheet.samples[s];
    out << s << ',';
    for (double t : sample.time) out << format_double(t) << ',';
    for (double x : sample.state) out << format_double(x) << ',';
    for (double u : sample.u) out << format_double(u) << ',';
    for (double v : sample.v) out << format_double(v) << ',';
    out << format_double(sample.accumulated_cost) << '\n';
  }
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out = open_out(path);
  out << doc.dump(2) << '\n';
}

nlohmann::json grid_json(const MultitimeGrid& grid) {
  nlohmann::json time = nlohmann::json::array();
  for (const Axis& ax : grid.time_axes())
    time.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"nodes", ax.nodes}});
  nlohmann::json state = nlohmann::json::array();
  for (const Axis& ax : grid.state_axes())
    state.push_back({{"lo", ax.lo}, {"hi", ax.hi}, {"nodes", ax.nodes}});
  return {{"time_axes", time}, {"state_axes", state}};
}

nlohmann::json violation_json(const Violation& v) {
  return {{"kind", v.kind},
          {"time_idx", v.time_idx},
          {"state_idx", v.state_idx},
          {"magnitude", v.magnitude}};
}

nlohmann::json report_json(const ViolationReport& report) {
  nlohmann::json entries = nlohmann::json::array();
  for (const Violation& v : report.entries) entries.push_back(violation_json(v));
  return {{"violations", entries},
          {"max_magnitude", report.max_magnitude},
          {"tested_count", report.tested_count},
          {"ok", report.ok()}};
}

}  // namespace mtg::io
