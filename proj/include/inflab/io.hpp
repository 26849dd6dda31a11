#pragma once

// Experiment plumbing: flat key-value config files, round-trip-exact CSV
// emission, and self-contained SVG line plots. All files are written
// atomically (temp + rename).

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace inflab {

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file_atomic(const std::string& path,
                              const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename failed: " + path);
}

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!std::isalnum((unsigned char)c) && c != '_' && c != '.') return false;
  return true;
}

}  // namespace detail

// Flat `key = value` text with dotted section prefixes, '#' comments, and
// optionally double-quoted values. Reads are tracked so that unconsumed keys
// can be rejected by name once a command has pulled everything it knows.
class Config {
 public:
  static Config parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      bool quoted = false;
      for (size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"') quoted = !quoted;
        if (line[i] == '#' && !quoted) {
          line.resize(i);
          break;
        }
      }
      line = detail::trim(line);
      if (line.empty()) continue;
      size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": expected key = value");
      std::string key = detail::trim(line.substr(0, eq));
      std::string val = detail::trim(line.substr(eq + 1));
      if (!detail::valid_key(key))
        throw std::runtime_error("config line " + std::to_string(lineno) +
                                 ": bad key '" + key + "'");
      if (val.size() >= 2 && val.front() == '"' && val.back() == '"')
        val = val.substr(1, val.size() - 2);
      if (!cfg.kv_.emplace(key, val).second)
        throw std::runtime_error("config: duplicate key '" + key + "'");
    }
    return cfg;
  }

  static Config parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

  bool has(const std::string& key) const {
    seen_.insert(key);
    return kv_.count(key) != 0;
  }

  std::string get_string(const std::string& key) const {
    seen_.insert(key);
    auto it = kv_.find(key);
    if (it == kv_.end())
      throw std::runtime_error("config: missing key '" + key + "'");
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& def) const {
    return has(key) ? get_string(key) : def;
  }

  double get_double(const std::string& key) const {
    std::string s = get_string(key);
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0')
      throw std::runtime_error("config: key '" + key +
                               "' expects a number, got '" + s + "'");
    return v;
  }

  double get_double(const std::string& key, double def) const {
    return has(key) ? get_double(key) : def;
  }

  long long get_int(const std::string& key) const {
    std::string s = get_string(key);
    char* end = nullptr;
    long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0')
      throw std::runtime_error("config: key '" + key +
                               "' expects an integer, got '" + s + "'");
    return v;
  }

  long long get_int(const std::string& key, long long def) const {
    return has(key) ? get_int(key) : def;
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::istringstream in(get_string(key));
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
      char* end = nullptr;
      double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || *end != '\0')
        throw std::runtime_error("config: key '" + key +
                                 "' expects numbers, got '" + tok + "'");
      out.push_back(v);
    }
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, val] : kv_)
      if (!seen_.count(key))
        throw std::runtime_error("config: unknown key '" + key + "'");
  }

 private:
  std::map<std::string, std::string> kv_;
  mutable std::set<std::string> seen_;
};

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows) {
  std::ostringstream out;
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("csv: row width does not match header");
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_g17(row[i]);
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream out;
  for (size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size())
      throw std::logic_error("csv: row width does not match header");
    for (size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
  write_file_atomic(path, out.str());
}

struct PlotSeries {
  std::string label;
  std::string color = "#1f6fb2";
  std::vector<double> x, y;
  std::vector<size_t> marks;  // indices to circle
};

// Minimal line plot: linear axes spanning the data, five ticks per axis,
// legend in the top-right corner.
inline void write_svg_plot(const std::string& path, const std::string& title,
                           const std::string& xlabel, const std::string& ylabel,
                           const std::vector<PlotSeries>& series) {
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  if (!(xmin <= xmax && ymin <= ymax))
    throw std::invalid_argument("svg plot: no data");
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const double w = 800, h = 560, ml = 80, mr = 30, mt = 50, mb = 60;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (w - ml - mr);
  };
  auto py = [&](double y) {
    return h - mb - (y - ymin) / (ymax - ymin) * (h - mt - mb);
  };
  auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\">\n";
  out << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";
  out << "<text x=\"" << w / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"18\">"
      << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << h - mb << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double xv = xmin + t * (xmax - xmin) / 4;
    double yv = ymin + t * (ymax - ymin) / 4;
    out << "<line x1=\"" << px(xv) << "\" y1=\"" << h - mb << "\" x2=\""
        << px(xv) << "\" y2=\"" << h - mb + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(xv) << "\" y=\"" << h - mb + 22
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << num(xv) << "</text>\n";
    out << "<line x1=\"" << ml - 6 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
        << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << ml - 10 << "\" y=\"" << py(yv) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"12\">"
        << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 16
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">"
      << xlabel << "</text>\n";
  out << "<text x=\"20\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\" transform=\"rotate(-90 20 "
      << (mt + h - mb) / 2 << ")\">" << ylabel << "</text>\n";

  for (const auto& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.color
        << "\" stroke-width=\"2\" points=\"";
    for (size_t i = 0; i < s.x.size(); ++i)
      out << px(s.x[i]) << "," << py(s.y[i]) << " ";
    out << "\"/>\n";
    for (size_t idx : s.marks)
      out << "<circle cx=\"" << px(s.x[idx]) << "\" cy=\"" << py(s.y[idx])
          << "\" r=\"5\" fill=\"white\" stroke=\"" << s.color
          << "\" stroke-width=\"2\"/>\n";
  }
  double ly = mt + 14;
  for (const auto& s : series) {
    out << "<line x1=\"" << w - mr - 150 << "\" y1=\"" << ly << "\" x2=\""
        << w - mr - 120 << "\" y2=\"" << ly << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << w - mr - 112 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"13\">" << s.label
        << "</text>\n";
    ly += 20;
  }
  out << "</svg>\n";
  write_file_atomic(path, out.str());
}

}  // namespace inflab
