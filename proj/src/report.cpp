#include "pdfm/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace pdfm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double v = 0.0;
  const char* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw std::invalid_argument("not a number: '" + text + "'");
  }
  return v;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << text;
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::string> split_csv_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& f : out) {
    if (f.size() >= 2 && f.front() == '"' && f.back() == '"') f = f.substr(1, f.size() - 2);
  }
  return out;
}

namespace {

std::string fixed3(double v) {
  if (!std::isfinite(v)) return format_double(v);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

}  // namespace

std::string render_report(const std::filesystem::path& dir) {
  // results.csv columns: dataset,mode,k,metric,mean,std,n_seeds
  using Key = std::tuple<std::string, std::string, int, std::string>;
  std::map<Key, std::pair<double, double>> cells;
  std::map<std::string, std::set<int>> ks;
  std::map<std::string, std::vector<std::string>> modes;
  if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "results.csv") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    std::istringstream in(read_text(file));
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto f = split_csv_line(line);
      if (f.size() < 6 || f[0] == "dataset") continue;
      const int k = std::stoi(f[2]);
      cells[{f[0], f[1], k, f[3]}] = {parse_double(f[4]), parse_double(f[5])};
      ks[f[0]].insert(k);
      auto& ml = modes[f[0]];
      if (std::find(ml.begin(), ml.end(), f[1]) == ml.end()) ml.push_back(f[1]);
    }
  }
  static const std::vector<std::string> metrics{"accuracy", "dbc", "disc", "cons"};
  static const std::vector<std::string> labels{"Acc", "DBC", "Disc", "Cons"};
  std::ostringstream os;
  for (const auto& [dataset, kset] : ks) {
    os << "### " << dataset << "\n\n| Method |";
    for (int k : kset) {
      for (const auto& l : labels) os << ' ' << k << "-shot " << l << " |";
    }
    os << "\n|---|";
    for (std::size_t i = 0; i < kset.size() * labels.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& mode : modes[dataset]) {
      os << "| " << mode << " |";
      for (int k : kset) {
        for (const auto& m : metrics) {
          auto it = cells.find({dataset, mode, k, m});
          if (it == cells.end()) {
            os << " - |";
          } else {
            os << ' ' << fixed3(it->second.first) << " ± " << fixed3(it->second.second) << " |";
          }
        }
      }
      os << '\n';
    }
    os << '\n';
  }
  if (ks.empty()) os << "(no results.csv found under " << dir.string() << ")\n";
  return os.str();
}

}  // namespace pdfm
