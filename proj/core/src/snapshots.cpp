#include "invmeas/snapshots.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "invmeas/errors.hpp"

namespace invmeas {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_snapshots_csv(const SnapshotSet& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "# invmeas snapshots v1\n";
  out << "# n=" << s.dimension << " m=" << s.count() << " tau="
      << fmt_double(s.tau) << " seed=" << s.seed << " system=" << s.system
      << "\n";
  out << "# box=";
  for (int i = 0; i < s.dimension; ++i) {
    if (i) out << ";";
    out << fmt_double(s.domain_box[i].lo) << "," << fmt_double(s.domain_box[i].hi);
  }
  out << "\n# columns: x1..x" << s.dimension << ",z1..z" << s.dimension << "\n";
  for (Eigen::Index c = 0; c < s.count(); ++c) {
    for (int i = 0; i < s.dimension; ++i) {
      if (i) out << ",";
      out << fmt_double(s.x(i, c));
    }
    for (int i = 0; i < s.dimension; ++i) out << "," << fmt_double(s.z(i, c));
    out << "\n";
  }
}

SnapshotSet load_snapshots_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open: " + path);
  SnapshotSet s;
  std::string line;
  Eigen::Index m = 0;
  std::vector<double> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string tok;
      while (hs >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
        if (key == "n") s.dimension = std::stoi(val);
        else if (key == "tau") s.tau = std::stod(val);
        else if (key == "seed") s.seed = std::stoull(val);
        else if (key == "system") s.system = val;
        else if (key == "box") {
          std::istringstream bs(val);
          std::string piece;
          s.domain_box.clear();
          while (std::getline(bs, piece, ';')) {
            auto comma = piece.find(',');
            s.domain_box.push_back(Interval{std::stod(piece.substr(0, comma)),
                                            std::stod(piece.substr(comma + 1))});
          }
        }
      }
      continue;
    }
    std::istringstream rs(line);
    std::string cell;
    while (std::getline(rs, cell, ',')) data.push_back(std::stod(cell));
    ++m;
  }
  if (s.dimension <= 0) throw Error("snapshots csv: missing n header");
  const int n = s.dimension;
  if (data.size() != static_cast<std::size_t>(m) * 2 * n)
    throw Error("snapshots csv: ragged rows");
  s.x.resize(n, m);
  s.z.resize(n, m);
  for (Eigen::Index c = 0; c < m; ++c)
    for (int i = 0; i < n; ++i) {
      s.x(i, c) = data[static_cast<std::size_t>(c) * 2 * n + i];
      s.z(i, c) = data[static_cast<std::size_t>(c) * 2 * n + n + i];
    }
  return s;
}

void save_snapshots_bin(const SnapshotSet& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  nlohmann::json meta;
  meta["format"] = "invmeas-snapshots-bin-v1";
  meta["n"] = s.dimension;
  meta["m"] = static_cast<std::int64_t>(s.count());
  meta["tau"] = s.tau;
  meta["seed"] = s.seed;
  meta["system"] = s.system;
  nlohmann::json box = nlohmann::json::array();
  for (const auto& iv : s.domain_box) box.push_back({iv.lo, iv.hi});
  meta["box"] = box;
  out << meta.dump() << "\n";
  const int n = s.dimension;
  std::vector<double> row(static_cast<std::size_t>(2) * n);
  for (Eigen::Index c = 0; c < s.count(); ++c) {
    for (int i = 0; i < n; ++i) {
      row[static_cast<std::size_t>(i)] = s.x(i, c);
      row[static_cast<std::size_t>(n + i)] = s.z(i, c);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * row.size()));
  }
}

SnapshotSet load_snapshots_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  std::string meta_line;
  std::getline(in, meta_line);
  auto meta = nlohmann::json::parse(meta_line);
  SnapshotSet s;
  s.dimension = meta.at("n").get<int>();
  s.tau = meta.at("tau").get<double>();
  s.seed = meta.at("seed").get<std::uint64_t>();
  s.system = meta.at("system").get<std::string>();
  for (const auto& iv : meta.at("box"))
    s.domain_box.push_back(Interval{iv[0].get<double>(), iv[1].get<double>()});
  const auto m = meta.at("m").get<std::int64_t>();
  const int n = s.dimension;
  s.x.resize(n, m);
  s.z.resize(n, m);
  std::vector<double> row(static_cast<std::size_t>(2) * n);
  for (std::int64_t c = 0; c < m; ++c) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * row.size()));
    if (!in) throw Error("snapshots bin: truncated data");
    for (int i = 0; i < n; ++i) {
      s.x(i, c) = row[static_cast<std::size_t>(i)];
      s.z(i, c) = row[static_cast<std::size_t>(n + i)];
    }
  }
  return s;
}

namespace {
bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}
}  // namespace

void save_snapshots(const SnapshotSet& s, const std::string& path) {
  if (ends_with(path, ".bin")) save_snapshots_bin(s, path);
  else save_snapshots_csv(s, path);
}

SnapshotSet load_snapshots(const std::string& path) {
  return ends_with(path, ".bin") ? load_snapshots_bin(path)
                                 : load_snapshots_csv(path);
}

SnapshotSet to_unit_box(const SnapshotSet& s) {
  SnapshotSet out = s;
  for (int i = 0; i < s.dimension; ++i) {
    const auto& iv = s.domain_box[i];
    out.x.row(i) = (2.0 * s.x.row(i).array() - iv.lo - iv.hi) / iv.width();
    out.z.row(i) = (2.0 * s.z.row(i).array() - iv.lo - iv.hi) / iv.width();
    out.domain_box[i] = Interval{-1.0, 1.0};
  }
  return out;
}

}  // namespace invmeas
