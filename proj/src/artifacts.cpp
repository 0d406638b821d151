#include "hermifp/artifacts.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hermifp/common.hpp"

namespace hermifp {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (!path.parent_path().empty()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " +
                          ec.message());
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec)
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

std::string artifact_header(const RunConfig& cfg) {
  std::string out;
  out += "# hermifp " + cfg.command + "\n";
  out += "# config-hash: 0x" + hex64(cfg.hash) + "\n";
  out += "# ---\n";
  std::istringstream lines(cfg.canonical);
  std::string line;
  while (std::getline(lines, line)) {
    out += line.empty() ? "#" : "# " + line;
    out += '\n';
  }
  out += "# ---\n";
  return out;
}

ArtifactFile read_artifact(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open artifact " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);

  auto corrupt = [&](const std::string& why) -> IoError {
    return IoError("corrupt artifact " + path.string() + ": " + why);
  };
  if (lines.size() < 3 || lines[0].rfind("# hermifp ", 0) != 0)
    throw corrupt("missing '# hermifp <command>' first line");
  ArtifactFile af;
  af.command = lines[0].substr(10);

  const std::string kHashPrefix = "# config-hash: 0x";
  if (lines[1].rfind(kHashPrefix, 0) != 0) throw corrupt("missing config-hash line");
  std::string hex = lines[1].substr(kHashPrefix.size());
  auto res = std::from_chars(hex.data(), hex.data() + hex.size(), af.hash, 16);
  if (res.ec != std::errc{} || res.ptr != hex.data() + hex.size() || hex.size() != 16)
    throw corrupt("malformed config-hash");

  if (lines[2] != "# ---") throw corrupt("missing opening config sentinel");
  std::size_t i = 3;
  for (; i < lines.size() && lines[i] != "# ---"; ++i) {
    if (lines[i] == "#") {
      af.canonical += '\n';
    } else if (lines[i].rfind("# ", 0) == 0) {
      af.canonical += lines[i].substr(2);
      af.canonical += '\n';
    } else {
      throw corrupt("non-comment line inside the config block");
    }
  }
  if (i == lines.size()) throw corrupt("missing closing config sentinel");
  if (fnv1a64(af.canonical) != af.hash)
    throw corrupt("config-hash does not match the embedded config");
  af.payload.assign(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1, lines.end());
  return af;
}

std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw Error("linspace needs n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] =
        lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  out.back() = hi;
  return out;
}

std::string grid_block(const std::vector<double>& lo, const std::vector<double>& hi,
                       const std::vector<int>& n, const std::vector<double>& values) {
  if (lo.size() != hi.size() || lo.size() != n.size() || lo.empty() || lo.size() > 2)
    throw Error("grid_block handles 1 or 2 consistent axes");
  std::size_t expect = 1;
  for (int k : n) expect *= static_cast<std::size_t>(k);
  if (values.size() != expect) throw Error("grid_block: value count does not match the axes");

  std::string out = "#";
  for (std::size_t d = 0; d < lo.size(); ++d)
    out += " " + format_double(lo[d]) + " " + format_double(hi[d]) + " " + std::to_string(n[d]);
  out += '\n';
  if (lo.size() == 1) {
    for (double v : values) {
      out += format_double(v);
      out += '\n';
    }
  } else {
    const std::size_t ny = static_cast<std::size_t>(n[1]);
    for (int ix = 0; ix < n[0]; ++ix) {
      for (std::size_t iy = 0; iy < ny; ++iy) {
        if (iy) out += ' ';
        out += format_double(values[static_cast<std::size_t>(ix) * ny + iy]);
      }
      out += '\n';
    }
  }
  return out;
}

}  // namespace hermifp
