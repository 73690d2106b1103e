#pragma once

/** @file io.hpp
    @brief CSV and binary field export.

    Field layout: one ASCII header line "SLODFIELD <d> <n_fine> <kappa> <name>\n"
    followed by row-major little-endian (re, im) double pairs, one per fine
    vertex.
*/

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "fem.hpp"
#include "grid.hpp"

namespace slod {

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path)
  {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
    out_ << std::setprecision(17);
    for (std::size_t i = 0; i < header.size(); ++i)
      out_ << header[i] << (i + 1 < header.size() ? "," : "\n");
  }

  template <class... Ts>
  void row(const Ts&... vals)
  {
    bool first = true;
    ((out_ << (first ? "" : ",") << vals, first = false), ...);
    out_ << "\n";
  }

 private:
  std::ofstream out_;
};

inline void write_field(const std::filesystem::path& path, const VecC& field, const FineGrid& fine,
                        double kappa, const std::string& name)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_field: cannot open " + path.string());
  std::ostringstream header;
  header << "SLODFIELD " << fine.dim << " " << fine.n_fine << " " << std::setprecision(17) << kappa
         << " " << name << "\n";
  out << header.str();
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    const double re = field[i].real(), im = field[i].imag();
    out.write(reinterpret_cast<const char*>(&re), sizeof(double));
    out.write(reinterpret_cast<const char*>(&im), sizeof(double));
  }
}

struct FieldFile {
  int dim = 0;
  int n_fine = 0;
  double kappa = 0.0;
  std::string name;
  VecC values;
};

inline FieldFile read_field(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_field: cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  std::istringstream hs(line);
  std::string magic;
  FieldFile f;
  hs >> magic >> f.dim >> f.n_fine >> f.kappa >> f.name;
  if (magic != "SLODFIELD") throw std::runtime_error("read_field: bad header in " + path.string());
  const int n = f.dim == 1 ? f.n_fine + 1 : (f.n_fine + 1) * (f.n_fine + 1);
  f.values.resize(n);
  for (int i = 0; i < n; ++i) {
    double re = 0.0, im = 0.0;
    in.read(reinterpret_cast<char*>(&re), sizeof(double));
    in.read(reinterpret_cast<char*>(&im), sizeof(double));
    f.values[i] = cplx(re, im);
  }
  if (!in) throw std::runtime_error("read_field: truncated file " + path.string());
  return f;
}

}  // namespace slod
