#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hjreach/dynamics.hpp"
#include "hjreach/value_model.hpp"

namespace hjreach {

// 2-D slice through a value function: two free state dimensions sampled on a
// uniform grid over the state box, all other dimensions fixed.
struct SliceSpec {
  int free0 = 0;
  int free1 = 1;
  int res0 = 201;
  int res1 = 201;
  VectorXd fixed;  // full state vector; entries at free dims are ignored
  double tau = 0.0;

  void validate(const SystemSpec& spec) const {
    if (free0 == free1 || free0 < 0 || free1 < 0 ||
        free0 >= spec.state_dim || free1 >= spec.state_dim)
      throw std::invalid_argument("slice needs two distinct free dimensions");
    if (res0 < 2 || res1 < 2)
      throw std::invalid_argument("slice resolution must be at least 2");
    if (fixed.size() != spec.state_dim)
      throw std::invalid_argument("fixed vector must have the state dimension");
    if (tau < 0.0 || tau > spec.horizon * (1 + 1e-9))
      throw std::invalid_argument("slice tau outside [0, horizon]");
    for (int d = 0; d < spec.state_dim; ++d) {
      if (d == free0 || d == free1 || spec.periodic[d]) continue;
      if (fixed(d) < spec.lo(d) || fixed(d) > spec.hi(d))
        throw std::invalid_argument("fixed value outside the box at dim " +
                                    std::to_string(d));
    }
  }

  double coord0(const SystemSpec& spec, int r) const {
    return spec.lo(free0) +
           (spec.hi(free0) - spec.lo(free0)) * r / (res0 - 1);
  }
  double coord1(const SystemSpec& spec, int c) const {
    return spec.lo(free1) +
           (spec.hi(free1) - spec.lo(free1)) * c / (res1 - 1);
  }
};

// values(r, c) = V at free0 = coord0(r), free1 = coord1(c); row-major export.
inline MatrixXd slice_values(const ValueModel& model, const SystemSpec& spec,
                             const SliceSpec& slice) {
  slice.validate(spec);
  if (model.state_dim() != spec.state_dim)
    throw std::invalid_argument("model/system dimension mismatch");
  MatrixXd out(slice.res0, slice.res1);
#pragma omp parallel for schedule(static)
  for (int r = 0; r < slice.res0; ++r) {
    VectorXd x = slice.fixed;
    x(slice.free0) = slice.coord0(spec, r);
    for (int c = 0; c < slice.res1; ++c) {
      x(slice.free1) = slice.coord1(spec, c);
      out(r, c) = model.value(x, slice.tau);
    }
  }
  return out;
}

struct SliceComparison {
  double mse = 0.0;
  double sub_zero_iou = 1.0;     // 1.0 when both sub-zero sets are empty
  double a_only_fraction = 0.0;  // |{a<=0} \ {b<=0}| / |union|, 0 if empty
  double b_only_fraction = 0.0;
};

inline SliceComparison compare_slices(const MatrixXd& a, const MatrixXd& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("slice shape mismatch");
  SliceComparison cmp;
  cmp.mse = (a - b).array().square().mean();
  long inter = 0, only_a = 0, only_b = 0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const bool ia = *(a.data() + i) <= 0.0;
    const bool ib = *(b.data() + i) <= 0.0;
    inter += ia && ib;
    only_a += ia && !ib;
    only_b += !ia && ib;
  }
  const long uni = inter + only_a + only_b;
  if (uni > 0) {
    cmp.sub_zero_iou = static_cast<double>(inter) / uni;
    cmp.a_only_fraction = static_cast<double>(only_a) / uni;
    cmp.b_only_fraction = static_cast<double>(only_b) / uni;
  }
  return cmp;
}

// ---- CSV export: '#'-prefixed text header, then res0 rows of res1 values ----

inline void save_slice_csv(std::ostream& os, const SystemSpec& spec,
                           const SliceSpec& slice, const MatrixXd& values,
                           const std::string& model_label) {
  os << "# hjreach slice v1\n";
  os << "# system=" << spec.name << " model=" << model_label << "\n";
  char line[256];
  std::snprintf(line, sizeof line, "# free0=%s lo=%.17g hi=%.17g res=%d\n",
                spec.dim_names[slice.free0].c_str(), spec.lo(slice.free0),
                spec.hi(slice.free0), slice.res0);
  os << line;
  std::snprintf(line, sizeof line, "# free1=%s lo=%.17g hi=%.17g res=%d\n",
                spec.dim_names[slice.free1].c_str(), spec.lo(slice.free1),
                spec.hi(slice.free1), slice.res1);
  os << line;
  std::snprintf(line, sizeof line, "# tau=%.17g\n", slice.tau);
  os << line;
  for (int d = 0; d < spec.state_dim; ++d) {
    if (d == slice.free0 || d == slice.free1) continue;
    std::snprintf(line, sizeof line, "# fixed %s=%.17g\n",
                  spec.dim_names[d].c_str(), slice.fixed(d));
    os << line;
  }
  os.precision(17);
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c) os << ',';
      os << values(r, c);
    }
    os << '\n';
  }
  if (!os) throw SerializationError("slice write failed");
}

inline void save_slice_csv_file(const std::filesystem::path& path,
                                const SystemSpec& spec, const SliceSpec& slice,
                                const MatrixXd& values,
                                const std::string& model_label) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw SerializationError("cannot open '" + path.string() + "'");
  save_slice_csv(os, spec, slice, values, model_label);
}

struct LoadedSlice {
  MatrixXd values;
  std::vector<std::string> header;  // '#' lines, comparison keys included
};

inline LoadedSlice load_slice_csv(std::istream& is) {
  LoadedSlice out;
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.header.push_back(line);
      continue;
    }
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (!rows.empty() && row.size() != rows.front().size())
      throw SerializationError("ragged slice CSV");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SerializationError("slice CSV has no data rows");
  out.values.resize(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      out.values(r, c) = rows[r][c];
  return out;
}

inline LoadedSlice load_slice_csv_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw SerializationError("cannot open '" + path.string() + "'");
  return load_slice_csv(is);
}

// Geometry lines of the header (everything except the model reference);
// used to require identical slice specs before comparing.
inline std::vector<std::string> slice_geometry_header(const LoadedSlice& s) {
  std::vector<std::string> out;
  for (const std::string& line : s.header)
    if (line.rfind("# system=", 0) != 0) out.push_back(line);
  return out;
}

}  // namespace hjreach
