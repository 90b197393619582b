#include "cli/report.hpp"

#include <cmath>
#include <cstdio>

namespace spa::cli {

using nlohmann::json;

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  std::string s(buf);
  // Keep floats recognizable as such in JSON ("1" -> "1.0").
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

namespace {

void emit(const json& v, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(2 * depth), ' ');
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (!first) out += ",\n";
        first = false;
        out += pad + json(it.key()).dump() + ": ";
        emit(it.value(), out, depth + 1);
      }
      out += "\n" + close + "}";
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ",\n";
        out += pad;
        emit(v[i], out, depth + 1);
      }
      out += "\n" + close + "]";
      return;
    }
    case json::value_t::number_float: {
      const double d = v.get<double>();
      out += std::isfinite(d) ? format_double(d) : "null";
      return;
    }
    default:
      out += v.dump();
      return;
  }
}

}  // namespace

std::string dump_json(const json& value) {
  std::string out;
  emit(value, out, 0);
  out += "\n";
  return out;
}

void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj,
                          const CostateTrajectory<double>* costate) {
  const Index n = traj.values.rows();
  out << "t";
  for (Index i = 1; i <= n; ++i) out << ",x_" << i;
  for (Index i = 1; i <= n; ++i) out << ",p_" << i;
  out << ",phase\n";
  for (std::size_t k = 0; k < traj.mesh.size(); ++k) {
    out << format_double(traj.mesh.nodes[k]);
    for (Index i = 0; i < n; ++i) out << ',' << format_double(traj.values(i, static_cast<Index>(k)));
    for (Index i = 0; i < n; ++i) {
      out << ',';
      if (costate) out << format_double(costate->values(i, static_cast<Index>(k)));
    }
    out << ',' << traj.mesh.phase_at_node(k) << '\n';
  }
}

}  // namespace spa::cli
