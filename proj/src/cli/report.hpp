#pragma once

#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "spa/costate.hpp"
#include "spa/integrator.hpp"

namespace spa::cli {

// Serializes with two-space indentation and every floating-point value at 17
// significant digits ("%.17g"). Non-finite numbers become null.
std::string dump_json(const nlohmann::json& value);

// Columns t, x_1..x_n, p_1..p_n, phase. Costate cells are left empty when
// no costate is given. LF line endings, header row.
void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj,
                          const CostateTrajectory<double>* costate);

std::string format_double(double value);

}  // namespace spa::cli
