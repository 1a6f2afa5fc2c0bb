#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace disttrack::harness {

// Constants fixed once by calibration; tests and the acceptance gate read
// them from here, and `calibrate` re-measures them.
namespace frozen {
inline constexpr double kReportConstant = 4.0;      // c_p
inline constexpr double kSummaryStdConstant = 1.0;  // c_A: std <= c_A eps' m
inline constexpr double kFreqVarianceConstant = 6.0;  // Var <= C / p^2
inline constexpr double kChunkVarianceConstant = 3.0;  // chunk mse <= C b^2
}  // namespace frozen

struct CalibrationItem {
  std::string name;
  double measured = 0;
  double limit = 0;  // measured must not exceed this
  bool ok = false;
  std::string detail;
};

struct CalibrationOptions {
  std::uint64_t seed = 2024;
  // Multiplies every trial count; 1 is the full calibration.
  double scale = 1.0;
};

std::vector<CalibrationItem> calibrate(const CalibrationOptions& options = {});

// key = value lines, one per item, plus a trailing status line.
void write_constants(std::ostream& os, const std::vector<CalibrationItem>& items);

}  // namespace disttrack::harness
