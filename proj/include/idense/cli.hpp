#pragma once

#include <iostream>
#include <string>
#include <string_view>
#include <vector>

namespace idense::cli {

inline constexpr std::string_view kToolkitVersion = "0.1.0";
inline constexpr int kReportFormatVersion = 1;

/// Runs one command line (argv[0] is the program name). Returns 0 on success, 1 on a
/// validation or usage error, 2 on an I/O error.
int run(const std::vector<std::string>& argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);

/// Worker threads to use: `requested` (0 = hardware concurrency) capped by IDENSE_THREADS.
int thread_budget(int requested);

}  // namespace idense::cli
