#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qgeom/models.hpp"

namespace qgeom {

// Named invariant suites runnable from tests and from the CLI `check`
// subcommand.
enum class CheckSuite { All, Gauge, Uncertainty, Stokes, Oracle, Bo };

std::optional<CheckSuite> parse_suite(const std::string& text);
std::string to_string(CheckSuite suite);

struct CheckResult {
    std::string suite;
    std::string name;
    Real residual = 0.0;
    Real tolerance = 0.0;
    bool pass = false;
    std::string note;  // failure detail / error code
};

struct CheckOptions {
    std::uint64_t seed = 20240915;
    int su11_truncation = 128;  // lowering this below ~32 is the negative control
};

std::vector<CheckResult> run_checks(CheckSuite suite, const CheckOptions& options = {});

}  // namespace qgeom
