#pragma once

#include <iosfwd>

#include "opinion/config.hpp"

namespace opinion {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 1;
inline constexpr int io = 2;
}  // namespace exit_code

// Entry point behind the `opinion` binary. Data goes to `out`,
// diagnostics to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
            const EnvLookup& env = process_env());

}  // namespace opinion
