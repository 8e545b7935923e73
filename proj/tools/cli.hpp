#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace besq::cli {

// Environment variable consulted for the master seed when --seed is absent.
inline constexpr const char* kSeedEnvVar = "BESQLAB_SEED";

// Exit codes: 0 success / member / all verdicts pass, 1 usage or precondition
// error, 2 non-member or failed verdict.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitNegative = 2;

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace besq::cli
