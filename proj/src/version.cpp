#include "nsmlmc/common.hpp"

#ifndef NSMLMC_VERSION
#define NSMLMC_VERSION "0.0.0"
#endif

namespace nsmlmc {

const char* code_version() { return NSMLMC_VERSION; }

}  // namespace nsmlmc
