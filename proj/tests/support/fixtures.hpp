#pragma once

#include "verify/instances.hpp"

namespace fixtures {
using namespace verify;
}  // namespace fixtures
