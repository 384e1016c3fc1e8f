#pragma once

#include "ppde/reference.hpp"

namespace oracles {
using namespace ppde::reference;
}  // namespace oracles
