#pragma once

#include "polaron/runner/config.hpp"
#include "polaron/runner/io.hpp"
#include "polaron/runner/scenarios.hpp"
