#pragma once

#include "polaron/effpot/dynamics.hpp"
#include "polaron/effpot/potential.hpp"
#include "polaron/effpot/spectrum.hpp"
