#pragma once

#include "polaron/meanfield/contrast.hpp"
#include "polaron/meanfield/ground_state.hpp"
#include "polaron/meanfield/propagate.hpp"
#include "polaron/meanfield/sound_horizon.hpp"
#include "polaron/meanfield/system.hpp"
#include "polaron/meanfield/thomas_fermi.hpp"
