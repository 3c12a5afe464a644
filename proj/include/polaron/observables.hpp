#pragma once

#include "polaron/observables/contrast.hpp"
#include "polaron/observables/energy.hpp"
#include "polaron/observables/frequency.hpp"
#include "polaron/observables/region.hpp"
#include "polaron/observables/spectral.hpp"
#include "polaron/observables/time_series.hpp"
