#pragma once

#include "polaron/exactdiag/busch.hpp"
#include "polaron/exactdiag/fock.hpp"
#include "polaron/exactdiag/hamiltonian.hpp"
#include "polaron/exactdiag/krylov.hpp"
#include "polaron/exactdiag/lanczos.hpp"
#include "polaron/exactdiag/schmidt.hpp"
#include "polaron/exactdiag/tensor.hpp"
