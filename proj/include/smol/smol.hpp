#pragma once

#include "smol/analytic.hpp"
#include "smol/contraction.hpp"
#include "smol/equilibrium.hpp"
#include "smol/error.hpp"
#include "smol/integrator.hpp"
#include "smol/io.hpp"
#include "smol/kernels.hpp"
#include "smol/moments.hpp"
#include "smol/state.hpp"
#include "smol/system.hpp"
#include "smol/verify.hpp"
