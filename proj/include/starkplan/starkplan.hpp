#pragma once

// Umbrella header for the starkplan library: bias-response models, lineshape
// and fit machinery, two-emitter interference, chip-scale pair planning,
// thermal audit, and the synthetic-data generator.

#include "starkplan/cerf.hpp"
#include "starkplan/constants.hpp"
#include "starkplan/data.hpp"
#include "starkplan/emitters.hpp"
#include "starkplan/errors.hpp"
#include "starkplan/fit.hpp"
#include "starkplan/interference.hpp"
#include "starkplan/io.hpp"
#include "starkplan/lineshapes.hpp"
#include "starkplan/planner.hpp"
#include "starkplan/quadrature.hpp"
#include "starkplan/rng.hpp"
#include "starkplan/synth.hpp"
#include "starkplan/thermal.hpp"
