#pragma once

// Umbrella header.

#include "config.hpp"
#include "disorder.hpp"
#include "ensemble.hpp"
#include "equilibrium.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "observables.hpp"
#include "results_io.hpp"
#include "rng.hpp"
#include "sampler.hpp"
