#pragma once

// Umbrella header: the whole library in one include.

#include "version.hpp"
#include "errors.hpp"
#include "model.hpp"
#include "rng.hpp"
#include "quadrature.hpp"
#include "densities.hpp"
#include "simulate.hpp"
#include "filter.hpp"
#include "surface.hpp"
#include "blr.hpp"
#include "pide.hpp"
#include "strategy.hpp"
#include "montecarlo.hpp"
#include "config_io.hpp"
#include "csv.hpp"
