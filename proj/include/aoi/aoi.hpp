#pragma once

#include "aoi/model.hpp"
#include "aoi/analytic.hpp"
#include "aoi/rng.hpp"
#include "aoi/stats.hpp"
#include "aoi/simulator.hpp"
#include "aoi/validation.hpp"
#include "aoi/experiment.hpp"
