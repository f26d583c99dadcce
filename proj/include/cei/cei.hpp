#pragma once

// Umbrella header.

#include "cei/scenario.hpp"
#include "cei/perception.hpp"
#include "cei/belief.hpp"
#include "cei/risk.hpp"
#include "cei/planner.hpp"
#include "cei/params.hpp"
#include "cei/engine.hpp"
#include "cei/log_io.hpp"
#include "cei/analysis.hpp"
#include "cei/ingest.hpp"
#include "cei/calibration.hpp"
#include "cei/config.hpp"
#include "cei/svg.hpp"
#include "cei/figures.hpp"
