#pragma once

#include "dte/error.hpp"
#include "dte/grid.hpp"
#include "dte/tasks.hpp"
#include "dte/action_design.hpp"
#include "dte/rng.hpp"
#include "dte/game.hpp"
#include "dte/learning.hpp"
#include "dte/analysis.hpp"
#include "dte/scenario.hpp"
#include "dte/report.hpp"
