#pragma once

// Core library. config.hpp, report.hpp and runner.hpp are separate because
// they pull in yaml-cpp and the JSON header.

#include "cramer_risk.hpp"
#include "error.hpp"
#include "expression.hpp"
#include "fluctuation_stats.hpp"
#include "jump_law.hpp"
#include "ladder_exponent.hpp"
#include "levy_model.hpp"
#include "path_sim.hpp"
#include "version.hpp"
