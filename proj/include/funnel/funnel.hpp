#pragma once

#include "funnel/config.hpp"
#include "funnel/csv.hpp"
#include "funnel/dynamics.hpp"
#include "funnel/errors.hpp"
#include "funnel/experiments.hpp"
#include "funnel/measurement.hpp"
#include "funnel/rk4.hpp"
#include "funnel/steady_state.hpp"
#include "funnel/trap_model.hpp"
#include "funnel/units.hpp"
