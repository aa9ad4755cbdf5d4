#pragma once

#include "mltherm/dataset.hpp"
#include "mltherm/energy.hpp"
#include "mltherm/error.hpp"
#include "mltherm/init_dist.hpp"
#include "mltherm/nn_thermo.hpp"
#include "mltherm/oracle.hpp"
#include "mltherm/report.hpp"
#include "mltherm/state_evolution.hpp"
#include "mltherm/thermo_analytic.hpp"
