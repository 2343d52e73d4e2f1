#pragma once

#include "ugwb/analysis.hpp"
#include "ugwb/discrete_models.hpp"
#include "ugwb/errors.hpp"
#include "ugwb/grid.hpp"
#include "ugwb/kernel_io.hpp"
#include "ugwb/kernel_projection.hpp"
#include "ugwb/landau.hpp"
#include "ugwb/operator_core.hpp"
#include "ugwb/parallel.hpp"
#include "ugwb/radius.hpp"
#include "ugwb/special_functions.hpp"
