#pragma once

#include "abslab/analysis.hpp"
#include "abslab/config.hpp"
#include "abslab/controllers.hpp"
#include "abslab/csv.hpp"
#include "abslab/friction.hpp"
#include "abslab/fuzzy.hpp"
#include "abslab/plant.hpp"
#include "abslab/plot.hpp"
#include "abslab/scenario.hpp"
