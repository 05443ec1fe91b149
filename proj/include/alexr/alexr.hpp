#pragma once

#include "alexr/error.hpp"
#include "alexr/outer/outer_functions.hpp"
#include "alexr/core/problem.hpp"
#include "alexr/algorithms/alexr.hpp"
#include "alexr/algorithms/baselines.hpp"
#include "alexr/algorithms/presets.hpp"
#include "alexr/algorithms/run.hpp"
#include "alexr/instances/affine.hpp"
#include "alexr/instances/hard.hpp"
#include "alexr/instances/logistic.hpp"
#include "alexr/instances/gdro.hpp"
#include "alexr/instances/pauc.hpp"
#include "alexr/instances/data_io.hpp"
#include "alexr/instances/synthetic.hpp"
#include "alexr/metrics/metrics.hpp"
