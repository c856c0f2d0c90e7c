#pragma once

#include "fedsim/aggregation.hpp"
#include "fedsim/config.hpp"
#include "fedsim/engine.hpp"
#include "fedsim/errors.hpp"
#include "fedsim/federation.hpp"
#include "fedsim/params.hpp"
#include "fedsim/records_io.hpp"
#include "fedsim/rng.hpp"
#include "fedsim/selection.hpp"
#include "fedsim/tasks.hpp"
