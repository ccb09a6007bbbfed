#pragma once

#include "spawncphd/assignment.hpp"
#include "spawncphd/cardinality.hpp"
#include "spawncphd/config.hpp"
#include "spawncphd/errors.hpp"
#include "spawncphd/experiment.hpp"
#include "spawncphd/filter.hpp"
#include "spawncphd/gaussian.hpp"
#include "spawncphd/metrics.hpp"
#include "spawncphd/sim.hpp"
#include "spawncphd/spawning.hpp"
