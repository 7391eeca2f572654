#pragma once

// Umbrella header for the k-set agreement laboratory.

#include "kset/algorithm.hpp"
#include "kset/analysis.hpp"
#include "kset/detectors.hpp"
#include "kset/driver.hpp"
#include "kset/graph.hpp"
#include "kset/protocol.hpp"
#include "kset/replay.hpp"
#include "kset/scenario.hpp"
#include "kset/sim.hpp"
#include "kset/sweep.hpp"
#include "kset/trace.hpp"
#include "kset/types.hpp"
#include "kset/verdict.hpp"
