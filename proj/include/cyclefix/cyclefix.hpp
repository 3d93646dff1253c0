#pragma once

#include "cyclefix/bounds.hpp"
#include "cyclefix/convex_set.hpp"
#include "cyclefix/cycles.hpp"
#include "cyclefix/errors.hpp"
#include "cyclefix/flow.hpp"
#include "cyclefix/operator.hpp"
#include "cyclefix/point.hpp"
#include "cyclefix/random.hpp"
#include "cyclefix/scenarios.hpp"
#include "cyclefix/util.hpp"
