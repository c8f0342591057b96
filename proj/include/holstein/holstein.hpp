#pragma once

#include "holstein/errors.hpp"
#include "holstein/lattice.hpp"
#include "holstein/oscillator.hpp"
#include "holstein/held_karp.hpp"
#include "holstein/state_space.hpp"
#include "holstein/model.hpp"
#include "holstein/assembly.hpp"
#include "holstein/fit.hpp"
#include "holstein/resolvent.hpp"
#include "holstein/statistics.hpp"
#include "holstein/config.hpp"
#include "holstein/experiments.hpp"
