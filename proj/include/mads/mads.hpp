#pragma once

#include "barrier.hpp"
#include "blackbox.hpp"
#include "config.hpp"
#include "core.hpp"
#include "history.hpp"
#include "mesh.hpp"
#include "poll.hpp"
#include "problems/analytic.hpp"
#include "problems/builtins.hpp"
#include "problems/nas.hpp"
#include "problems/random_search.hpp"
#include "search.hpp"
#include "solver.hpp"
