#pragma once

#include "wgsf/analysis.hpp"
#include "wgsf/coupling.hpp"
#include "wgsf/ensemble.hpp"
#include "wgsf/errors.hpp"
#include "wgsf/io.hpp"
#include "wgsf/observables.hpp"
#include "wgsf/oracle.hpp"
#include "wgsf/params.hpp"
#include "wgsf/rng.hpp"
#include "wgsf/state.hpp"
#include "wgsf/twa.hpp"
