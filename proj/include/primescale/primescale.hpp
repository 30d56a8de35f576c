#pragma once

#include "primescale/error.hpp"
#include "primescale/experiment.hpp"
#include "primescale/fbm.hpp"
#include "primescale/numeric.hpp"
#include "primescale/primes.hpp"
#include "primescale/series.hpp"
#include "primescale/specfun.hpp"
#include "primescale/stats.hpp"
