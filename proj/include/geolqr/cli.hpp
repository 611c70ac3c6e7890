#pragma once

#include "geolqr/cli/check.hpp"
#include "geolqr/cli/config.hpp"
#include "geolqr/cli/csv.hpp"
#include "geolqr/cli/run.hpp"
#include "geolqr/cli/summary.hpp"
