#pragma once

#include "geolqr/pmp/avoidance.hpp"
#include "geolqr/pmp/costate.hpp"
#include "geolqr/pmp/manifold.hpp"
#include "geolqr/pmp/path.hpp"
#include "geolqr/pmp/transcription.hpp"
#include "geolqr/pmp/variational.hpp"
