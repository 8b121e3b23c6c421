#pragma once

#include "vio_integrity/constants.hpp"
#include "vio_integrity/error.hpp"
#include "vio_integrity/estimation.hpp"
#include "vio_integrity/geometry.hpp"
#include "vio_integrity/harness.hpp"
#include "vio_integrity/integrity.hpp"
#include "vio_integrity/metrics.hpp"
#include "vio_integrity/simulation.hpp"
