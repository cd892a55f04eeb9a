#pragma once

#include "aab/core.hpp"
#include "aab/engines.hpp"
#include "aab/error_models.hpp"
#include "aab/estimates.hpp"
#include "aab/harness.hpp"
#include "aab/mechanism.hpp"
#include "aab/realization.hpp"
#include "aab/subset_optimizer.hpp"
#include "aab/trace.hpp"
