#pragma once

#include "errors.hpp"
#include "state_space.hpp"
#include "distribution.hpp"
#include "generators.hpp"
#include "kernels.hpp"
#include "grid.hpp"
#include "scores.hpp"
#include "sampler.hpp"
#include "metrics.hpp"
