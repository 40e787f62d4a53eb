#pragma once

// Umbrella header for the simplex-fw library.

#include "sfw/dataset.hpp"
#include "sfw/kernel.hpp"
#include "sfw/model_io.hpp"
#include "sfw/numeric.hpp"
#include "sfw/partan.hpp"
#include "sfw/rng.hpp"
#include "sfw/sampling.hpp"
#include "sfw/simplex_point.hpp"
#include "sfw/solver.hpp"
#include "sfw/synthetic.hpp"
#include "sfw/train.hpp"
