#pragma once

#include "limitlab/summation.hpp"
#include "limitlab/special.hpp"
#include "limitlab/parallel.hpp"
#include "limitlab/weights.hpp"
#include "limitlab/kernel.hpp"
#include "limitlab/multisum.hpp"
#include "limitlab/moments.hpp"
#include "limitlab/rng.hpp"
#include "limitlab/simulate.hpp"
#include "limitlab/stats.hpp"
#include "limitlab/experiment.hpp"
