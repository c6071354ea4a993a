#pragma once

// Umbrella header.

#include "fiilab/blas_guard.hpp"
#include "fiilab/commands.hpp"
#include "fiilab/config.hpp"
#include "fiilab/cumulants.hpp"
#include "fiilab/ensemble.hpp"
#include "fiilab/error.hpp"
#include "fiilab/hsquad.hpp"
#include "fiilab/io.hpp"
#include "fiilab/jet.hpp"
#include "fiilab/lapack.hpp"
#include "fiilab/mcstats.hpp"
#include "fiilab/quadrature.hpp"
#include "fiilab/rng.hpp"
#include "fiilab/selfcheck.hpp"
#include "fiilab/semicircle.hpp"
#include "fiilab/spectral.hpp"
#include "fiilab/stats.hpp"
#include "fiilab/testfunc.hpp"
