#pragma once

#include "gradflux/chemotaxis.hpp"
#include "gradflux/config.hpp"
#include "gradflux/convergence.hpp"
#include "gradflux/experiment.hpp"
#include "gradflux/functionals.hpp"
#include "gradflux/grid.hpp"
#include "gradflux/heat.hpp"
#include "gradflux/snapshot.hpp"
#include "gradflux/test_functions.hpp"
#include "gradflux/verifier.hpp"
