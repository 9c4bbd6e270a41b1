#pragma once

#include "sievesmm/cf.hpp"
#include "sievesmm/dgp.hpp"
#include "sievesmm/distributions.hpp"
#include "sievesmm/econ.hpp"
#include "sievesmm/errors.hpp"
#include "sievesmm/estimator.hpp"
#include "sievesmm/garch.hpp"
#include "sievesmm/inference.hpp"
#include "sievesmm/io.hpp"
#include "sievesmm/mixture.hpp"
#include "sievesmm/montecarlo.hpp"
#include "sievesmm/optimize.hpp"
#include "sievesmm/parallel.hpp"
#include "sievesmm/qmc.hpp"
#include "sievesmm/quadrature.hpp"
#include "sievesmm/random.hpp"
