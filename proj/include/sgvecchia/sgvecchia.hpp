/*!
 * This file is part of sgvecchia, a C++ library for stochastic gradient MCMC
 * with Vecchia-approximated Gaussian processes.
 *
 * Copyright (c) 2026 The sgvecchia authors. All rights reserved.
 *
 * Licensed under the Apache License Version 2.0. See LICENSE file in the project root for license information.
 */
#pragma once

#include "sgvecchia/bench.hpp"
#include "sgvecchia/bessel.hpp"
#include "sgvecchia/config.hpp"
#include "sgvecchia/diagnostics.hpp"
#include "sgvecchia/error.hpp"
#include "sgvecchia/io.hpp"
#include "sgvecchia/kdtree.hpp"
#include "sgvecchia/kernel.hpp"
#include "sgvecchia/neighbors.hpp"
#include "sgvecchia/predict.hpp"
#include "sgvecchia/priors.hpp"
#include "sgvecchia/samplers.hpp"
#include "sgvecchia/simulate.hpp"
#include "sgvecchia/types.hpp"
#include "sgvecchia/vecchia.hpp"
