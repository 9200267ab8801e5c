#pragma once

#include "qmc/core.hpp"
#include "qmc/model.hpp"
#include "qmc/polynomials.hpp"
#include "qmc/spectral.hpp"
#include "qmc/statistics.hpp"
#include "qmc/folding.hpp"
#include "qmc/nonsymmetric.hpp"
#include "qmc/trajectories.hpp"
