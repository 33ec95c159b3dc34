#pragma once

#include "nlft/convergence.hpp"
#include "nlft/potential.hpp"
#include "nlft/propagator.hpp"
#include "nlft/quadrature.hpp"
#include "nlft/report.hpp"
#include "nlft/scattering.hpp"
#include "nlft/spectral.hpp"
#include "nlft/zeros.hpp"
