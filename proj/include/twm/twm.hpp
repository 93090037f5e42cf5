#pragma once

// Everything except the command-line layer.
#include "twm/compare.hpp"
#include "twm/critical.hpp"
#include "twm/eigenmode.hpp"
#include "twm/laser_model.hpp"
#include "twm/mode_ode.hpp"
#include "twm/presets.hpp"
#include "twm/profile.hpp"
#include "twm/quadrature.hpp"
#include "twm/simulator.hpp"
#include "twm/spectrum.hpp"
#include "twm/transfer.hpp"
#include "twm/types.hpp"
#include "twm/verify.hpp"
