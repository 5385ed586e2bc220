#pragma once

// Umbrella header for the receiver modelling library.

#include "wpr/analytic.hpp"
#include "wpr/averaged.hpp"
#include "wpr/config.hpp"
#include "wpr/controller.hpp"
#include "wpr/errors.hpp"
#include "wpr/figures.hpp"
#include "wpr/io.hpp"
#include "wpr/modulation.hpp"
#include "wpr/numeric.hpp"
#include "wpr/parallel.hpp"
#include "wpr/receiver.hpp"
#include "wpr/simulator.hpp"
#include "wpr/small_signal.hpp"
#include "wpr/switched_bode.hpp"
