#pragma once

// Umbrella header: eigenspectra, tunneling spectroscopy, thermal states, and
// entanglement certification for small transverse-field Ising systems.

#include "qaspect/bipartition.hpp"
#include "qaspect/constants.hpp"
#include "qaspect/entangle.hpp"
#include "qaspect/errors.hpp"
#include "qaspect/hamiltonian.hpp"
#include "qaspect/instance.hpp"
#include "qaspect/io.hpp"
#include "qaspect/parallel.hpp"
#include "qaspect/peakfit.hpp"
#include "qaspect/qts.hpp"
#include "qaspect/schedule.hpp"
#include "qaspect/sdp.hpp"
#include "qaspect/spectrum.hpp"
#include "qaspect/states.hpp"
#include "qaspect/thermal.hpp"
#include "qaspect/witness.hpp"
