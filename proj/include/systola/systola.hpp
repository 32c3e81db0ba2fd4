#pragma once

// Umbrella header.
#include "analysis.hpp"
#include "body.hpp"
#include "capacity.hpp"
#include "certificate.hpp"
#include "critical.hpp"
#include "cz.hpp"
#include "dual_action.hpp"
#include "error.hpp"
#include "fourier.hpp"
#include "frame.hpp"
#include "hamiltonian.hpp"
#include "knots.hpp"
#include "morse.hpp"
#include "reeb.hpp"
#include "validation.hpp"
