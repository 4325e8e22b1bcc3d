#pragma once

#include "bhlab/astlo.hpp"
#include "bhlab/common.hpp"
#include "bhlab/config.hpp"
#include "bhlab/diagnostics.hpp"
#include "bhlab/dynamics.hpp"
#include "bhlab/experiments.hpp"
#include "bhlab/fock.hpp"
#include "bhlab/lattice.hpp"
#include "bhlab/linalg.hpp"
#include "bhlab/operators.hpp"
#include "bhlab/states.hpp"
#include "bhlab/verify.hpp"
