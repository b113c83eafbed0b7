// SPDX-License-Identifier: Apache-2.0
//
// Convenience umbrella: the whole simulation library in one include.
#pragma once

#include "omniwpt/allocation.hpp"
#include "omniwpt/arraydesign.hpp"
#include "omniwpt/circuit.hpp"
#include "omniwpt/common.hpp"
#include "omniwpt/controlloop.hpp"
#include "omniwpt/echo.hpp"
#include "omniwpt/magnetics.hpp"
#include "omniwpt/paspectrum.hpp"
#include "omniwpt/scenario.hpp"
#include "omniwpt/sweeps.hpp"
