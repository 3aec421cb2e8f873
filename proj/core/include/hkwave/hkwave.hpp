#pragma once

#include "hkwave/analysis.hpp"
#include "hkwave/coherent_sum.hpp"
#include "hkwave/dynamics.hpp"
#include "hkwave/grid.hpp"
#include "hkwave/hk_core.hpp"
#include "hkwave/parallel.hpp"
#include "hkwave/phase_space.hpp"
#include "hkwave/reference.hpp"
#include "hkwave/rng.hpp"
#include "hkwave/types.hpp"
