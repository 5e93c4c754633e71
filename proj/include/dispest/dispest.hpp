#pragma once

// Convenience header pulling in the whole library.

#include "dispest/fisher.hpp"
#include "dispest/gaussian.hpp"
#include "dispest/loss.hpp"
#include "dispest/montecarlo.hpp"
#include "dispest/protocols.hpp"
#include "dispest/rng.hpp"
#include "dispest/simplex.hpp"
