#pragma once

// Umbrella header.

#include "rrlsa/analytics.hpp"
#include "rrlsa/chain.hpp"
#include "rrlsa/errors.hpp"
#include "rrlsa/expansion.hpp"
#include "rrlsa/harness.hpp"
#include "rrlsa/linalg.hpp"
#include "rrlsa/lsa.hpp"
#include "rrlsa/model.hpp"
#include "rrlsa/parallel.hpp"
#include "rrlsa/rng.hpp"
#include "rrlsa/stats.hpp"
