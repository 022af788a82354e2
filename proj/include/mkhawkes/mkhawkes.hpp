#pragma once

// Umbrella header for the multi-kernel exponential Hawkes toolkit.

#include "error.hpp"
#include "params.hpp"
#include "event_stream.hpp"
#include "model.hpp"
#include "moments.hpp"
#include "rng.hpp"
#include "simulate.hpp"
#include "likelihood.hpp"
#include "optimize.hpp"
#include "parameterization.hpp"
#include "estimate.hpp"
#include "diagnostics.hpp"
#include "analysis.hpp"
#include "event_csv.hpp"
#include "ingest.hpp"
#include "json_io.hpp"
#include "batch.hpp"
