#pragma once

// Umbrella header: the whole pipeline in one include.

#include "ihards/adam.hpp"
#include "ihards/arch.hpp"
#include "ihards/benchmark.hpp"
#include "ihards/checkpoint.hpp"
#include "ihards/correlation.hpp"
#include "ihards/errors.hpp"
#include "ihards/frame.hpp"
#include "ihards/ihds.hpp"
#include "ihards/ingest.hpp"
#include "ihards/integrate.hpp"
#include "ihards/labelmap.hpp"
#include "ihards/layers.hpp"
#include "ihards/loss.hpp"
#include "ihards/manifest.hpp"
#include "ihards/metrics.hpp"
#include "ihards/network.hpp"
#include "ihards/pipeline.hpp"
#include "ihards/rng.hpp"
#include "ihards/tensor.hpp"
#include "ihards/train.hpp"
