#pragma once

#include "phaselin/baselines.hpp"
#include "phaselin/errors.hpp"
#include "phaselin/estimator.hpp"
#include "phaselin/field.hpp"
#include "phaselin/harness.hpp"
#include "phaselin/io.hpp"
#include "phaselin/iterative.hpp"
#include "phaselin/linalg.hpp"
#include "phaselin/metrics.hpp"
#include "phaselin/model.hpp"
#include "phaselin/parallel.hpp"
#include "phaselin/random.hpp"
#include "phaselin/spectral.hpp"
