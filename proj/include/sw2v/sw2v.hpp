#pragma once

#include "sw2v/error.hpp"
#include "sw2v/rng.hpp"
#include "sw2v/linalg.hpp"
#include "sw2v/affinity.hpp"
#include "sw2v/cooccur.hpp"
#include "sw2v/datasets.hpp"
#include "sw2v/objective.hpp"
#include "sw2v/optimize.hpp"
#include "sw2v/analysis.hpp"
#include "sw2v/io.hpp"
