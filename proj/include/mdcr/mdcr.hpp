#pragma once

// Umbrella header for the MDCR toolkit.

#include "mdcr/dataset.hpp"
#include "mdcr/eval.hpp"
#include "mdcr/gradcheck.hpp"
#include "mdcr/matrix_io.hpp"
#include "mdcr/model_io.hpp"
#include "mdcr/objective.hpp"
#include "mdcr/optimizer.hpp"
#include "mdcr/retrieval.hpp"
#include "mdcr/rng.hpp"
#include "mdcr/types.hpp"
#include "mdcr/version.hpp"
