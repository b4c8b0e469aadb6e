#pragma once

#include "pcinfluence/analysis.hpp"
#include "pcinfluence/data_io.hpp"
#include "pcinfluence/dataset.hpp"
#include "pcinfluence/error.hpp"
#include "pcinfluence/influence_functions.hpp"
#include "pcinfluence/influence_measures.hpp"
#include "pcinfluence/sample_influence.hpp"
#include "pcinfluence/spectral.hpp"
