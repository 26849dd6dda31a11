#pragma once

#include "inflab/analysis.hpp"
#include "inflab/eigen.hpp"
#include "inflab/flow.hpp"
#include "inflab/grid.hpp"
#include "inflab/io.hpp"
#include "inflab/metrics.hpp"
#include "inflab/model.hpp"
#include "inflab/threading.hpp"
#include "inflab/transport.hpp"
