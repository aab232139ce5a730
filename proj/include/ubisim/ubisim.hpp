#pragma once

#include "ubisim/clustering.hpp"
#include "ubisim/detection.hpp"
#include "ubisim/error.hpp"
#include "ubisim/kernel.hpp"
#include "ubisim/metrics.hpp"
#include "ubisim/model.hpp"
#include "ubisim/reconfig.hpp"
#include "ubisim/report.hpp"
#include "ubisim/repro.hpp"
#include "ubisim/runlog.hpp"
#include "ubisim/scenario.hpp"
#include "ubisim/simulation.hpp"
