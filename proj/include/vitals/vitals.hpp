#pragma once

#include "vitals/error.hpp"
#include "vitals/trace.hpp"
#include "vitals/filter.hpp"
#include "vitals/numeric.hpp"
#include "vitals/peaks.hpp"
#include "vitals/ppg.hpp"
#include "vitals/bp.hpp"
#include "vitals/pneumo.hpp"
#include "vitals/synth.hpp"
#include "vitals/stats.hpp"
#include "vitals/io.hpp"
#include "vitals/config.hpp"
#include "vitals/scenario.hpp"
#include "vitals/svg.hpp"
