#pragma once

#include "evfuse/common.hpp"
#include "evfuse/config.hpp"
#include "evfuse/detect.hpp"
#include "evfuse/enhance.hpp"
#include "evfuse/eval.hpp"
#include "evfuse/events.hpp"
#include "evfuse/fusion.hpp"
#include "evfuse/fusion_sim.hpp"
#include "evfuse/json_io.hpp"
#include "evfuse/pipeline.hpp"
#include "evfuse/voxelize.hpp"
