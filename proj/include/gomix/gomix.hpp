#pragma once

#include "gomix/engine_parallel.hpp"
#include "gomix/engine_serial.hpp"
#include "gomix/graybox.hpp"
#include "gomix/ims.hpp"
#include "gomix/linkage.hpp"
#include "gomix/maxcut.hpp"
#include "gomix/model.hpp"
#include "gomix/parallel_backend.hpp"
#include "gomix/rng.hpp"
#include "gomix/run.hpp"
#include "gomix/runtime.hpp"
#include "gomix/scheduling.hpp"
#include "gomix/trace_io.hpp"

