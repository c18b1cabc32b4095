#pragma once

#include "oztal/classification.hpp"
#include "oztal/config.hpp"
#include "oztal/error.hpp"
#include "oztal/evaluation.hpp"
#include "oztal/io.hpp"
#include "oztal/linalg.hpp"
#include "oztal/memory.hpp"
#include "oztal/parallel.hpp"
#include "oztal/span.hpp"
#include "oztal/stream.hpp"
#include "oztal/synth.hpp"
#include "oztal/types.hpp"
