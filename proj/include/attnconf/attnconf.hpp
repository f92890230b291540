#pragma once

#include "attnconf/error.hpp"
#include "attnconf/eval.hpp"
#include "attnconf/filter.hpp"
#include "attnconf/hybrid.hpp"
#include "attnconf/matrix.hpp"
#include "attnconf/metrics.hpp"
#include "attnconf/parallel.hpp"
#include "attnconf/records.hpp"
#include "attnconf/render.hpp"
