#pragma once

#include "isr/behavior.hpp"
#include "isr/core.hpp"
#include "isr/determination.hpp"
#include "isr/eval.hpp"
#include "isr/matching.hpp"
#include "isr/pipeline.hpp"
