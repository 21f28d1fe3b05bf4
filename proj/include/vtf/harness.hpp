#pragma once

#include "vtf/harness/config.hpp"
#include "vtf/harness/evaluate.hpp"
#include "vtf/harness/train.hpp"
