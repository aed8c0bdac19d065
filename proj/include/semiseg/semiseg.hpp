#pragma once

#include "semiseg/core.hpp"
#include "semiseg/data_io.hpp"
#include "semiseg/framewise.hpp"
#include "semiseg/learning.hpp"
#include "semiseg/metrics.hpp"
#include "semiseg/segmental.hpp"
#include "semiseg/svd.hpp"
