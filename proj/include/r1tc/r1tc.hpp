#pragma once

#include "r1tc/harness.hpp"
#include "r1tc/higher_order.hpp"
