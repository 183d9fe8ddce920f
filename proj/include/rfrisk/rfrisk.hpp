#pragma once

#include "rfrisk/activation.hpp"
#include "rfrisk/errors.hpp"
#include "rfrisk/polynomial.hpp"
#include "rfrisk/risk.hpp"
#include "rfrisk/rng.hpp"
#include "rfrisk/simulator.hpp"
#include "rfrisk/stieltjes.hpp"
#include "rfrisk/table.hpp"
#include "rfrisk/training.hpp"
