#pragma once

#include "ecc/avar.hpp"
#include "ecc/debias.hpp"
#include "ecc/dgp.hpp"
#include "ecc/errors.hpp"
#include "ecc/harness.hpp"
#include "ecc/mp_law.hpp"
#include "ecc/parallel.hpp"
#include "ecc/pboot.hpp"
#include "ecc/ridge.hpp"
#include "ecc/rng.hpp"
