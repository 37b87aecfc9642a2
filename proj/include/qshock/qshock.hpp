#pragma once

#include "cli.hpp"
#include "config.hpp"
#include "emitters.hpp"
#include "errors.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "mapper.hpp"
#include "observables.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "scenario.hpp"
