#pragma once

#include "nldiff/analysis.hpp"
#include "nldiff/app.hpp"
#include "nldiff/config.hpp"
#include "nldiff/errors.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/image.hpp"
#include "nldiff/kernels.hpp"
#include "nldiff/nonlocal_operator.hpp"
#include "nldiff/random.hpp"
#include "nldiff/stepper.hpp"
