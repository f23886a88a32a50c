#pragma once

#include "psl/errors.hpp"
#include "psl/normal.hpp"
#include "psl/quadrature.hpp"
#include "psl/density.hpp"
#include "psl/scores.hpp"
#include "psl/analysis.hpp"
#include "psl/io.hpp"
#include "psl/archive.hpp"
