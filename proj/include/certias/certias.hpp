#pragma once

#include "certias/analysis.hpp"
#include "certias/certifier.hpp"
#include "certias/errors.hpp"
#include "certias/geometry.hpp"
#include "certias/io.hpp"
#include "certias/lp.hpp"
#include "certias/lpp.hpp"
#include "certias/mpqp.hpp"
#include "certias/solver.hpp"
#include "certias/validation.hpp"
