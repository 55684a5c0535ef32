#pragma once

#include "sogl/errors.hpp"
#include "sogl/core.hpp"
#include "sogl/solve_report.hpp"
#include "sogl/admm.hpp"
#include "sogl/dual.hpp"
#include "sogl/bounds.hpp"
#include "sogl/oracle.hpp"
#include "sogl/io.hpp"
