#pragma once

#include <pricopt/conversion.hpp>
#include <pricopt/error.hpp>
#include <pricopt/ga.hpp>
#include <pricopt/market.hpp>
#include <pricopt/objectives.hpp>
#include <pricopt/oracle.hpp>
#include <pricopt/qp.hpp>
#include <pricopt/random.hpp>
#include <pricopt/report.hpp>
#include <pricopt/result.hpp>
#include <pricopt/scenario.hpp>
#include <pricopt/simulator.hpp>
#include <pricopt/sqp.hpp>
