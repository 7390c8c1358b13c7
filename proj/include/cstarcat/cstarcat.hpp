#ifndef CSTARCAT_CSTARCAT_HPP
#define CSTARCAT_CSTARCAT_HPP

#include "numc.hpp"
#include "report.hpp"
#include "category.hpp"
#include "hull.hpp"
#include "multiplier.hpp"
#include "modules.hpp"
#include "bimodules.hpp"
#include "generators.hpp"

#endif
