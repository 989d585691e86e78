#ifndef AMBIMAX_AMBIMAX_HPP
#define AMBIMAX_AMBIMAX_HPP

#include "ambimax/error.hpp"
#include "ambimax/stats.hpp"
#include "ambimax/utility.hpp"
#include "ambimax/scenario.hpp"
#include "ambimax/ambiguity.hpp"
#include "ambimax/oracle.hpp"
#include "ambimax/roots.hpp"
#include "ambimax/demand.hpp"
#include "ambimax/csv.hpp"
#include "ambimax/seeker.hpp"
#include "ambimax/parallel.hpp"
#include "ambimax/premium.hpp"
#include "ambimax/equilibrium.hpp"
#include "ambimax/scan.hpp"
#include "ambimax/curve.hpp"

#endif
