#ifndef THETAFOCK_THETAFOCK_HPP
#define THETAFOCK_THETAFOCK_HPP

#include "core.hpp"
#include "geometry.hpp"
#include "theta.hpp"
#include "space.hpp"
#include "quadrature.hpp"
#include "random.hpp"
#include "verify.hpp"
#include "cli.hpp"

#endif
