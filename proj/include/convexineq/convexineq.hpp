#ifndef CONVEXINEQ_CONVEXINEQ_HPP
#define CONVEXINEQ_CONVEXINEQ_HPP

#include "convexineq/errors.hpp"
#include "convexineq/fields.hpp"
#include "convexineq/functionals.hpp"
#include "convexineq/generator.hpp"
#include "convexineq/inequality_checks.hpp"
#include "convexineq/integrate.hpp"
#include "convexineq/phi_functions.hpp"
#include "convexineq/pointwise_calculus.hpp"
#include "convexineq/potentials.hpp"

#endif  // CONVEXINEQ_CONVEXINEQ_HPP
