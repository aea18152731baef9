#ifndef ANISO_ANISO_HPP
#define ANISO_ANISO_HPP

#include "aniso/box.hpp"
#include "aniso/cutoff.hpp"
#include "aniso/degiorgi.hpp"
#include "aniso/energy.hpp"
#include "aniso/errors.hpp"
#include "aniso/field_io.hpp"
#include "aniso/fokker_planck.hpp"
#include "aniso/grid.hpp"
#include "aniso/lsc.hpp"
#include "aniso/params.hpp"
#include "aniso/rational.hpp"
#include "aniso/scaling.hpp"
#include "aniso/solver.hpp"

#endif  // ANISO_ANISO_HPP
