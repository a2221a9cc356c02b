#pragma once

#include "qtoc/errors.hpp"
#include "qtoc/linalg.hpp"
#include "qtoc/model.hpp"
#include "qtoc/protocol.hpp"
#include "qtoc/dynamics.hpp"
#include "qtoc/optim.hpp"
#include "qtoc/pmp.hpp"
#include "qtoc/state_prep.hpp"
#include "qtoc/xgate.hpp"
#include "qtoc/smoothing.hpp"
#include "qtoc/io.hpp"
