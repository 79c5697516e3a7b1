#pragma once

#include "netfun/decompose.hpp"
#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/extensions.hpp"
#include "netfun/io.hpp"
#include "netfun/lp.hpp"
#include "netfun/network.hpp"
#include "netfun/oracle.hpp"
#include "netfun/primal_dual.hpp"
#include "netfun/protocol.hpp"
#include "netfun/rational.hpp"
#include "netfun/simplex.hpp"
#include "netfun/tree.hpp"
