#pragma once

#include "crowdauction/money.hpp"
#include "crowdauction/valuefn.hpp"
#include "crowdauction/auction.hpp"
#include "crowdauction/oms.hpp"
#include "crowdauction/budget_feasible.hpp"
#include "crowdauction/sos.hpp"
#include "crowdauction/scenario.hpp"
#include "crowdauction/baseline.hpp"
#include "crowdauction/verify.hpp"
