#pragma once

#include "rtt/config_gen.hpp"
#include "rtt/dkf.hpp"
#include "rtt/formation.hpp"
#include "rtt/network.hpp"
#include "rtt/report.hpp"
#include "rtt/scenario.hpp"
#include "rtt/sensing.hpp"
#include "rtt/target_model.hpp"
