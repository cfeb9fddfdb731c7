#ifndef WSQKD_WSQKD_HPP
#define WSQKD_WSQKD_HPP

#include "netgraph.hpp"
#include "optics.hpp"
#include "pulsesim.hpp"
#include "qkdrate.hpp"
#include "scenario.hpp"
#include "workflows.hpp"
#include "xtalk.hpp"

#endif  // WSQKD_WSQKD_HPP
