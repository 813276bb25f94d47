#pragma once

#include "trustgate/common.hpp"
#include "trustgate/utf8.hpp"
#include "trustgate/trust.hpp"
#include "trustgate/policy.hpp"
#include "trustgate/sensitivity.hpp"
#include "trustgate/behavior.hpp"
#include "trustgate/disclosure.hpp"
#include "trustgate/audit.hpp"
#include "trustgate/backend.hpp"
#include "trustgate/config.hpp"
#include "trustgate/gateway.hpp"
#include "trustgate/server.hpp"
#include "trustgate/admin.hpp"
