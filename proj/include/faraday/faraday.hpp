#pragma once

#include "faraday/amplitude.hpp"
#include "faraday/constants.hpp"
#include "faraday/dynamics.hpp"
#include "faraday/errors.hpp"
#include "faraday/fock.hpp"
#include "faraday/model.hpp"
#include "faraday/model_io.hpp"
#include "faraday/perturbation.hpp"
#include "faraday/scan.hpp"
