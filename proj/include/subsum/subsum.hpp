#pragma once

#include "subsum/errors.hpp"
#include "subsum/io.hpp"
#include "subsum/marginal.hpp"
#include "subsum/sharpness.hpp"
#include "subsum/specmat.hpp"
#include "subsum/subspaces.hpp"
#include "subsum/sumproj.hpp"
#include "subsum/tensorpow.hpp"
#include "subsum/types.hpp"
