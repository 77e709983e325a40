#pragma once

#include "errors.hpp"
#include "field.hpp"
#include "flow.hpp"
#include "geometry.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "levelset.hpp"
#include "model.hpp"
#include "oracle.hpp"
#include "parallel.hpp"
#include "path_density.hpp"
#include "random.hpp"
#include "svg.hpp"
