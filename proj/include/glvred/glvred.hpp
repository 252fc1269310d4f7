#pragma once

#include "glvred/errors.hpp"
#include "glvred/integrate.hpp"
#include "glvred/io.hpp"
#include "glvred/model.hpp"
#include "glvred/reducibility.hpp"
#include "glvred/reduction_algebraic.hpp"
#include "glvred/reduction_memory.hpp"
#include "glvred/verify.hpp"
