#pragma once

#include "invmetric/core.hpp"
#include "invmetric/jet.hpp"
#include "invmetric/hermitian.hpp"
#include "invmetric/domain.hpp"
#include "invmetric/quadrature.hpp"
#include "invmetric/bergman.hpp"
#include "invmetric/metrics.hpp"
#include "invmetric/kobayashi.hpp"
#include "invmetric/green.hpp"
#include "invmetric/psh.hpp"
#include "invmetric/normalization.hpp"
#include "invmetric/io.hpp"
#include "invmetric/experiments.hpp"
