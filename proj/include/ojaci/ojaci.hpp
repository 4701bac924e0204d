#pragma once

#include "asymvar.hpp"
#include "bootstrap.hpp"
#include "core.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "hoeffding.hpp"
#include "inference.hpp"
#include "io.hpp"
#include "oja.hpp"
#include "parallel.hpp"
#include "random.hpp"
#include "serialize.hpp"
#include "synth.hpp"
#include "varest.hpp"
#include "version.hpp"
