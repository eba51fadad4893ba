#pragma once

#include "contlog/bracket.hpp"
#include "contlog/connective.hpp"
#include "contlog/formula.hpp"
#include "contlog/signature.hpp"
#include "contlog/modulus.hpp"
#include "contlog/structure.hpp"
#include "contlog/evaluator.hpp"
#include "contlog/parser.hpp"
#include "contlog/metric_group.hpp"
#include "contlog/rtree.hpp"
#include "contlog/hilbert.hpp"
#include "contlog/action.hpp"
#include "contlog/schemes.hpp"
#include "contlog/analysis.hpp"
#include "contlog/io.hpp"
