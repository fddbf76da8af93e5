#ifndef RBST_RBST_HPP
#define RBST_RBST_HPP

#include "block_store.hpp"
#include "metrics.hpp"
#include "oracle.hpp"
#include "tree.hpp"
#include "update.hpp"
#include "verify.hpp"

#endif  // RBST_RBST_HPP
