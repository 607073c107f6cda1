// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "interdict/aes.hpp"
#include "interdict/attack.hpp"
#include "interdict/block.hpp"
#include "interdict/container.hpp"
#include "interdict/device.hpp"
#include "interdict/flash_image.hpp"
#include "interdict/linear_model.hpp"
#include "interdict/scenario.hpp"
#include "interdict/sha2.hpp"
#include "interdict/tables.hpp"
#include "interdict/trojan.hpp"
#include "interdict/xts.hpp"
