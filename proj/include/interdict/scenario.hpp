// Copyright interdict contributors.
// Licensed under the Apache License, Version 2.0, see LICENSE for details.
// SPDX-License-Identifier: Apache-2.0

#pragma once

// End-to-end orchestration: seeded provisioning (so separate processes can
// re-derive the same HSM keys), victim activity scripts, and small file
// helpers shared by the CLI and the tests.
//
// Script grammar, one command per line, '#' starts a comment:
//
//   AUTH <password>
//   WRITE <start-sector> random:<bytes>
//   WRITE <start-sector> <path>
//   READ <start-sector> <n-sectors>

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "interdict/block.hpp"
#include "interdict/device.hpp"
#include "interdict/flash_image.hpp"

namespace interdict {

struct ScenarioConfig {
  std::uint64_t seed = 1;
  std::string password = "correct horse";
  std::uint64_t initial_tweak = kDefaultInitialTweak;
};

// The HSM hands the controller its XTS keys at provisioning time; they are
// the first 64 bytes of the seeded stream, ahead of all image content draws.
inline XtsKeys derive_hsm_keys(std::mt19937_64 &rng) {
  XtsKeys keys;
  fill_random(rng, keys.k1);
  fill_random(rng, keys.k2);
  return keys;
}

inline XtsKeys derive_hsm_keys(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return derive_hsm_keys(rng);
}

struct Provisioned {
  FlashImage image;
  XtsKeys keys;
  std::vector<TableInstance> table_instances;
};

inline Provisioned provision_device(const ScenarioConfig &cfg) {
  std::mt19937_64 rng(cfg.seed);
  Provisioned out;
  out.keys = derive_hsm_keys(rng);
  ImageConfig icfg;
  icfg.password = cfg.password;
  icfg.initial_tweak = cfg.initial_tweak;
  BuiltImage built = build_image(icfg, rng);
  out.image = std::move(built.image);
  out.table_instances = std::move(built.table_instances);
  return out;
}

struct ScriptCommand {
  enum class Op { Auth, Write, Read };
  Op op = Op::Auth;
  std::string password;         // Auth
  SectorNumber start = 0;       // Write/Read
  std::size_t random_bytes = 0; // Write random:<N>
  std::string path;             // Write <path>
  std::size_t count = 0;        // Read
};

inline std::vector<ScriptCommand> parse_victim_script(std::string_view text) {
  std::vector<ScriptCommand> cmds;
  std::istringstream stream{std::string(text)};
  std::string line;
  int lineno = 0;
  auto bad = [&lineno](const std::string &msg) {
    throw std::invalid_argument("script line " + std::to_string(lineno) + ": " + msg);
  };
  while (std::getline(stream, line)) {
    ++lineno;
    if (auto pos = line.find('#'); pos != std::string::npos) {
      line.erase(pos);
    }
    std::istringstream ls(line);
    std::string verb;
    if (!(ls >> verb)) {
      continue;
    }
    ScriptCommand cmd;
    if (verb == "AUTH") {
      cmd.op = ScriptCommand::Op::Auth;
      std::string rest;
      std::getline(ls, rest);
      std::size_t first = rest.find_first_not_of(" \t");
      if (first == std::string::npos) {
        bad("AUTH needs a password");
      }
      std::size_t last = rest.find_last_not_of(" \t\r");
      cmd.password = rest.substr(first, last - first + 1);
    } else if (verb == "WRITE") {
      cmd.op = ScriptCommand::Op::Write;
      std::string src;
      if (!(ls >> cmd.start >> src)) {
        bad("WRITE needs a start sector and a data source");
      }
      if (src.rfind("random:", 0) == 0) {
        cmd.random_bytes = std::stoull(src.substr(7));
        if (cmd.random_bytes == 0 || cmd.random_bytes % kSectorSize != 0) {
          bad("random byte count must be a positive multiple of 512");
        }
      } else {
        cmd.path = src;
      }
    } else if (verb == "READ") {
      cmd.op = ScriptCommand::Op::Read;
      if (!(ls >> cmd.start >> cmd.count)) {
        bad("READ needs a start sector and a sector count");
      }
    } else {
      bad("unknown verb " + verb);
    }
    cmds.push_back(std::move(cmd));
  }
  return cmds;
}

inline std::vector<std::uint8_t> read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open " + path);
  }
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  return data;
}

inline void write_file_atomic(const std::string &path, std::span<const std::uint8_t> data) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp + " for writing");
    }
    out.write(reinterpret_cast<const char *>(data.data()),
              static_cast<std::streamsize>(data.size()));
    if (!out) {
      throw std::runtime_error("short write to " + tmp);
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("cannot rename " + tmp + " to " + path);
  }
}

struct SessionLog {
  std::vector<std::string> lines;

  std::string to_text() const {
    std::string out;
    for (const auto &l : lines) {
      out += l;
      out += '\n';
    }
    return out;
  }
};

// Runs the script against a booted device. Data for WRITE random: comes from
// the given engine; WRITE <path> loads the file relative to the working
// directory. Stops with an error if the device leaves the usable phases.
inline SessionLog run_victim_script(Device &dev, std::span<const ScriptCommand> cmds,
                                    std::mt19937_64 &data_rng) {
  SessionLog log;
  for (const auto &cmd : cmds) {
    switch (cmd.op) {
      case ScriptCommand::Op::Auth: {
        AuthResult r = dev.authenticate(cmd.password);
        switch (r) {
          case AuthResult::Unlocked:
            log.lines.push_back("AUTH ok");
            break;
          case AuthResult::WrongPassword:
            log.lines.push_back("AUTH wrong-password attempts=" +
                                std::to_string(dev.attempt_counter()));
            break;
          case AuthResult::Wiped:
            log.lines.push_back("AUTH wiped");
            break;
          case AuthResult::ChannelFailure:
            log.lines.push_back("AUTH channel-failure");
            throw std::runtime_error("device reported an AES channel failure");
        }
        break;
      }
      case ScriptCommand::Op::Write: {
        std::vector<std::uint8_t> data;
        if (!cmd.path.empty()) {
          data = read_file(cmd.path);
          if (data.size() % kSectorSize != 0) {
            data.resize((data.size() / kSectorSize + 1) * kSectorSize, 0);
          }
        } else {
          data = random_bytes(data_rng, cmd.random_bytes);
        }
        dev.write_data(cmd.start, data);
        log.lines.push_back("WRITE start=" + std::to_string(cmd.start) +
                            " sectors=" + std::to_string(data.size() / kSectorSize));
        break;
      }
      case ScriptCommand::Op::Read: {
        std::vector<std::uint8_t> data = dev.read_data(cmd.start, cmd.count);
        log.lines.push_back("READ start=" + std::to_string(cmd.start) +
                            " sectors=" + std::to_string(cmd.count));
        break;
      }
    }
  }
  return log;
}

}  // namespace interdict
