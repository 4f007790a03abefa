#pragma once

#include <string>
#include <vector>

#include "sors/mdp.hpp"

namespace sors {

/// Parsed contents of an MDP spec text file.
struct MdpFile {
    MdpSpec spec;
    std::vector<double> r1; ///< [s * num_actions + a], zero-filled by default
    std::vector<double> r2;
    bool has_r1 = false;
    bool has_r2 = false;

    RewardFn reward1() const;
    RewardFn reward2() const;
};

/// Line-oriented format:
///   states N actions M gamma G
///   T s a s'        (deterministic transition; duplicates for one (s,a) with
///                    different successors are rejected as nondeterministic)
///   terminal s
///   R1 s a v
///   R2 s a v
/// Blank lines and '#' comments are ignored. Terminal states absorb; their T
/// lines may be omitted. Every non-terminal (s, a) must have a T line.
/// Throws ConfigError (with line numbers) on malformed input and
/// UnsupportedError on nondeterministic dynamics.
MdpFile load_mdp_file(const std::string& path);
MdpFile parse_mdp_text(const std::string& text, const std::string& origin);

} // namespace sors
