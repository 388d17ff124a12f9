#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace darth::apps {

using Block = std::array<std::uint8_t, 16>;
using Key = std::array<std::uint8_t, 16>;
using RoundKeys = std::array<Block, 11>;

/// Host AES-128 used as the functional oracle of the chip mapping.
namespace aes_ref {

const std::array<std::uint8_t, 256>& sbox();
std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b);
RoundKeys expand_key(const Key& key);
/// In place on one 4-byte column.
void mix_column(std::uint8_t* col);
Block encrypt(const Block& plaintext, const Key& key);

/// 32x32 GF(2) matrix of MixColumns on one column: output bit r*8+b from input bit j*8+p.
std::array<std::array<std::uint8_t, 32>, 32> mix_columns_bit_matrix();

}  // namespace aes_ref

Block parse_block(const std::string& hex);
std::string to_hex(const Block& b);

}  // namespace darth::apps
