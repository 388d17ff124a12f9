#include "darth/apps/aes_reference.hpp"

#include "darth/errors.hpp"

namespace darth::apps {

namespace aes_ref {

const std::array<std::uint8_t, 256>& sbox() {
    static const std::array<std::uint8_t, 256> table = {
        0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
        0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
        0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
        0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
        0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
        0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
        0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
        0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
        0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
        0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
        0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
        0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
        0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
        0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
        0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
        0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
    };
    return table;
}

std::uint8_t gf_mul(std::uint8_t a, std::uint8_t b) {
    std::uint8_t p = 0;
    while (b) {
        if (b & 1) p ^= a;
        a = static_cast<std::uint8_t>((a << 1) ^ ((a & 0x80) ? 0x1b : 0));
        b >>= 1;
    }
    return p;
}

RoundKeys expand_key(const Key& key) {
    std::array<std::uint8_t, 176> w{};
    std::copy(key.begin(), key.end(), w.begin());
    std::uint8_t rcon = 1;
    for (int i = 16; i < 176; i += 4) {
        std::uint8_t t[4] = {w[i - 4], w[i - 3], w[i - 2], w[i - 1]};
        if (i % 16 == 0) {
            const std::uint8_t first = t[0];
            t[0] = static_cast<std::uint8_t>(sbox()[t[1]] ^ rcon);
            t[1] = sbox()[t[2]];
            t[2] = sbox()[t[3]];
            t[3] = sbox()[first];
            rcon = gf_mul(rcon, 2);
        }
        for (int j = 0; j < 4; ++j) w[i + j] = w[i - 16 + j] ^ t[j];
    }
    RoundKeys rk{};
    for (int r = 0; r < 11; ++r) std::copy(w.begin() + 16 * r, w.begin() + 16 * r + 16, rk[r].begin());
    return rk;
}

void mix_column(std::uint8_t* c) {
    const std::uint8_t a0 = c[0], a1 = c[1], a2 = c[2], a3 = c[3];
    c[0] = gf_mul(a0, 2) ^ gf_mul(a1, 3) ^ a2 ^ a3;
    c[1] = a0 ^ gf_mul(a1, 2) ^ gf_mul(a2, 3) ^ a3;
    c[2] = a0 ^ a1 ^ gf_mul(a2, 2) ^ gf_mul(a3, 3);
    c[3] = gf_mul(a0, 3) ^ a1 ^ a2 ^ gf_mul(a3, 2);
}

Block encrypt(const Block& plaintext, const Key& key) {
    const RoundKeys rk = expand_key(key);
    Block s = plaintext;
    for (int i = 0; i < 16; ++i) s[i] ^= rk[0][i];
    for (int round = 1; round <= 10; ++round) {
        for (auto& b : s) b = sbox()[b];
        // Byte i sits at row i % 4, column i / 4.
        Block t = s;
        for (int r = 1; r < 4; ++r) {
            for (int c = 0; c < 4; ++c) t[4 * c + r] = s[4 * ((c + r) % 4) + r];
        }
        s = t;
        if (round != 10) {
            for (int c = 0; c < 4; ++c) mix_column(&s[4 * c]);
        }
        for (int i = 0; i < 16; ++i) s[i] ^= rk[round][i];
    }
    return s;
}

std::array<std::array<std::uint8_t, 32>, 32> mix_columns_bit_matrix() {
    std::array<std::array<std::uint8_t, 32>, 32> m{};
    for (int j = 0; j < 4; ++j) {
        for (int p = 0; p < 8; ++p) {
            std::uint8_t col[4] = {0, 0, 0, 0};
            col[j] = static_cast<std::uint8_t>(1u << p);
            mix_column(col);
            for (int r = 0; r < 4; ++r) {
                for (int b = 0; b < 8; ++b) m[r * 8 + b][j * 8 + p] = (col[r] >> b) & 1u;
            }
        }
    }
    return m;
}

}  // namespace aes_ref

Block parse_block(const std::string& hex) {
    if (hex.size() != 32) throw ConfigError("expected 32 hex digits, got " + std::to_string(hex.size()));
    Block b{};
    for (int i = 0; i < 16; ++i) {
        try {
            std::size_t used = 0;
            b[i] = static_cast<std::uint8_t>(std::stoul(hex.substr(2 * i, 2), &used, 16));
            if (used != 2) throw std::invalid_argument(hex);
        } catch (const std::exception&) {
            throw ConfigError("invalid hex block '" + hex + "'");
        }
    }
    return b;
}

std::string to_hex(const Block& b) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (auto v : b) {
        s += digits[v >> 4];
        s += digits[v & 15];
    }
    return s;
}

}  // namespace darth::apps
