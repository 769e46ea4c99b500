#pragma once

#include <cstdint>
#include <vector>

#include "fhelab/ckks.hpp"

namespace fhelab {

// Binary container, all integers little-endian:
//   "FHLB" | u32 version | u32 kind | u64 param hash | payload
// RnsPoly payload: u32 limbs | u32 n | u8 rep | limbs x u64 moduli | limb-major u64 residues
// Doubles are stored as their IEEE-754 bit pattern in a u64.
inline constexpr std::uint32_t kFormatVersion = 1;

enum class BlobKind : std::uint32_t { params = 1, ciphertext = 2, switching_key = 3, compressed_key = 4 };

using Bytes = std::vector<std::uint8_t>;

Bytes serialize_params(const CkksParams& p);
CkksParams deserialize_params(const Bytes& b);

Bytes serialize_ciphertext(const Ciphertext& c, const CkksParams& p);
Ciphertext deserialize_ciphertext(const Bytes& b, const Context& ctx);

Bytes serialize_key(const SwitchingKey& k, const CkksParams& p);
SwitchingKey deserialize_key(const Bytes& b, const Context& ctx);

Bytes serialize_key(const CompressedSwitchingKey& k, const CkksParams& p);
CompressedSwitchingKey deserialize_compressed_key(const Bytes& b, const Context& ctx);

}  // namespace fhelab
