#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rhm {

// Just enough unsigned arbitrary-precision arithmetic for exact counting.
// Limbs are base 1e9, least significant first.
class BigUint {
  public:
    BigUint() : limbs_{0} {}
    explicit BigUint(std::uint64_t v) {
        do {
            limbs_.push_back(static_cast<std::uint32_t>(v % kBase));
            v /= kBase;
        } while (v != 0);
    }

    BigUint& operator*=(const BigUint& o) {
        std::vector<std::uint32_t> out(limbs_.size() + o.limbs_.size(), 0);
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            unsigned __int128 carry = 0;
            for (std::size_t j = 0; j < o.limbs_.size(); ++j) {
                unsigned __int128 cur = out[i + j] +
                                        static_cast<unsigned __int128>(limbs_[i]) * o.limbs_[j] +
                                        carry;
                out[i + j] = static_cast<std::uint32_t>(cur % kBase);
                carry = cur / kBase;
            }
            std::size_t k = i + o.limbs_.size();
            while (carry != 0) {
                unsigned __int128 cur = out[k] + carry;
                out[k] = static_cast<std::uint32_t>(cur % kBase);
                carry = cur / kBase;
                ++k;
            }
        }
        while (out.size() > 1 && out.back() == 0) out.pop_back();
        limbs_ = std::move(out);
        return *this;
    }

    std::string to_string() const {
        std::string s = std::to_string(limbs_.back());
        for (std::size_t i = limbs_.size(); i-- > 1;) {
            std::string part = std::to_string(limbs_[i - 1]);
            s += std::string(9 - part.size(), '0') + part;
        }
        return s;
    }

    static BigUint pow(std::uint64_t base, std::uint64_t exp) {
        BigUint result(1);
        BigUint b(base);
        while (exp != 0) {
            if (exp & 1) result *= b;
            b *= b;
            exp >>= 1;
        }
        return result;
    }

  private:
    static constexpr std::uint32_t kBase = 1000000000;
    std::vector<std::uint32_t> limbs_;
};

}  // namespace rhm
