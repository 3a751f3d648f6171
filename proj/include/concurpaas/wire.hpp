#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <concurpaas/errors.hpp>

// Fixed-width little-endian field codec for event payloads and message
// bodies. Encoding is part of the deterministic surface: identical values
// must always produce identical bytes.
namespace concurpaas::wire {

class Writer {
  public:
    void u8(std::uint8_t v) { buf_.push_back(static_cast<std::byte>(v)); }

    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i)
            buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
    }

    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i)
            buf_.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xff));
    }

    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void str(const std::string &s) {
        u32(static_cast<std::uint32_t>(s.size()));
        for (char c : s)
            buf_.push_back(static_cast<std::byte>(c));
    }

    std::vector<std::byte> take() { return std::move(buf_); }

  private:
    std::vector<std::byte> buf_;
};

class Reader {
  public:
    explicit Reader(const std::vector<std::byte> &buf) : buf_(buf) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(next_()); }

    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(next_()) << (8 * i);
        return v;
    }

    std::uint64_t u64() {
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(next_()) << (8 * i);
        return v;
    }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str() {
        const std::uint32_t n = u32();
        if (pos_ + n > buf_.size())
            throw Error("wire: truncated string field");
        std::string s;
        s.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i)
            s.push_back(static_cast<char>(next_()));
        return s;
    }

    bool done() const { return pos_ == buf_.size(); }

  private:
    std::uint8_t next_() {
        if (pos_ >= buf_.size())
            throw Error("wire: read past end of payload");
        return static_cast<std::uint8_t>(buf_[pos_++]);
    }

    const std::vector<std::byte> &buf_;
    std::size_t pos_ = 0;
};

} // namespace concurpaas::wire
