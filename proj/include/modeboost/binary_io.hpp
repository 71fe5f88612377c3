#pragma once

#include "modeboost/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

namespace modeboost::binary {

/// Appends little-endian fixed-width values regardless of host order.
class Writer {
public:
    void bytes(std::string_view s) { buf_.append(s); }

    template <typename T>
        requires std::is_integral_v<T>
    void integer(T value) {
        using U = std::make_unsigned_t<T>;
        auto u = static_cast<U>(value);
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            buf_.push_back(static_cast<char>(u & 0xFF));
            if constexpr (sizeof(T) > 1) u = static_cast<U>(u >> 8);
        }
    }

    void f64(double v) { integer(std::bit_cast<std::uint64_t>(v)); }

    void string(std::string_view s) {
        integer(static_cast<std::uint32_t>(s.size()));
        buf_.append(s);
    }

    const std::string& data() const { return buf_; }
    std::string take() { return std::move(buf_); }

private:
    std::string buf_;
};

/// Bounds-checked reader; any overrun throws CorruptFile.
class Reader {
public:
    explicit Reader(std::string_view data) : data_(data) {}

    std::string_view bytes(std::size_t n) {
        need(n);
        auto out = data_.substr(pos_, n);
        pos_ += n;
        return out;
    }

    template <typename T>
        requires std::is_integral_v<T>
    T integer() {
        need(sizeof(T));
        using U = std::make_unsigned_t<T>;
        U u = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            u = static_cast<U>(u | (static_cast<U>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i)));
        }
        pos_ += sizeof(T);
        return static_cast<T>(u);
    }

    double f64() { return std::bit_cast<double>(integer<std::uint64_t>()); }

    std::string string() {
        const auto n = integer<std::uint32_t>();
        return std::string(bytes(n));
    }

    std::size_t remaining() const { return data_.size() - pos_; }
    bool done() const { return pos_ == data_.size(); }

private:
    void need(std::size_t n) const {
        if (n > data_.size() - pos_) throw Error(ErrorCode::CorruptFile, "unexpected end of data");
    }

    std::string_view data_;
    std::size_t pos_ = 0;
};

}  // namespace modeboost::binary
