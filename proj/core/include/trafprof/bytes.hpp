#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace trafprof {

/// Bounds-checked cursor over a byte span. A read past the end returns zero,
/// consumes nothing and latches `failed()`; callers check once at the end of
/// a parse instead of after every field.
class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> data, bool big_endian = true)
        : data_{data}, big_endian_{big_endian} {}

    std::size_t remaining() const { return failed_ ? 0 : data_.size() - pos_; }
    std::size_t position() const { return pos_; }
    bool failed() const { return failed_; }
    void set_big_endian(bool be) { big_endian_ = be; }

    std::uint8_t u8() { return static_cast<std::uint8_t>(read_uint(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(read_uint(2)); }
    std::uint32_t u24() { return static_cast<std::uint32_t>(read_uint(3)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(read_uint(4)); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (!take(n)) return {};
        return data_.subspan(pos_ - n, n);
    }

    bool skip(std::size_t n) { return take(n); }

    bool seek(std::size_t pos) {
        if (failed_ || pos > data_.size()) {
            failed_ = true;
            return false;
        }
        pos_ = pos;
        return true;
    }

    /// Reader over the next n bytes; this reader advances past them.
    ByteReader sub(std::size_t n) {
        auto s = bytes(n);
        ByteReader r{s, big_endian_};
        if (failed_) r.failed_ = true;
        return r;
    }

private:
    bool take(std::size_t n) {
        if (failed_ || n > data_.size() - pos_) {
            failed_ = true;
            return false;
        }
        pos_ += n;
        return true;
    }

    std::uint64_t read_uint(std::size_t n) {
        if (!take(n)) return 0;
        std::uint64_t v = 0;
        const std::uint8_t* p = data_.data() + pos_ - n;
        if (big_endian_) {
            for (std::size_t i = 0; i < n; ++i) v = (v << 8) | p[i];
        } else {
            for (std::size_t i = n; i-- > 0;) v = (v << 8) | p[i];
        }
        return v;
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    bool big_endian_ = true;
    bool failed_ = false;
};

/// Appending big-endian writer.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u24(std::uint32_t v) { put(v, 3); }
    void u32(std::uint32_t v) { put(v, 4); }
    void bytes(std::span<const std::uint8_t> b) { out_.insert(out_.end(), b.begin(), b.end()); }
    void text(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }

    /// Overwrites a previously written big-endian field of `n` bytes at `pos`.
    void patch(std::size_t pos, std::uint32_t v, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) out_[pos + i] = static_cast<std::uint8_t>(v >> (8 * (n - 1 - i)));
    }

    std::size_t size() const { return out_.size(); }
    std::vector<std::uint8_t>& data() { return out_; }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint32_t v, std::size_t n) {
        for (std::size_t i = n; i-- > 0;) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }

    std::vector<std::uint8_t> out_;
};

}  // namespace trafprof
