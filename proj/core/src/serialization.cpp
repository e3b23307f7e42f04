#include <bit>
#include <cstring>
#include <stdexcept>

#include <fmt/format.h>

#include "idxf/csv.hpp"
#include "idxf/errors.hpp"
#include "idxf/forecast.hpp"

namespace idxf {

namespace {

constexpr char kMagic[4] = {'I', 'D', 'X', 'F'};

template <typename T>
void put_le(std::string& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i)
        out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFFu));
}

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get_le()
    {
        if (pos_ + sizeof(T) > bytes_.size())
            throw ParseError("model file truncated");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return static_cast<T>(v);
    }

    std::string_view take(std::size_t n)
    {
        if (pos_ + n > bytes_.size())
            throw ParseError("model file truncated");
        const auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_model(const Model& model)
{
    const auto& s = model.shape();
    std::string out(kMagic, sizeof(kMagic));
    put_le<std::uint16_t>(out, kModelFormatVersion);
    put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.arch));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.hidden));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.features));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kernels));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.kernel_width));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.pool));
    const auto& p = model.parameters();
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i)
        put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(p(i)));
    return out;
}

Model deserialize_model(std::string_view bytes)
{
    Reader in(bytes);
    if (in.take(4) != std::string_view(kMagic, 4))
        throw ParseError("not a model file (bad magic)");
    const auto version = in.get_le<std::uint16_t>();
    if (version != kModelFormatVersion)
        throw ParseError(fmt::format("unsupported model format version {}", version));
    const auto arch = in.get_le<std::uint16_t>();
    if (arch > 1)
        throw ParseError(fmt::format("unknown architecture code {}", arch));
    ModelShape s;
    s.arch = static_cast<Architecture>(arch);
    s.hidden = static_cast<int>(in.get_le<std::uint32_t>());
    s.features = static_cast<int>(in.get_le<std::uint32_t>());
    s.kernels = static_cast<int>(in.get_le<std::uint32_t>());
    s.kernel_width = static_cast<int>(in.get_le<std::uint32_t>());
    s.pool = static_cast<int>(in.get_le<std::uint32_t>());
    s.validate();
    const auto count = in.get_le<std::uint64_t>();
    if (count != s.parameter_count())
        throw ParseError(fmt::format("model header declares {} parameters, shape needs {}", count, s.parameter_count()));
    Eigen::VectorXd p(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p(i) = std::bit_cast<double>(in.get_le<std::uint64_t>());
    if (!in.done())
        throw ParseError("trailing bytes after model parameters");
    return Model(s, std::move(p));
}

void save_model(const std::filesystem::path& path, const Model& model)
{
    csv::write_atomic(path, serialize_model(model));
}

Model load_model(const std::filesystem::path& path) { return deserialize_model(csv::read_file(path)); }

} // namespace idxf
