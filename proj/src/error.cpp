#include "cftm/error.hpp"

#include "cftm/random.hpp"

namespace cftm {

const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::usage: return "usage_error";
        case ErrorCode::domain: return "domain_error";
        case ErrorCode::numerical: return "numerical_error";
        case ErrorCode::precondition: return "precondition_error";
        case ErrorCode::parse: return "parse_error";
        case ErrorCode::io: return "io_error";
        case ErrorCode::mismatch: return "mismatch_error";
    }
    return "error";
}

Seed derive_seed(Seed seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace cftm
