#include "ergo/error.hpp"

namespace ergo {

const char* to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::Format: return "format error";
        case ErrorKind::Sequence: return "sequence error";
        case ErrorKind::Lookup: return "lookup error";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::InsufficientData: return "insufficient-data error";
        case ErrorKind::Ordering: return "ordering error";
        case ErrorKind::Alignment: return "alignment error";
        case ErrorKind::Grid: return "grid error";
        case ErrorKind::DegenerateGeometry: return "degenerate-geometry error";
        case ErrorKind::DegenerateInput: return "degenerate-input error";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::State: return "state error";
        case ErrorKind::Diverged: return "simulation-diverged error";
        case ErrorKind::Plot: return "plot error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

}  // namespace ergo
