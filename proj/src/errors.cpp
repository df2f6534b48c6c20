#include "querc/errors.hpp"

namespace querc {

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

DivergenceError::DivergenceError(std::size_t epoch, std::size_t step, double loss)
    : Error("non-finite loss " + std::to_string(loss) + " at epoch " + std::to_string(epoch) +
            ", step " + std::to_string(step)) {}

}  // namespace querc
