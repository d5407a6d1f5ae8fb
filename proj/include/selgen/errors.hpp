#ifndef SELGEN_ERRORS_HPP
#define SELGEN_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace selgen {

/// Base class for all library errors. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define SELGEN_DEFINE_ERROR(Name)                                  \
    class Name : public Error {                                    \
    public:                                                        \
        explicit Name(const std::string& msg) : Error(msg) {}      \
    }

SELGEN_DEFINE_ERROR(InvalidArgument);
SELGEN_DEFINE_ERROR(EmptyInput);
SELGEN_DEFINE_ERROR(DimensionMismatch);
SELGEN_DEFINE_ERROR(SingularCovariance);
SELGEN_DEFINE_ERROR(NotPositiveDefinite);
SELGEN_DEFINE_ERROR(SideNotConfigured);
SELGEN_DEFINE_ERROR(ZeroVector);
SELGEN_DEFINE_ERROR(KTooLarge);
SELGEN_DEFINE_ERROR(NonFiniteInput);
SELGEN_DEFINE_ERROR(UnderDetermined);
SELGEN_DEFINE_ERROR(SingularDesign);
SELGEN_DEFINE_ERROR(MissingFeature);
SELGEN_DEFINE_ERROR(LengthMismatch);
SELGEN_DEFINE_ERROR(DegenerateInput);
SELGEN_DEFINE_ERROR(EmptyAfterRemoval);
SELGEN_DEFINE_ERROR(SingleSegment);
SELGEN_DEFINE_ERROR(MissingVariant);
SELGEN_DEFINE_ERROR(EmptyDocument);
SELGEN_DEFINE_ERROR(BadMagic);
SELGEN_DEFINE_ERROR(UnsupportedVersion);
SELGEN_DEFINE_ERROR(DtypeMismatch);
SELGEN_DEFINE_ERROR(SchemaMismatch);
SELGEN_DEFINE_ERROR(VersionUnsupported);
SELGEN_DEFINE_ERROR(BadCov);
SELGEN_DEFINE_ERROR(IoError);

#undef SELGEN_DEFINE_ERROR

/// Truncated binary payload; remembers where the file ended.
class TruncatedPayload : public Error {
public:
    TruncatedPayload(const std::string& msg, std::size_t offset)
        : Error(msg + " (at byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::size_t byte_offset;
};

/// Metadata line errors carry the 1-based line number.
class LineError : public Error {
public:
    LineError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

class LineCountMismatch : public Error {
public:
    explicit LineCountMismatch(const std::string& msg) : Error(msg) {}
};

class DuplicateId : public LineError {
public:
    DuplicateId(const std::string& msg, std::size_t line) : LineError(msg, line) {}
};

class MalformedLine : public LineError {
public:
    MalformedLine(const std::string& msg, std::size_t line) : LineError(msg, line) {}
};

}  // namespace selgen

#endif
