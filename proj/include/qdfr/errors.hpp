// Error types shared across the library. Every failure mode gets its own
// class so callers can catch by category; all derive from qdfr::Error.
#ifndef QDFR_ERRORS_HPP
#define QDFR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qdfr {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- linear algebra ---
struct NotHermitian : Error {
    explicit NotHermitian(const std::string& msg) : Error("NotHermitian: " + msg) {}
};
struct DimensionMismatch : Error {
    explicit DimensionMismatch(const std::string& msg) : Error("DimensionMismatch: " + msg) {}
};

// --- protocol validation ---
struct BetaNonpositive : Error {
    explicit BetaNonpositive(const std::string& msg) : Error("BetaNonpositive: " + msg) {}
};
struct DegenerateSpectrum : Error {
    explicit DegenerateSpectrum(const std::string& msg) : Error("DegenerateSpectrum: " + msg) {}
};
struct ProtocolInvalid : Error {
    explicit ProtocolInvalid(const std::string& msg) : Error("ProtocolInvalid: " + msg) {}
};

// --- exact-PDF bookkeeping ---
struct IndexOutOfRange : Error {
    explicit IndexOutOfRange(const std::string& msg) : Error("IndexOutOfRange: " + msg) {}
};
struct ZeroBranchProbability : Error {
    explicit ZeroBranchProbability(const std::string& msg) : Error("ZeroBranchProbability: " + msg) {}
};
struct UnpairedAtom : Error {
    explicit UnpairedAtom(const std::string& msg) : Error("UnpairedAtom: " + msg) {}
};

// --- circuits ---
struct IncompleteProjectors : Error {
    explicit IncompleteProjectors(const std::string& msg) : Error("IncompleteProjectors: " + msg) {}
};
struct GridMismatch : Error {
    explicit GridMismatch(const std::string& msg) : Error("GridMismatch: " + msg) {}
};

// --- spectral reconstruction ---
struct InfeasibleGrid : Error {
    explicit InfeasibleGrid(const std::string& msg) : Error("InfeasibleGrid: " + msg) {}
};
struct GridTooCoarse : Error {
    explicit GridTooCoarse(const std::string& msg) : Error("GridTooCoarse: " + msg) {}
};
struct OverlappingPeaks : Error {
    explicit OverlappingPeaks(const std::string& msg) : Error("OverlappingPeaks: " + msg) {}
};

// --- fitting ---
struct DegeneratePoints : Error {
    explicit DegeneratePoints(const std::string& msg) : Error("DegeneratePoints: " + msg) {}
};
struct RankDeficient : Error {
    explicit RankDeficient(const std::string& msg) : Error("RankDeficient: " + msg) {}
};

// --- pipeline ---
struct ConfigInvalid : Error {
    explicit ConfigInvalid(const std::string& msg) : Error("ConfigInvalid: " + msg) {}
};
struct MissingArtifact : Error {
    explicit MissingArtifact(const std::string& msg) : Error("MissingArtifact: " + msg) {}
};

} // namespace qdfr

#endif
