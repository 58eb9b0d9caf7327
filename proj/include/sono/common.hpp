#ifndef SONO_COMMON_HPP
#define SONO_COMMON_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace sono {

// ---------------------------------------------------------------------------
// Errors. Each failure mode the library reports has its own type so callers
// (and the CLI exit-code mapping) can tell them apart.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A marker pair with zero length; the angle is undefined.
struct DegenerateVector : Error { using Error::Error; };

/// An occlusion gap too long (or total) to interpolate across.
struct UnrecoverableOcclusion : Error { using Error::Error; };

/// A queried timestamp falls outside the data span.
struct OutOfRange : Error { using Error::Error; };

/// Invalid configuration values (bad dims, bad splits, unparsable keys).
struct ConfigError : Error { using Error::Error; };

/// Runtime dimension mismatch between data and model.
struct ShapeError : Error { using Error::Error; };

/// Missing, empty or inconsistent input data.
struct DataError : Error { using Error::Error; };

/// Training data containing fewer than two distinct labels.
struct DegenerateLabels : Error { using Error::Error; };

/// A backprop cache that does not match the model it is used with.
struct CacheError : Error { using Error::Error; };

/// A file that is absent or unreadable.
struct IoError : Error { using Error::Error; };

/// A file with the wrong magic, version or layout.
struct FormatError : Error { using Error::Error; };

/// A model bundle violating the class-coverage invariant.
struct BundleError : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Fingers. Thumb data is out of scope; all per-finger arrays use this order.
// ---------------------------------------------------------------------------

enum class Finger : int { Index = 0, Middle = 1, Ring = 2, Pinky = 3 };

inline constexpr int kFingerCount = 4;
inline constexpr std::array<Finger, 4> kFingers{Finger::Index, Finger::Middle,
                                                Finger::Ring, Finger::Pinky};

const char* finger_name(Finger f);

// ---------------------------------------------------------------------------
// Small 3-D vector (millimeters).
// ---------------------------------------------------------------------------

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
};

inline double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

inline bool is_finite(const Vec3& v) {
    return std::isfinite(v.x) && std::isfinite(v.y) && std::isfinite(v.z);
}

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_from_rad(double r) { return r * (180.0 / kPi); }
inline double rad_from_deg(double d) { return d * (kPi / 180.0); }

// ---------------------------------------------------------------------------
// Deterministic RNG. std::mt19937_64 supplies the raw stream; the mappings to
// doubles are spelled out here so generated data is identical across standard
// library implementations.
// ---------------------------------------------------------------------------

/// Stateless mixer for deriving independent stream seeds from one base seed.
uint64_t splitmix64(uint64_t x);

class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(splitmix64(seed)) {}

    uint64_t next_u64();

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01();

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller (one draw per call, pair cached).
    double normal();

    /// Fisher-Yates shuffle of an index vector.
    void shuffle(std::vector<size_t>& idx);

  private:
    uint64_t state_;
    double cached_normal_ = 0.0;
    bool has_cached_ = false;
};

// ---------------------------------------------------------------------------
// Little-endian binary IO helpers for the model/session file formats.
// ---------------------------------------------------------------------------

void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_f64(std::string& out, double v);
void put_f32(std::string& out, float v);

class ByteReader {
  public:
    ByteReader(const std::string& bytes, std::string origin)
        : bytes_(bytes), origin_(std::move(origin)) {}

    uint32_t get_u32();
    uint64_t get_u64();
    double get_f64();
    float get_f32();
    std::string get_bytes(size_t n);
    bool exhausted() const { return pos_ == bytes_.size(); }
    size_t remaining() const { return bytes_.size() - pos_; }

  private:
    void need(size_t n);

    const std::string& bytes_;
    std::string origin_;
    size_t pos_ = 0;
};

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

/// Prints a double with enough digits to round-trip exactly.
std::string format_double(double v);

}  // namespace sono

#endif
