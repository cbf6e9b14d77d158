#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace dualtake {

enum class DomainTag { Car, MicroMobility };

enum class Aggressiveness { Aggressive, Defensive };

struct Condition {
    Aggressiveness aggressiveness = Aggressiveness::Defensive;
    bool proactive = false;
};

// The eleven recorded modalities, in canonical file order.
enum class Modality {
    Gsr,        // microsiemens
    Hr,         // bpm
    GazeX,      // normalized 0-1
    GazeY,      // normalized 0-1
    GazeObject, // object class id (0-13)
    Steering,   // degrees
    Vx,         // m/s
    Vy,         // m/s
    OmegaZ,     // rad/s
    Throttle,   // 0-1
    Brake       // 0-1
};

inline constexpr int kModalityCount = 11;

const char* modality_name(Modality m);
Modality modality_from_name(const std::string& name);

// One timestamped sample. NaN value encodes a recorded signal gap (null);
// downstream feature windows are guaranteed NaN-free.
struct Sample {
    double t = 0.0;
    double value = 0.0;
};

bool is_null(double value);
double null_value();

struct ModalityStream {
    Modality modality = Modality::Gsr;
    std::vector<Sample> samples;
};

struct Session {
    int participant_id = 0;
    DomainTag domain = DomainTag::Car;
    Condition condition;
    double duration = 0.0;  // seconds
    std::uint64_t seed = 0;
    std::vector<ModalityStream> streams;  // one per modality

    const ModalityStream* find_stream(Modality m) const;
};

// Minimum session length: one 10 s window plus the 3 s label horizon.
inline constexpr double kMinSessionDuration = 13.0;

// Returns one message per violated invariant; empty means valid.
std::vector<std::string> validate_session(const Session& s);

// ---------------------------------------------------------------------------
// Feature layout: the canonical 52-slot vector.
//   0-4   GSR    mean/std/min/max/scr_count
//   5-9   HR     mean/std/min/max/hrv
//   10-17 gaze   x mean/std/min/max, y mean/std/min/max
//   18    entropy_region
//   19-32 p_objects (14 classes)
//   33    entropy_object
//   34-37 steering mean/std/min/max
//   38-49 vx, vy, omega_z mean/std/min/max each
//   50    aggressiveness
//   51    proactive
// ---------------------------------------------------------------------------

inline constexpr int kFeatureCount = 52;
inline constexpr int kObjectClassCount = 14;
inline constexpr int kGazeRegionCount = 9;

inline constexpr int kPObjectsFirst = 19;
inline constexpr int kPObjectsLast = 32;
inline constexpr int kEntropyRegionIndex = 18;
inline constexpr int kEntropyObjectIndex = 33;
inline constexpr int kAggressivenessIndex = 50;
inline constexpr int kProactiveIndex = 51;

struct FeatureSlot {
    std::string name;
    int index = 0;
    std::string unit;
};

// The fixed layout, index order. Also the dataset column order.
const std::array<FeatureSlot, kFeatureCount>& feature_layout();

// Name -> index. Throws std::invalid_argument on unknown names.
int feature_index(const std::string& name);

// Object class ids, stable 0-13.
const std::array<std::string, kObjectClassCount>& object_taxonomy();
int object_class_id(const std::string& name);

struct FeatureWindow {
    std::array<double, kFeatureCount> features{};
    bool label = false;
    int participant_id = 0;
    DomainTag domain = DomainTag::Car;
    Condition condition;
    double window_start = 0.0;  // seconds from session start
};

std::vector<std::string> validate_feature_window(const FeatureWindow& w);

const char* domain_name(DomainTag d);
DomainTag domain_from_name(const std::string& name);
const char* aggressiveness_name(Aggressiveness a);
Aggressiveness aggressiveness_from_name(const std::string& name);

}  // namespace dualtake
