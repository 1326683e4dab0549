#ifndef DDAM_TRAFFIC_HPP
#define DDAM_TRAFFIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ddam/common.hpp"
#include "ddam/protocols.hpp"
#include "ddam/rng.hpp"

namespace ddam {

// Access-point traffic on a 10-minute grid.
inline constexpr std::int64_t kTrafficGridSeconds = 600;
inline constexpr int kSamplesPerHour = 6;

struct TrafficRecord {
    std::string ap_id;
    std::int64_t timestamp = 0;  // seconds, multiple of 600
    double volume = 0.0;
};

// CSV schema: header "i,j,delay" for graphs, "ap_id,timestamp,volume" here.
inline void save_traffic(const std::vector<TrafficRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << "ap_id,timestamp,volume\n";
    for (const auto& r : records)
        out << r.ap_id << ',' << r.timestamp << ',' << format_double(r.volume) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline std::vector<TrafficRecord> load_traffic(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open traffic csv: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty traffic csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "ap_id,timestamp,volume")
        throw IoError(path + ":1: expected header 'ap_id,timestamp,volume'");
    std::vector<TrafficRecord> records;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ss(line);
        TrafficRecord r;
        std::string ts, vol;
        if (!std::getline(ss, r.ap_id, ',') || !std::getline(ss, ts, ',') ||
            !std::getline(ss, vol))
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
        try {
            size_t pos = 0;
            r.timestamp = std::stoll(ts, &pos);
            if (pos != ts.size()) throw std::invalid_argument("trailing");
            r.volume = std::stod(vol, &pos);
            if (pos != vol.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw IoError(path + ":" + std::to_string(line_no) + ": malformed row");
        }
        if (r.timestamp % kTrafficGridSeconds != 0)
            throw IoError(path + ":" + std::to_string(line_no) +
                          ": timestamp not on the 10-minute grid");
        if (!std::isfinite(r.volume) || r.volume < 0.0)
            throw IoError(path + ":" + std::to_string(line_no) + ": bad volume");
        records.push_back(std::move(r));
    }
    return records;
}

// Transformer-style sinusoidal embedding: dimension i carries frequency
// 10000^(-2 floor(i/2) / d), cosine on even indices, sine on odd.
inline Vec sinusoidal_embedding(double pos, int d) {
    Vec e(d);
    for (int i = 0; i < d; ++i) {
        const double freq = std::pow(10000.0, -2.0 * std::floor(i / 2.0) / d);
        e(i) = (i % 2 == 0) ? std::cos(pos * freq) : std::sin(pos * freq);
    }
    return e;
}

struct EmbedConfig {
    int d_ap = 24;    // AP identity embedding size
    int d_time = 10;  // hour-of-day embedding size
};

// AP identity: one-hot of the agent index (padded/truncated to d_ap) summed
// with the sinusoidal embedding of that index.
inline Vec ap_embedding(int agent, const EmbedConfig& cfg) {
    Vec e = sinusoidal_embedding(static_cast<double>(agent), cfg.d_ap);
    if (agent >= 0 && agent < cfg.d_ap) e(agent) += 1.0;
    return e;
}

inline Vec time_embedding(long hour_of_day, const EmbedConfig& cfg) {
    return sinusoidal_embedding(static_cast<double>(hour_of_day), cfg.d_time);
}

// Hourly key/value construction: v aggregates the six log(1+volume) samples
// of the hour, k = [ap embedding ; hour-of-day embedding], d_k = d_ap+d_time.
inline StreamSet build_kv(const std::vector<TrafficRecord>& records, const EmbedConfig& cfg = {}) {
    if (records.empty()) throw DataError("build_kv: no records");
    std::map<std::string, std::map<std::int64_t, double>> by_ap;
    std::int64_t ts_min = records.front().timestamp;
    std::int64_t ts_max = records.front().timestamp;
    for (const auto& r : records) {
        auto [it, fresh] = by_ap[r.ap_id].insert({r.timestamp, r.volume});
        (void)it;
        if (!fresh)
            throw DataError("build_kv: duplicate sample for " + r.ap_id + " at " +
                            std::to_string(r.timestamp));
        ts_min = std::min(ts_min, r.timestamp);
        ts_max = std::max(ts_max, r.timestamp);
    }
    // Align to full hours.
    const std::int64_t hour0 = ts_min / 3600;
    const std::int64_t hour1 = ts_max / 3600;
    const long n_hours = static_cast<long>(hour1 - hour0 + 1);
    std::vector<std::vector<KeyValuePair>> data;
    data.reserve(by_ap.size());
    int agent = 0;
    for (auto& [ap, samples] : by_ap) {
        std::vector<KeyValuePair> seq;
        seq.reserve(static_cast<size_t>(n_hours));
        std::string gaps;
        int gap_count = 0;
        for (long h = 0; h < n_hours; ++h) {
            Vec v(kSamplesPerHour);
            for (int s = 0; s < kSamplesPerHour; ++s) {
                const std::int64_t ts = (hour0 + h) * 3600 + s * kTrafficGridSeconds;
                auto it = samples.find(ts);
                if (it == samples.end()) {
                    if (gap_count < 8) gaps += " " + std::to_string(ts);
                    ++gap_count;
                    continue;
                }
                v(s) = std::log1p(it->second);
            }
            if (gap_count) continue;
            KeyValuePair kv;
            kv.agent = agent;
            kv.time = h + 1;
            const long hour_of_day = static_cast<long>((hour0 + h) % 24);
            Vec k(cfg.d_ap + cfg.d_time);
            k.head(cfg.d_ap) = ap_embedding(agent, cfg);
            k.tail(cfg.d_time) = time_embedding(hour_of_day, cfg);
            kv.key = std::move(k);
            kv.value = std::move(v);
            seq.push_back(std::move(kv));
        }
        if (gap_count)
            throw DataError("build_kv: " + ap + " misses " + std::to_string(gap_count) +
                            " grid samples:" + gaps);
        data.push_back(std::move(seq));
        ++agent;
    }
    const size_t T = data.front().size();
    for (const auto& seq : data)
        if (seq.size() != T) throw DataError("build_kv: APs cover different hour ranges");
    return StreamSet(std::move(data));
}

// Synthetic stand-in for the proprietary enterprise dataset: per-AP diurnal
// sinusoid whose stochastic (lognormal) component is scaled by a weekly
// modulation. With noise_sigma = 0 the series repeats exactly day over day.
struct PeriodicParams {
    double base_low = 5.0;
    double base_high = 50.0;
    double diurnal_amp = 0.8;  // relative swing of the daily profile
    double noise_sigma = 0.3;
    double weekly_amp = 0.25;  // weekday modulation of the noise scale
};

inline std::vector<TrafficRecord> gen_periodic_traffic(int n_aps, int days, std::uint64_t seed,
                                                       const PeriodicParams& p = {}) {
    if (n_aps < 1 || days < 1) throw ConfigError("periodic traffic: need n_aps >= 1, days >= 1");
    std::vector<TrafficRecord> records;
    records.reserve(static_cast<size_t>(n_aps) * static_cast<size_t>(days) * 144);
    for (int a = 0; a < n_aps; ++a) {
        Rng ap_rng = Rng::keyed(seed, {fnv1a64("periodic_ap"), static_cast<std::uint64_t>(a)});
        const double base = ap_rng.uniform(p.base_low, p.base_high);
        const double peak_hour = ap_rng.uniform(8.0, 20.0);
        char name[16];
        std::snprintf(name, sizeof(name), "ap%03d", a);
        for (int day = 0; day < days; ++day) {
            for (int slot = 0; slot < 144; ++slot) {
                const double tod = slot / 6.0;  // hours
                const double profile =
                    base * (1.0 + p.diurnal_amp *
                                      std::sin(2.0 * std::numbers::pi * (tod - peak_hour) / 24.0));
                const int dow = day % 7;
                const double sigma =
                    p.noise_sigma *
                    (1.0 + p.weekly_amp * std::sin(2.0 * std::numbers::pi * dow / 7.0));
                Rng r = Rng::keyed(seed, {fnv1a64("periodic"), static_cast<std::uint64_t>(a),
                                          static_cast<std::uint64_t>(day) * 144 +
                                              static_cast<std::uint64_t>(slot)});
                const double noise = sigma == 0.0 ? 1.0 : std::exp(sigma * r.normal());
                TrafficRecord rec;
                rec.ap_id = name;
                rec.timestamp =
                    (static_cast<std::int64_t>(day) * 144 + slot) * kTrafficGridSeconds;
                rec.volume = profile * noise;
                records.push_back(std::move(rec));
            }
        }
    }
    return records;
}

}  // namespace ddam

#endif
