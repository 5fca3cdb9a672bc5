#pragma once

// Deterministic discrete-event core. Events are totally ordered by
// (time, class, insertion counter); identical inputs replay identically.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "camnet/cam_codec.hpp"
#include "camnet/channel.hpp"
#include "camnet/error.hpp"
#include "camnet/geo.hpp"
#include "camnet/mac.hpp"
#include "camnet/node.hpp"
#include "camnet/rng.hpp"

namespace camnet {

/// 2018-06-01T00:00:00Z, used when a scenario does not pin its own start.
inline constexpr std::int64_t kDefaultStartUs = 1'527'811'200'000'000;

struct Scenario {
    std::string name = "scenario";
    std::uint64_t seed = 1;
    std::int64_t start_us = kDefaultStartUs;
    std::int64_t duration_us = 60'000'000;
    ChannelParams channel;
    MacParams mac;
    std::size_t payload_bytes = 200;
    double obu_antenna_height_m = 1.5;
    std::vector<NodeConfig> nodes;

    std::int64_t end_us() const noexcept { return start_us + duration_us; }
};

/// Every reason the scenario cannot run; empty when it can.
inline std::vector<std::string> validate(const Scenario& s) {
    std::vector<std::string> v;
    if (s.nodes.empty()) v.push_back("scenario has no nodes");
    if (s.duration_us <= 0) v.push_back("duration must be > 0");
    if (s.payload_bytes < kCamPayloadSize) {
        v.push_back("payload_bytes " + std::to_string(s.payload_bytes) + " is smaller than the CAM payload (" +
                    std::to_string(kCamPayloadSize) + " bytes)");
    }
    for (auto& m : check(s.channel)) v.push_back(std::move(m));
    for (auto& m : check(s.mac)) v.push_back(std::move(m));

    std::set<std::string> ids;
    std::set<MacAddress> macs;
    for (const auto& n : s.nodes) {
        const std::string who = "node '" + n.node_id + "'";
        if (n.node_id.empty()) v.push_back("node with empty node_id");
        if (!ids.insert(n.node_id).second) v.push_back("duplicate node_id '" + n.node_id + "'");
        if (n.nics.empty()) v.push_back(who + " has no NICs");
        bool has_hp = false;
        bool has_lp = false;
        for (const auto& nic : n.nics) {
            if (!macs.insert(nic.mac).second) v.push_back(who + ": duplicate MAC " + nic.mac.to_string());
            if (nic.profile.role != n.kind) {
                v.push_back(who + ": profile " + nic.profile.name + " is for " + std::string(to_string(nic.profile.role)) +
                            " nodes");
            }
            bool& seen = nic.profile.power_class == Nic::HP ? has_hp : has_lp;
            if (seen) v.push_back(who + ": more than one " + std::string(to_string(nic.profile.power_class)) + " NIC");
            seen = true;
        }
        if (n.beacon_period_us <= 0) v.push_back(who + ": beacon period must be > 0");
        if (n.boot_offset_us && *n.boot_offset_us < 0) v.push_back(who + ": boot offset must be >= 0");
        for (auto& m : check(n.jitter)) v.push_back(who + ": " + m);
        if (n.kind == NodeRole::RSU) {
            const auto* site = n.site();
            if (!site) {
                v.push_back(who + ": RSU must have a fixed position");
            } else {
                if (!(site->height_m > 0.0)) v.push_back(who + ": RSU height must be > 0");
                if (!(site->lat >= -90 && site->lat <= 90 && site->lon >= -180 && site->lon <= 180))
                    v.push_back(who + ": position outside WGS84 range");
            }
        } else {
            const auto* tr = n.trace();
            if (!tr) {
                v.push_back(who + ": OBU needs a mobility trace");
            } else if (tr->start_us() > s.start_us || tr->end_us() < s.end_us()) {
                v.push_back(who + ": trace [" + std::to_string(tr->start_us()) + ", " + std::to_string(tr->end_us()) +
                            "] does not cover the simulation window [" + std::to_string(s.start_us) + ", " +
                            std::to_string(s.end_us()) + "]");
            }
        }
    }
    return v;
}

struct NicLog {
    std::string node_id;
    Nic nic = Nic::HP;
    MacAddress mac;
    std::vector<TxLogRecord> tx;
    std::vector<RxLogRecord> rx;

    std::string file_stem() const { return node_id + "_" + std::string(to_string(nic)); }
};

struct ReceptionCounts {
    std::uint64_t opportunities = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost_noise = 0;
    std::uint64_t lost_collision = 0;
};

struct RunSummary {
    std::uint64_t generated = 0;
    std::uint64_t transmitted = 0;
    std::uint64_t queue_dropped = 0;
    ReceptionCounts reception;
    std::uint64_t events = 0;
    double wall_ms = 0.0;
    std::vector<ReceptionCounts> per_nic; // parallel to RunResult::logs
};

/// One frame on air, kept only when RunOptions::record_air is set.
struct AirRecord {
    struct Reception {
        std::size_t nic = 0;
        double power_dbm = 0.0;
        Verdict verdict = Verdict::LostNoise;
    };
    std::size_t nic = 0; // index into RunResult::logs
    std::uint32_t seq_num = 0;
    std::int64_t enqueue_us = 0;
    std::int64_t start_us = 0;
    std::int64_t end_us = 0;
    std::optional<int> backoff_drawn;
    int backoff_counted = 0;
    std::vector<Reception> receptions;
};

/// Engine activity in execution order, kept when RunOptions::record_events is set.
struct EventTraceEntry {
    std::int64_t time_us = 0;
    int cls = 0;
    std::uint64_t id = 0;
    std::uint64_t parent = 0; // id of the event whose handler scheduled this one; 0 for seeds
    std::int64_t parent_time_us = 0;
};

struct RunOptions {
    bool record_air = false;
    bool record_events = false;
};

struct RunResult {
    std::vector<NicLog> logs;
    RunSummary summary;
    std::vector<AirRecord> air;
    std::vector<EventTraceEntry> events;
};

namespace detail {

enum class EventClass : int { Generation = 0, MacSlot = 1, TxStart = 2, TxEnd = 3, RxDecision = 4 };

struct Event {
    std::int64_t time_us;
    EventClass cls;
    std::uint64_t id;
    std::size_t target; // node index (generation), NIC index (mac/tx start), transmission id otherwise
    std::uint64_t token;
    std::uint64_t parent;
    std::int64_t parent_time_us;
};

struct EventLater {
    bool operator()(const Event& a, const Event& b) const noexcept {
        if (a.time_us != b.time_us) return a.time_us > b.time_us;
        if (a.cls != b.cls) return a.cls > b.cls;
        return a.id > b.id;
    }
};

class Simulation {
public:
    Simulation(const Scenario& s, std::uint64_t seed, RunOptions opts)
        : s_(s), opts_(opts), channel_(s.channel), mac_params_(s.mac) {
        channel_.seed = stream_seed(seed, "", "shadowing");
        airtime_ = airtime_us(mac_params_, s.payload_bytes);
        for (std::size_t i = 0; i < s.nodes.size(); ++i) {
            const auto& cfg = s.nodes[i];
            nodes_.push_back({i, NodeState::boot(cfg), Rng(stream_seed(seed, cfg.node_id, "jitter")), {}});
            for (std::size_t k = 0; k < cfg.nics.size(); ++k) {
                const auto& nc = cfg.nics[k];
                const std::string purpose = "backoff-" + std::string(to_string(nc.profile.power_class));
                nics_.push_back(NicRuntime{i, k, MacContention(mac_params_), Rng(stream_seed(seed, cfg.node_id, purpose)), {}, 0, {}, false, 0});
                nodes_.back().nic_index.push_back(nics_.size() - 1);
                result_.logs.push_back({cfg.node_id, nc.profile.power_class, nc.mac, {}, {}});
            }
            Rng boot(stream_seed(seed, cfg.node_id, "boot"));
            const std::int64_t offset = cfg.boot_offset_us ? *cfg.boot_offset_us
                                                           : boot.uniform_int(0, cfg.beacon_period_us - 1);
            push(s.start_us + offset, EventClass::Generation, i, 0);
        }
        result_.summary.per_nic.resize(nics_.size());
    }

    RunResult run() {
        const auto wall0 = std::chrono::steady_clock::now();
        while (!queue_.empty()) {
            const Event ev = queue_.top();
            queue_.pop();
            if (ev.time_us < now_) throw Error("event causality violated");
            now_ = ev.time_us;
            current_ = ev.id;
            ++result_.summary.events;
            if (opts_.record_events) {
                result_.events.push_back({ev.time_us, static_cast<int>(ev.cls), ev.id, ev.parent, ev.parent_time_us});
            }
            switch (ev.cls) {
            case EventClass::Generation: on_generation(ev.target); break;
            case EventClass::MacSlot: on_mac_slot(ev.target, ev.token); break;
            case EventClass::TxStart: on_tx_start(ev.target); break;
            case EventClass::TxEnd: on_tx_end(ev.target); break;
            case EventClass::RxDecision: on_rx_decision(ev.target); break;
            }
            collect_garbage();
        }
        // frames still waiting when the window closes never reach the air
        for (auto& nic : nics_) {
            if (nic.waiting) ++result_.summary.queue_dropped;
            if (nic.pending) ++result_.summary.queue_dropped;
        }
        result_.summary.wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - wall0).count();
        return std::move(result_);
    }

private:
    struct NodeRuntime {
        std::size_t cfg;
        NodeState state;
        Rng jitter_rng;
        std::vector<std::size_t> nic_index;
    };

    struct NicRuntime {
        std::size_t node;
        std::size_t slot; // index within the node's NIC list
        MacContention mac;
        Rng backoff_rng;
        std::optional<CamFrame> waiting; // contending for the medium
        std::int64_t waiting_since = 0;
        std::optional<CamFrame> pending; // arrived while transmitting
        bool transmitting = false;
        int busy = 0; // sensed co-channel transmissions of other nodes
    };

    struct Reach {
        std::size_t nic;
        double power_dbm;
    };

    struct Transmission {
        std::uint64_t id;
        std::size_t nic;
        CamFrame frame;
        std::int64_t start_us;
        std::int64_t end_us;
        std::int64_t enqueue_us;
        std::optional<int> backoff_drawn;
        int backoff_counted;
        std::vector<Reach> reach;
        std::vector<std::uint64_t> overlaps;
        bool decided = false;
    };

    const NodeConfig& cfg_of_nic(std::size_t nic) const { return s_.nodes[nics_[nic].node]; }
    Nic channel_of(std::size_t nic) const { return cfg_of_nic(nic).nics[nics_[nic].slot].profile.power_class; }
    const NicConfig& nic_cfg(std::size_t nic) const { return cfg_of_nic(nic).nics[nics_[nic].slot]; }

    void push(std::int64_t t, EventClass cls, std::size_t target, std::uint64_t token) {
        if (t < now_) throw Error("event scheduled in the past");
        queue_.push({t, cls, ++next_event_id_, target, token, current_, now_});
    }

    void on_generation(std::size_t node_idx) {
        if (now_ >= s_.end_us()) return;
        auto& node = nodes_[node_idx];
        const auto& cfg = s_.nodes[node.cfg];
        const auto frames = generate_cam(cfg, node.state, now_);
        for (std::size_t k = 0; k < frames.size(); ++k) {
            const std::size_t nic = node.nic_index[k];
            result_.logs[nic].tx.push_back(make_tx_record(frames[k]));
            ++result_.summary.generated;
            enqueue(nic, frames[k]);
        }
        const std::int64_t next = next_generation_time(cfg, node.jitter_rng, now_);
        if (next < s_.end_us()) push(next, EventClass::Generation, node_idx, 0);
    }

    void enqueue(std::size_t nic_idx, const CamFrame& frame) {
        auto& nic = nics_[nic_idx];
        if (nic.transmitting) {
            if (nic.pending) ++result_.summary.queue_dropped;
            nic.pending = frame;
            return;
        }
        if (nic.waiting) {
            // drop-oldest: the fresher CAM inherits the contention state
            ++result_.summary.queue_dropped;
            nic.waiting = frame;
            return;
        }
        nic.waiting = frame;
        nic.waiting_since = now_;
        nic.mac.reset_stats();
        if (auto t = nic.mac.enqueue(now_, nic.busy > 0, nic.backoff_rng)) {
            push(t->at_us, EventClass::MacSlot, nic_idx, t->token);
        }
    }

    void on_mac_slot(std::size_t nic_idx, std::uint64_t token) {
        auto& nic = nics_[nic_idx];
        if (!nic.waiting) return;
        if (nic.mac.on_timer({now_, token})) push(now_, EventClass::TxStart, nic_idx, 0);
    }

    double distance_between(std::size_t a_nic, const TraceSample& a, std::size_t b_nic, const TraceSample& b) const {
        auto height = [&](std::size_t nic) {
            const auto* site = cfg_of_nic(nic).site();
            return site ? site->height_m : s_.obu_antenna_height_m;
        };
        const double horiz = distance_m(a.position(), b.position());
        const double dh = height(a_nic) - height(b_nic);
        return std::sqrt(horiz * horiz + dh * dh);
    }

    void on_tx_start(std::size_t nic_idx) {
        auto& nic = nics_[nic_idx];
        const CamFrame frame = *nic.waiting;
        nic.waiting.reset();
        if (now_ + airtime_ > s_.end_us()) {
            ++result_.summary.queue_dropped;
            return;
        }
        ++result_.summary.transmitted;
        Transmission tx{next_tx_id_++, nic_idx, frame, now_, now_ + airtime_, nic.waiting_since,
                        nic.mac.drawn(), nic.mac.slots_counted(), {}, {}, false};

        const auto& txc = nic_cfg(nic_idx);
        const auto tx_pos = node_position(cfg_of_nic(nic_idx), now_);
        const Nic ch = txc.profile.power_class;
        for (std::size_t r = 0; r < nics_.size(); ++r) {
            if (nics_[r].node == nic.node || channel_of(r) != ch) continue;
            const auto rx_pos = node_position(cfg_of_nic(r), now_);
            if (!tx_pos || !rx_pos) continue;
            const auto& rxc = nic_cfg(r);
            const double d = distance_between(nic_idx, *tx_pos, r, *rx_pos);
            if (d > max_range_m(txc.profile, rxc.profile, channel_)) continue;
            const double shadow = shadow_sample_db(
                channel_, {txc.mac.value(), rxc.mac.value(), hash_combine(frame.seq_num, static_cast<std::uint64_t>(frame.timestamp_us))});
            const double p = rx_power_dbm(txc.profile, rxc.profile, std::max(d, 1e-3), channel_, shadow);
            tx.reach.push_back({r, p});
            if (p >= channel_.sensitivity_dbm && ++nics_[r].busy == 1 && nics_[r].waiting) {
                nics_[r].mac.on_busy(now_, nics_[r].backoff_rng);
            }
        }
        auto& active = active_[static_cast<std::size_t>(ch)];
        for (std::uint64_t other : active) {
            tx.overlaps.push_back(other);
            tx_at(other).overlaps.push_back(tx.id);
        }
        active.push_back(tx.id);
        nic.transmitting = true;
        const std::uint64_t id = tx.id;
        push(tx.end_us, EventClass::TxEnd, static_cast<std::size_t>(id), 0);
        txs_.push_back(std::move(tx));
    }

    void on_tx_end(std::size_t id) {
        Transmission& tx = tx_at(id);
        auto& active = active_[static_cast<std::size_t>(channel_of(tx.nic))];
        active.erase(std::find(active.begin(), active.end(), tx.id));
        for (const auto& r : tx.reach) {
            if (r.power_dbm < channel_.sensitivity_dbm) continue;
            auto& rn = nics_[r.nic];
            if (--rn.busy == 0 && rn.waiting) {
                if (auto t = rn.mac.on_idle(now_)) push(t->at_us, EventClass::MacSlot, r.nic, t->token);
            }
        }
        auto& nic = nics_[tx.nic];
        nic.transmitting = false;
        if (nic.pending) {
            const CamFrame next = *nic.pending;
            nic.pending.reset();
            enqueue(tx.nic, next);
        }
        push(now_, EventClass::RxDecision, id, 0);
    }

    void on_rx_decision(std::size_t id) {
        Transmission& tx = tx_at(id);
        AirRecord air;
        if (opts_.record_air) {
            air = {tx.nic, tx.frame.seq_num, tx.enqueue_us, tx.start_us, tx.end_us, tx.backoff_drawn, tx.backoff_counted, {}};
        }
        std::vector<double> interference;
        for (const auto& r : tx.reach) {
            interference.clear();
            bool self_busy = false;
            for (std::uint64_t o : tx.overlaps) {
                const Transmission& other = tx_at(o);
                if (other.nic == r.nic) {
                    self_busy = true; // half duplex
                    break;
                }
                for (const auto& orr : other.reach) {
                    if (orr.nic == r.nic) {
                        interference.push_back(orr.power_dbm);
                        break;
                    }
                }
            }
            const Verdict v = self_busy ? Verdict::LostCollision : deliver(r.power_dbm, interference, channel_);
            count(r.nic, v);
            if (v == Verdict::Delivered) {
                if (auto rec = on_receive(cfg_of_nic(r.nic), tx.frame, now_)) result_.logs[r.nic].rx.push_back(*rec);
            }
            if (opts_.record_air) air.receptions.push_back({r.nic, r.power_dbm, v});
        }
        tx.decided = true;
        if (opts_.record_air) result_.air.push_back(std::move(air));
    }

    void count(std::size_t nic, Verdict v) {
        for (ReceptionCounts* c : {&result_.summary.reception, &result_.summary.per_nic[nic]}) {
            ++c->opportunities;
            switch (v) {
            case Verdict::Delivered: ++c->delivered; break;
            case Verdict::LostNoise: ++c->lost_noise; break;
            case Verdict::LostCollision: ++c->lost_collision; break;
            }
        }
    }

    Transmission& tx_at(std::uint64_t id) { return txs_[static_cast<std::size_t>(id - tx_base_)]; }

    // A transmission can be referenced as an overlap until every frame that
    // started before it ended has been decided, i.e. for one airtime after it ends.
    void collect_garbage() {
        while (!txs_.empty() && txs_.front().decided && txs_.front().end_us + airtime_ < now_) {
            txs_.pop_front();
            ++tx_base_;
        }
    }

    const Scenario& s_;
    RunOptions opts_;
    ChannelParams channel_;
    MacParams mac_params_;
    std::int64_t airtime_ = 0;
    std::vector<NodeRuntime> nodes_;
    std::vector<NicRuntime> nics_;
    std::priority_queue<Event, std::vector<Event>, EventLater> queue_;
    std::uint64_t next_event_id_ = 0;
    std::uint64_t current_ = 0;
    std::int64_t now_ = 0;
    std::deque<Transmission> txs_;
    std::uint64_t tx_base_ = 0;
    std::uint64_t next_tx_id_ = 0;
    std::vector<std::uint64_t> active_[2];
    RunResult result_;
};

} // namespace detail

/// Runs `scenario` to completion under `seed`. Throws ValidationError listing
/// every violation when the scenario is not runnable.
inline RunResult run(const Scenario& scenario, std::uint64_t seed, RunOptions opts = {}) {
    if (auto v = validate(scenario); !v.empty()) throw ValidationError(std::move(v));
    return detail::Simulation(scenario, seed, opts).run();
}

inline RunResult run(const Scenario& scenario, RunOptions opts = {}) {
    return run(scenario, scenario.seed, opts);
}

} // namespace camnet
