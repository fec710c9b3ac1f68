#include "posmac/replay.hpp"

#include <chrono>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>

#include "posmac/errors.hpp"

namespace posmac {

namespace {

// Ordered bounded handoff between the pacing worker and the consuming sink.
class BoundedQueue {
public:
    explicit BoundedQueue(std::size_t capacity) : capacity_(capacity) {}

    void push(const Packet* p) {
        std::unique_lock lock(mu_);
        not_full_.wait(lock, [&] { return q_.size() < capacity_; });
        q_.push_back(p);
        not_empty_.notify_one();
    }

    void close() {
        std::lock_guard lock(mu_);
        closed_ = true;
        not_empty_.notify_all();
    }

    const Packet* pop() {
        std::unique_lock lock(mu_);
        not_empty_.wait(lock, [&] { return !q_.empty() || closed_; });
        if (q_.empty()) return nullptr;
        const Packet* p = q_.front();
        q_.pop_front();
        not_full_.notify_one();
        return p;
    }

private:
    std::mutex mu_;
    std::condition_variable not_full_, not_empty_;
    std::deque<const Packet*> q_;
    std::size_t capacity_;
    bool closed_ = false;
};

}  // namespace

ReplayStats replay(const std::vector<Packet>& packets, double speed_factor,
                   const PacketSink& sink) {
    if (speed_factor < 0) throw Error("replay: speed_factor must be >= 0");
    for (std::size_t i = 1; i < packets.size(); ++i)
        if (packets[i].ts_us < packets[i - 1].ts_us)
            throw UnsortedInput("replay: packets not sorted by ts_us");

    using clock = std::chrono::steady_clock;
    const auto start = clock::now();

    BoundedQueue queue(1024);
    std::thread producer([&] {
        const std::int64_t ts0 = packets.empty() ? 0 : packets.front().ts_us;
        for (const Packet& p : packets) {
            if (speed_factor > 0) {
                const double offset_us = static_cast<double>(p.ts_us - ts0) / speed_factor;
                std::this_thread::sleep_until(
                    start + std::chrono::microseconds(static_cast<std::int64_t>(offset_us)));
            }
            queue.push(&p);
        }
        queue.close();
    });

    ReplayStats stats;
    while (const Packet* p = queue.pop()) {
        sink(*p);
        ++stats.packets_sent;
    }
    producer.join();

    stats.elapsed_s = std::chrono::duration<double>(clock::now() - start).count();
    stats.achieved_pps = stats.elapsed_s > 0 ? static_cast<double>(stats.packets_sent) / stats.elapsed_s : 0.0;
    return stats;
}

}  // namespace posmac
