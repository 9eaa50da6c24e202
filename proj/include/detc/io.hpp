#ifndef DETC_IO_HPP
#define DETC_IO_HPP

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include "detc/hybrid.hpp"

namespace detc {

// Shortest decimal string that round-trips the exact double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline void write_trace_csv(std::ostream& os, const SimResult& r) {
    if (r.trace.empty()) return;
    const auto& first = r.trace.front().state;
    const int nets = static_cast<int>(first.tau_e.size());
    os << "t,j,kind,net,U,blocked";
    for (int i = 0; i < nets; ++i)
        os << ",tau_e." << i << ",k." << i << ",l." << i << ",m." << i << ",chi." << i;
    for (int i = 0; i < first.x.size(); ++i) os << ",x." << i;
    for (int i = 0; i < first.e.size(); ++i) os << ",e." << i;
    os << "\n";
    for (const TraceRecord& tr : r.trace) {
        os << format_double(tr.tj.t) << ',' << tr.tj.j << ',' << event_name(tr.kind) << ','
           << tr.net << ',' << format_double(tr.U) << ',' << (tr.any_blocked ? 1 : 0);
        for (int i = 0; i < nets; ++i)
            os << ',' << format_double(tr.state.tau_e(i)) << ',' << tr.state.k[i] << ','
               << tr.state.l[i] << ',' << tr.state.m[i] << ',' << format_double(tr.state.chi(i));
        for (int i = 0; i < tr.state.x.size(); ++i) os << ',' << format_double(tr.state.x(i));
        for (int i = 0; i < tr.state.e.size(); ++i) os << ',' << format_double(tr.state.e(i));
        os << "\n";
    }
}

inline void write_events_csv(std::ostream& os, const std::vector<EventRecord>& events) {
    os << "net,t,j,kind,k,l,m,tau_e,tau_delay,window_hit\n";
    for (const EventRecord& ev : events) {
        os << ev.net << ',' << format_double(ev.t) << ',' << ev.j << ',' << event_name(ev.kind)
           << ',' << ev.k << ',' << ev.l << ',' << ev.m << ',' << format_double(ev.tau_e) << ','
           << format_double(ev.tau_delay) << ',' << (ev.window_hit ? 1 : 0) << "\n";
    }
}

inline void write_grid_csv(std::ostream& os,
                           const std::vector<std::pair<double, double>>& grid,
                           const char* value_name) {
    os << "t," << value_name << "\n";
    for (const auto& [t, v] : grid) os << format_double(t) << ',' << format_double(v) << "\n";
}

inline void write_summary(std::ostream& os, const SimResult& r) {
    os << "horizon_t = " << format_double(r.final_tj.t) << "\n";
    os << "jumps = " << r.final_tj.j << "\n";
    os << "diverged = " << (r.diverged ? 1 : 0) << "\n";
    if (r.diverged) os << "diverged_at = " << format_double(r.diverged_at) << "\n";
    for (std::size_t i = 0; i < r.tally.size(); ++i) {
        const NetTally& tl = r.tally[i];
        os << "net." << i << ".transmissions = " << tl.transmissions << "\n";
        os << "net." << i << ".successes = " << tl.successes << "\n";
        os << "net." << i << ".failures = " << tl.failures << "\n";
        os << "net." << i << ".logic_flips = " << tl.logic_flips << "\n";
        os << "net." << i << ".min_gap = " << format_double(tl.min_gap) << "\n";
        os << "net." << i << ".attack_pulses = " << r.attacks[i].instants.size() << "\n";
    }
}

} // namespace detc

#endif
