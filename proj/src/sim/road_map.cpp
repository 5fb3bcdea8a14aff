#include "matsg/sim/road_map.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "matsg/core/error.hpp"
#include "matsg/dsl/scenario.hpp"

namespace matsg::sim {

namespace {

constexpr double kLaneWidth = 3.5;
constexpr double kBoxHalf = 7.0;
constexpr double kArmLength = 30.0;
constexpr double kMarkingHalfWidth = 0.25;

// Exact quarter turn counter-clockwise.
Vec2 quarter_turn(Vec2 p, int k) {
    for (int i = 0; i < ((k % 4) + 4) % 4; ++i) p = {-p.y, p.x};
    return p;
}

std::vector<Vec2> arc(Vec2 c, double r, double a0, double a1) {
    const double len = std::abs(a1 - a0) * r;
    const int n = std::max(2, static_cast<int>(std::ceil(len / 0.5)));
    std::vector<Vec2> pts;
    for (int i = 0; i <= n; ++i) {
        const double a = a0 + (a1 - a0) * i / n;
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    return pts;
}

std::vector<Vec2> rotate_all(const std::vector<Vec2>& pts, int k) {
    std::vector<Vec2> out;
    out.reserve(pts.size());
    for (auto p : pts) out.push_back(quarter_turn(p, k));
    return out;
}

std::string_view lane_kind_name(LaneKind k) {
    switch (k) {
        case LaneKind::inbound: return "inbound";
        case LaneKind::outbound: return "outbound";
        case LaneKind::connector: return "connector";
    }
    return "?";
}

}  // namespace

std::string_view maneuver_name(Maneuver m) {
    switch (m) {
        case Maneuver::straight: return "straight";
        case Maneuver::left: return "left";
        case Maneuver::right: return "right";
    }
    return "?";
}

std::optional<Maneuver> maneuver_from_name(std::string_view s) {
    if (s == "straight") return Maneuver::straight;
    if (s == "left") return Maneuver::left;
    if (s == "right") return Maneuver::right;
    return std::nullopt;
}

const Lane* RoadMap::find_lane(std::string_view lane_id) const {
    for (const auto& l : lanes)
        if (l.id == lane_id) return &l;
    return nullptr;
}

std::optional<std::size_t> RoadMap::route_index(std::string_view approach, Maneuver m) const {
    for (std::size_t i = 0; i < routes.size(); ++i)
        if (routes[i].approach == approach && routes[i].maneuver == m) return i;
    return std::nullopt;
}

std::vector<std::string> RoadMap::approaches() const {
    std::vector<std::string> out;
    for (const auto& r : routes)
        if (std::find(out.begin(), out.end(), r.approach) == out.end()) out.push_back(r.approach);
    return out;
}

std::string RoadMap::slot_approach(std::size_t slot) const {
    const auto& lane = spawn_slots.at(slot).lane;
    for (const auto& r : routes)
        if (!r.lanes.empty() && r.lanes.front() == lane) return r.approach;
    throw Error("spawn slot on lane '" + lane + "' starts no route");
}

std::pair<Vec2, double> RoadMap::slot_pose(std::size_t slot) const {
    const auto& s = spawn_slots.at(slot);
    const Lane* lane = find_lane(s.lane);
    return {lane->centerline.point_at(s.offset), lane->centerline.heading_at(s.offset)};
}

LightState RoadMap::light(std::string_view inbound_lane, double time, double cycle_offset) const {
    for (const auto& head : signals) {
        if (head.lane != inbound_lane) continue;
        const double cycle = timing.cycle();
        double t = std::fmod(time + cycle_offset + head.offset, cycle);
        if (t < 0) t += cycle;
        if (t < timing.green) return LightState::green;
        if (t < timing.green + timing.amber) return LightState::amber;
        return LightState::red;
    }
    return LightState::green;  // unsignalized
}

bool RoadMap::in_box(Vec2 p) const {
    if (box.size() < 3) return false;
    for (std::size_t i = 0; i < box.size(); ++i) {
        const Vec2 a = box[i], b = box[(i + 1) % box.size()];
        if ((b - a).cross(p - a) < 0.0) return false;
    }
    return true;
}

const std::vector<RoadMap::SegmentRef>* RoadMap::bucket(Vec2 p) const {
    const int ix = static_cast<int>(std::floor((p.x - lo_.x) / bucket_size_));
    const int iy = static_cast<int>(std::floor((p.y - lo_.y) / bucket_size_));
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) return nullptr;
    return &buckets_[static_cast<std::size_t>(iy) * nx_ + ix];
}

bool RoadMap::drivable(Vec2 p) const {
    if (in_box(p)) return true;
    const auto* b = bucket(p);
    if (!b) return false;
    for (const auto& ref : *b) {
        const Lane& lane = lanes[ref.lane];
        const auto& pts = lane.centerline.points();
        if (segment_distance(p, pts[ref.segment], pts[ref.segment + 1]) <= lane.width / 2.0) return true;
    }
    return false;
}

bool RoadMap::lane_marking(Vec2 p) const {
    if (in_box(p)) return false;
    const auto* b = bucket(p);
    if (!b) return false;
    for (const auto& ref : *b) {
        const Lane& lane = lanes[ref.lane];
        if (lane.kind == LaneKind::connector) continue;
        const auto& pts = lane.centerline.points();
        const Vec2 a = pts[ref.segment], c = pts[ref.segment + 1];
        const Vec2 ac = c - a;
        const double len2 = ac.dot(ac);
        if (len2 <= 0.0) continue;
        const double t = (p - a).dot(ac) / len2;
        if (t < 0.0 || t > 1.0) continue;
        const double d = std::abs(ac.cross(p - a)) / std::sqrt(len2);
        if (std::abs(d - lane.width / 2.0) <= kMarkingHalfWidth) return true;
    }
    return false;
}

void RoadMap::finalize() {
    if (lanes.empty()) throw Error("map '" + id + "' has no lanes");
    for (std::size_t i = 0; i < lanes.size(); ++i)
        for (std::size_t j = i + 1; j < lanes.size(); ++j)
            if (lanes[i].id == lanes[j].id) throw Error("duplicate lane id '" + lanes[i].id + "'");

    for (auto& r : routes) {
        if (r.lanes.empty()) throw Error("route '" + r.name + "' has no lanes");
        std::vector<Vec2> pts;
        for (std::size_t k = 0; k < r.lanes.size(); ++k) {
            const Lane* lane = find_lane(r.lanes[k]);
            if (!lane) throw Error("route '" + r.name + "' references unknown lane '" + r.lanes[k] + "'");
            const auto& lp = lane->centerline.points();
            if (k == 0) {
                r.stop_line_s = lane->centerline.length();
                pts = lp;
            } else {
                if ((pts.back() - lp.front()).norm() > 1e-6)
                    throw Error("route '" + r.name + "' is not lane-connected at '" + r.lanes[k] + "'");
                pts.insert(pts.end(), lp.begin() + 1, lp.end());
            }
        }
        r.path = Polyline(std::move(pts));
    }
    for (const auto& s : spawn_slots) {
        const Lane* lane = find_lane(s.lane);
        if (!lane) throw Error("spawn slot on unknown lane '" + s.lane + "'");
        if (s.offset < 0.0 || s.offset > lane->centerline.length())
            throw Error("spawn slot offset outside lane '" + s.lane + "'");
    }
    for (const auto& h : signals)
        if (!find_lane(h.lane)) throw Error("signal on unknown lane '" + h.lane + "'");

    lo_ = {1e300, 1e300};
    hi_ = {-1e300, -1e300};
    for (const auto& l : lanes)
        for (auto p : l.centerline.points()) {
            lo_ = {std::min(lo_.x, p.x - l.width), std::min(lo_.y, p.y - l.width)};
            hi_ = {std::max(hi_.x, p.x + l.width), std::max(hi_.y, p.y + l.width)};
        }
    nx_ = static_cast<int>(std::ceil((hi_.x - lo_.x) / bucket_size_)) + 1;
    ny_ = static_cast<int>(std::ceil((hi_.y - lo_.y) / bucket_size_)) + 1;
    buckets_.assign(static_cast<std::size_t>(nx_) * ny_, {});
    for (std::uint32_t li = 0; li < lanes.size(); ++li) {
        const auto& pts = lanes[li].centerline.points();
        const double pad = lanes[li].width / 2.0 + kMarkingHalfWidth + 1e-6;
        for (std::uint32_t si = 0; si + 1 < pts.size(); ++si) {
            const double x0 = std::min(pts[si].x, pts[si + 1].x) - pad, x1 = std::max(pts[si].x, pts[si + 1].x) + pad;
            const double y0 = std::min(pts[si].y, pts[si + 1].y) - pad, y1 = std::max(pts[si].y, pts[si + 1].y) + pad;
            const int ix0 = std::max(0, static_cast<int>(std::floor((x0 - lo_.x) / bucket_size_)));
            const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((x1 - lo_.x) / bucket_size_)));
            const int iy0 = std::max(0, static_cast<int>(std::floor((y0 - lo_.y) / bucket_size_)));
            const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((y1 - lo_.y) / bucket_size_)));
            for (int iy = iy0; iy <= iy1; ++iy)
                for (int ix = ix0; ix <= ix1; ++ix)
                    buckets_[static_cast<std::size_t>(iy) * nx_ + ix].push_back({li, si});
        }
    }
}

RoadMap make_fourway() {
    RoadMap m;
    m.id = "fourway";
    const double c = kLaneWidth / 2.0;
    const double h = kBoxHalf;
    const double far = h + kArmLength;
    const char* approach[4] = {"S", "E", "N", "W"};  // where traffic comes from
    const char* travel[4] = {"N", "W", "S", "E"};    // direction of travel on entry

    // Template for traffic entering from the south, rotated in exact quarter turns.
    const std::vector<Vec2> in_t = {{c, -far}, {c, -h}};
    const std::vector<Vec2> out_t = {{c, h}, {c, far}};  // northbound exit
    const std::vector<Vec2> straight_t = {{c, -h}, {c, h}};
    const std::vector<Vec2> left_t = arc({-h, -h}, h + c, 0.0, M_PI / 2.0);
    const std::vector<Vec2> right_t = arc({h, -h}, h - c, M_PI, M_PI / 2.0);

    for (int k = 0; k < 4; ++k) {
        m.lanes.push_back({std::string("in_") + approach[k], LaneKind::inbound, kLaneWidth, Polyline(rotate_all(in_t, k))});
        m.lanes.push_back({std::string("out_") + travel[k], LaneKind::outbound, kLaneWidth, Polyline(rotate_all(out_t, k))});
    }
    for (int k = 0; k < 4; ++k) {
        const std::string a = approach[k];
        const std::pair<Maneuver, const std::vector<Vec2>*> conns[3] = {
            {Maneuver::straight, &straight_t}, {Maneuver::left, &left_t}, {Maneuver::right, &right_t}};
        for (auto [man, tmpl] : conns) {
            const std::string cid = "c_" + a + "_" + std::string(maneuver_name(man));
            m.lanes.push_back({cid, LaneKind::connector, kLaneWidth, Polyline(rotate_all(*tmpl, k))});
            const int exit_dir = man == Maneuver::straight ? k : man == Maneuver::left ? (k + 1) % 4 : (k + 3) % 4;
            Route r;
            r.name = a + "_" + std::string(maneuver_name(man));
            r.approach = a;
            r.maneuver = man;
            r.lanes = {"in_" + a, cid, std::string("out_") + travel[exit_dir]};
            m.routes.push_back(std::move(r));
        }
    }
    for (int k = 0; k < 4; ++k)
        for (double off : {24.0, 14.0, 4.0}) m.spawn_slots.push_back({std::string("in_") + approach[k], off});
    for (int k = 0; k < 4; ++k)
        m.signals.push_back({std::string("in_") + approach[k], (k % 2 == 0) ? 0.0 : m.timing.green + m.timing.amber});
    m.box = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
    m.finalize();
    return m;
}

std::string format_map(const RoadMap& m) {
    using dsl::format_real;
    std::ostringstream os;
    os << "# lanes: id kind width points...; routes: name approach maneuver lanes...\n";
    os << "map " << m.id << '\n';
    os << "timing " << format_real(m.timing.green) << ' ' << format_real(m.timing.amber) << ' '
       << format_real(m.timing.red) << '\n';
    os << "box";
    for (auto p : m.box) os << ' ' << format_real(p.x) << ',' << format_real(p.y);
    os << '\n';
    for (const auto& l : m.lanes) {
        os << "lane " << l.id << ' ' << lane_kind_name(l.kind) << ' ' << format_real(l.width);
        for (auto p : l.centerline.points()) os << ' ' << format_real(p.x) << ',' << format_real(p.y);
        os << '\n';
    }
    for (const auto& r : m.routes) {
        os << "route " << r.name << ' ' << r.approach << ' ' << maneuver_name(r.maneuver);
        for (const auto& l : r.lanes) os << ' ' << l;
        os << '\n';
    }
    for (const auto& s : m.spawn_slots) os << "spawn " << s.lane << ' ' << format_real(s.offset) << '\n';
    for (const auto& h : m.signals) os << "signal " << h.lane << ' ' << format_real(h.offset) << '\n';
    return os.str();
}

namespace {

double to_real(const std::string& s, int line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error("map line " + std::to_string(line) + ": bad number '" + s + "'");
    return v;
}

Vec2 to_point(const std::string& s, int line) {
    const auto comma = s.find(',');
    if (comma == std::string::npos) throw Error("map line " + std::to_string(line) + ": bad point '" + s + "'");
    return {to_real(s.substr(0, comma), line), to_real(s.substr(comma + 1), line)};
}

}  // namespace

RoadMap parse_map(std::string_view text) {
    RoadMap m;
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string t; ls >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        auto need = [&](std::size_t n) {
            if (tok.size() < n) throw Error("map line " + std::to_string(line_no) + ": too few fields");
        };
        const std::string& kw = tok[0];
        if (kw == "map") {
            need(2);
            m.id = tok[1];
        } else if (kw == "timing") {
            need(4);
            m.timing = {to_real(tok[1], line_no), to_real(tok[2], line_no), to_real(tok[3], line_no)};
        } else if (kw == "box") {
            for (std::size_t i = 1; i < tok.size(); ++i) m.box.push_back(to_point(tok[i], line_no));
        } else if (kw == "lane") {
            need(6);
            Lane l;
            l.id = tok[1];
            if (tok[2] == "inbound") l.kind = LaneKind::inbound;
            else if (tok[2] == "outbound") l.kind = LaneKind::outbound;
            else if (tok[2] == "connector") l.kind = LaneKind::connector;
            else throw Error("map line " + std::to_string(line_no) + ": unknown lane kind '" + tok[2] + "'");
            l.width = to_real(tok[3], line_no);
            std::vector<Vec2> pts;
            for (std::size_t i = 4; i < tok.size(); ++i) pts.push_back(to_point(tok[i], line_no));
            l.centerline = Polyline(std::move(pts));
            m.lanes.push_back(std::move(l));
        } else if (kw == "route") {
            need(5);
            Route r;
            r.name = tok[1];
            r.approach = tok[2];
            auto man = maneuver_from_name(tok[3]);
            if (!man) throw Error("map line " + std::to_string(line_no) + ": unknown maneuver '" + tok[3] + "'");
            r.maneuver = *man;
            r.lanes.assign(tok.begin() + 4, tok.end());
            m.routes.push_back(std::move(r));
        } else if (kw == "spawn") {
            need(3);
            m.spawn_slots.push_back({tok[1], to_real(tok[2], line_no)});
        } else if (kw == "signal") {
            need(3);
            m.signals.push_back({tok[1], to_real(tok[2], line_no)});
        } else {
            throw Error("map line " + std::to_string(line_no) + ": unknown statement '" + kw + "'");
        }
    }
    m.finalize();
    return m;
}

RoadMap load_map(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open map file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_map(ss.str());
}

std::shared_ptr<const RoadMap> resolve_map(std::string_view map_id, const std::string& dir) {
    if (map_id == "fourway") {
        static const auto fourway = std::make_shared<const RoadMap>(make_fourway());
        return fourway;
    }
    if (dir.empty()) throw Error("unknown map_id '" + std::string(map_id) + "'");
    return std::make_shared<const RoadMap>(load_map(dir + "/" + std::string(map_id) + ".map"));
}

}  // namespace matsg::sim
