#include "matsg/core/posg.hpp"

namespace matsg::core {

std::string_view event_name(EventKind k) {
    switch (k) {
        case EventKind::collision: return "collision";
        case EventKind::route_complete: return "route_complete";
        case EventKind::off_route: return "off_route";
        case EventKind::timeout: return "timeout";
        case EventKind::deadlock: return "deadlock";
    }
    return "?";
}

}  // namespace matsg::core
